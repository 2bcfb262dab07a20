"""Shared generators and loaders for the test suite."""

from __future__ import annotations

import functools
import random
from typing import Dict

from hypothesis import strategies as st

from desugar_synth.pidgin.syntax import SFALSE, STRUE, T, snum
from desugar_synth.semantics import StepBudget
from desugar_synth.tasks import load_task_file
from desugar_synth.terms import BOOL, ID, NUMBER, OP, OPERATORS, STRING, Sort, Term

SHIPPED = ("pidgin", "listcomp", "trycatch")
IDS = ("x", "y", "z")
SMALL = StepBudget(max_steps=2_000)


@functools.lru_cache(maxsize=None)
def task(name: str):
    return load_task_file(name)


def shipped_tests(name: str):
    return task(name).all_tests()


# --- hypothesis strategies for source programs ----------------------------------------------


def _src_leaf():
    return st.one_of(
        st.just(STRUE), st.just(SFALSE),
        st.integers(-3, 6).map(snum),
        st.sampled_from(IDS).map(lambda i: T("SVar", i)),
        st.sampled_from(("a", "bc", "")).map(lambda s: T("SStr", s)),
    )


def _src_node(ch):
    lst = st.lists(ch, max_size=3).map(tuple)
    ids = st.lists(st.sampled_from(IDS), max_size=2, unique=True).map(tuple)
    ident = st.sampled_from(IDS)
    three = st.tuples(ch, ch, ch)
    binds = st.lists(st.tuples(ident, ch).map(lambda b: T("SFBind", *b)), max_size=2).map(tuple)
    return st.one_of(
        three.map(lambda a: T("SBetween", *a)),
        st.tuples(st.sampled_from(OPERATORS), lst).map(lambda a: T("SPrim", *a)),
        three.map(lambda a: T("SIf", *a)),
        st.tuples(ids, ch).map(lambda a: T("SLam", *a)),
        st.tuples(ch, lst).map(lambda a: T("SApp", *a)),
        st.tuples(ident, ch, ch).map(lambda a: T("SLet", *a)),
        st.tuples(ident, ch, ch).map(lambda a: T("SLetRec", *a)),
        st.tuples(ident, ch).map(lambda a: T("SAssign", *a)),
        lst.map(lambda a: T("SList", a)),
        three.map(lambda a: T("SListCase", *a)),
        st.tuples(ch, binds, ch).map(lambda a: T("SFor", *a)),
    )


def source_programs(max_leaves: int = 10):
    """Well-sorted base Pidgin programs (open ones included)."""
    return st.recursive(_src_leaf(), _src_node, max_leaves=max_leaves)


# --- random values of a given core sort (plain RNG, for bulk checks) -----------------------


def random_core_term(rng: random.Random, depth: int = 2) -> Term:
    if depth <= 0 or rng.random() < 0.35:
        k = rng.randrange(4)
        if k == 0:
            return T("CNum", rng.randint(-2, 5))
        if k == 1:
            return T("CBool", rng.random() < 0.5)
        if k == 2:
            return T("CVar", rng.choice(IDS))
        return T("CStr", rng.choice(("a", "")))
    k = rng.randrange(6)
    sub = lambda: random_core_term(rng, depth - 1)
    if k == 0:
        return T("CPrim2", rng.choice(OPERATORS), sub(), sub())
    if k == 1:
        return T("CIf", sub(), sub(), sub())
    if k == 2:
        return T("CLet", rng.choice(IDS), sub(), sub())
    if k == 3:
        return T("CList", tuple(sub() for _ in range(rng.randrange(3))))
    if k == 4:
        return T("CApp", sub(), tuple(sub() for _ in range(rng.randrange(3))))
    return T("CLam", tuple(rng.sample(IDS, rng.randrange(3))), sub())


def random_value(rng: random.Random, sort: Sort):
    """A random already-translated argument of core sort ``sort``."""
    if sort == ID:
        return rng.choice(IDS)
    if sort == OP:
        return rng.choice(OPERATORS)
    if sort == NUMBER:
        return rng.randint(-2, 5)
    if sort == STRING:
        return rng.choice(("a", ""))
    if sort == BOOL:
        return rng.random() < 0.5
    if sort.is_list:
        return tuple(random_value(rng, sort.element) for _ in range(rng.randrange(4)))
    if sort.is_pair:
        return T("pair", random_value(rng, sort.params[0]), random_value(rng, sort.params[1]))
    return random_core_term(rng)


# --- random programs of a sublanguage (differential testing) -------------------------------

_LITERALS = {
    "Number": lambda rng: rng.randint(-2, 5),
    "String": lambda rng: rng.choice(("a", "")),
    "Id": lambda rng: rng.choice(("a", "b")),
    "Op": lambda rng: rng.choice(OPERATORS),
    "Bool": lambda rng: rng.random() < 0.5,
}


def random_program(rng: random.Random, sig, allowed, depth: int = 4, sort: Sort = None):
    """A random well-sorted term using only constructors in ``allowed``
    (plus list and pair structure)."""
    sort = sort or sig.program_sort
    if sort.is_literal:
        return _LITERALS[sort.name](rng)
    if sort.is_list:
        n = rng.choice((0, 1, 1, 2, 2, 3)) if depth > 0 else 0
        return tuple(random_program(rng, sig, allowed, depth - 1, sort.element) for _ in range(n))
    options = [c for c in sig.constructors_for(sort) if c.structural or c.name in allowed]
    leaves = [c for c in options if all(s.is_literal for s in c.argument_sorts)]
    short = depth <= 0 or rng.random() < 0.15
    pick = rng.choice(leaves if leaves and short else options)
    return Term(pick.name, tuple(random_program(rng, sig, allowed, depth - 1, s)
                                 for s in pick.argument_sorts))


def canonical_names(text: str) -> str:
    """Rename generated identifiers by order of first occurrence."""
    import re
    seen: Dict[str, str] = {}
    return re.sub(r"%g\d+", lambda m: seen.setdefault(m.group(0), f"%n{len(seen)}"), text)
