"""Acceptance criteria 1-9, one test each, with a summary line per criterion.

Criterion 7 (slow-tier synthesis, hours on one core) runs only when
DESUGAR_SYNTH_SLOW is set: ``1`` for every slow step, or a comma-separated
subset of ``SPrim,SFor,SBetween,STryCatchFinally``. The timeout-based
negative control of criterion 8 uses a 600 s cap unless
DESUGAR_SYNTH_CONTROL_TIMEOUT overrides it.
"""

import dataclasses
import os
import random
import subprocess
import sys
import time
from pathlib import Path

import pytest

from desugar_synth.enumeration import brute_force, constructor_enum
from desugar_synth.hypothesis import builtin_space, derive_context
from desugar_synth.metaterm import CtorApp, MVarRef, alpha_canonical, desugar_with, meta_size, meta_to_sexpr
from desugar_synth.pidgin import (
    PIDGIN, PIDGIN_LISTCOMP, PIDGIN_TRYCATCH, eval_core, eval_source, oracle_desugar,
)
from desugar_synth.pidgin.oracle import desugar_outcome
from desugar_synth.pidgin.syntax import SFALSE, STRUE, T, snum
from desugar_synth.semantics import kleisli_compose
from desugar_synth.solver import check_candidate, default_jobs, solve_extension, verify_membership
from desugar_synth.terms import parse_term, to_sexpr

from acceptance_log import criterion
from helpers import SHIPPED, canonical_names, random_program, task

SLOW = os.environ.get("DESUGAR_SYNTH_SLOW", "")
CONTROL_TIMEOUT = float(os.environ.get("DESUGAR_SYNTH_CONTROL_TIMEOUT", "600"))


def src(text, lang=PIDGIN):
    return parse_term(text, lang.source, lang.source.program_sort)


def through_core(translate, t, budget=None):
    """Translate with ``translate`` then run the core interpreter; the
    outcome is printed with generated names canonicalised."""
    o = translate(t)
    if o.is_value:
        o = eval_core(o.term, budget) if budget else eval_core(o.term)
    return canonical_names(o.to_sexpr())


def rules_translator(rules):
    return lambda t: desugar_with(rules, t)


def ratio(a, b):
    return max(a, b) / max(1, min(a, b))


# --- 1 -------------------------------------------------------------------------------


def test_criterion_1_interpreter_goldens():
    with criterion(1, "interpreter goldens") as c:
        t0 = time.monotonic()
        cases = [
            ('(SLet x (SNum 1) (SPrim "+" [(SVar x) (SVar x)]))', "(value (SNum 2))"),
            ("(SLet x (SNum 2) (SNum 1))", "(value (SNum 1))"),
            ('(SPrim "<" [])', "(error SyntaxError)"),
        ]
        for prog, want in cases:
            assert eval_source(src(prog)).to_sexpr() == want
        elapsed = time.monotonic() - t0
        assert elapsed < 1.0
        c.note(f"{len(cases)} programs exact")


# --- 2 -------------------------------------------------------------------------------


def test_criterion_2_reference_translation_passes_checker():
    with criterion(2, "reference translation passes soundness and adequacy") as c:
        t0 = time.monotonic()
        counts = []
        for name in SHIPPED:
            tests = task(name).all_tests()
            res = check_candidate(oracle_desugar, tests)
            assert res.passed, (name, str(res.counterexample))
            # the same translation written as rules
            assert check_candidate(task(name).known_rules(), tests).passed, name
            counts.append(len(tests))
        assert counts == [35, 4, 8]
        assert time.monotonic() - t0 < 10
        c.note("tests per suite " + "/".join(map(str, counts)))


# --- 3 -------------------------------------------------------------------------------


def test_criterion_3_composition_law():
    with criterion(3, "evaluation commutes with translation") as c:
        t0 = time.monotonic()
        n = 0
        for name in SHIPPED:
            for tc in task(name).all_tests():
                direct = desugar_outcome(eval_source(tc.program, tc.budget))
                via_core = kleisli_compose(oracle_desugar, lambda t: eval_core(t, tc.budget))(tc.program)
                assert direct == via_core, to_sexpr(tc.program)
                n += 1
        assert time.monotonic() - t0 < 10
        c.note(f"{n} programs bit-exact")


# --- 4 -------------------------------------------------------------------------------

ENUM_PAIRS = [
    (PIDGIN, "SIf", "H1"), (PIDGIN, "SPrim", "H1"), (PIDGIN, "SFor", "H1"),
    (PIDGIN, "SBetween", "H2"), (PIDGIN_LISTCOMP, "QBind", "Hlc"),
    (PIDGIN_TRYCATCH, "STryCatchFinally", "Htcf"), (PIDGIN, "SLet", "subst"),
]


def test_criterion_4_enumeration_matches_brute_force():
    with criterion(4, "enumeration equals an independent generator") as c:
        t0 = time.monotonic()
        total = 0
        for lang, ctor, sp in ENUM_PAIRS:
            f = lang.source.constructors[ctor]
            space = builtin_space(sp, lang.core)
            e = constructor_enum(f, space, lang.map_sort)
            assert e.cumulative(5) <= 10 ** 6
            canon = [alpha_canonical(m) for m in e.stream(max_size=5)]
            assert len(canon) == len(set(canon)), (ctor, sp, "duplicates")
            naive = brute_force(derive_context(f, lang.map_sort), lang.map_sort(f.result_sort), space, 5)
            assert set(canon) == set(naive), (ctor, sp)
            total += len(canon)
        assert time.monotonic() - t0 < 120
        c.note(f"{len(ENUM_PAIRS)} pairs, {total} terms up to size 5, no duplicates")


# --- 5 -------------------------------------------------------------------------------

SIZES = {"SPrim": 12, "SBetween": 14, "SFor": 11, "QBind": 10, "QLet": 7, "QGuard": 6,
         "QEmpty": 3, "STryCatchFinally": 13, "SThrow": 2}


def test_criterion_5_intended_rules_are_members():
    with criterion(5, "intended rules type-check, have the listed sizes and pass") as c:
        t0 = time.monotonic()
        seen = {}
        for name in SHIPPED:
            tf = task(name)
            rules = tf.known_rules(variants=True)
            for k, step in enumerate(tf.steps):
                t = tf.extension_task(k, rules)
                rep = verify_membership(rules, t)
                assert rep.passed, (name, step.name, [e.error for e in rep.entries],
                                    str(rep.check.counterexample))
                for e in rep.entries:
                    if e.constructor in SIZES:
                        seen[e.constructor] = e.size
        assert seen == SIZES
        assert time.monotonic() - t0 < 30
        full_between = meta_size(task("pidgin").intended["SBetween"])
        full_guard = meta_size(task("listcomp").intended["QGuard"])
        c.note("sizes " + " ".join(f"{k}={v}" for k, v in seen.items()))
        c.note(f"SBetween and QGuard use the shorter equivalent rules; the three-let SBetween "
               f"is {full_between} and the macro-wrapped QGuard is {full_guard}, both also pass")
        for name, ctor in (("pidgin", "SBetween"), ("listcomp", "QGuard")):
            tf = task(name)
            k = next(i for i, s in enumerate(tf.steps) if ctor in s.group)
            assert verify_membership(tf.known_rules(), tf.extension_task(k, tf.known_rules())).passed


# --- 6 -------------------------------------------------------------------------------

FAST = [
    # task, step, reference index, time limit
    ("pidgin", "S1", 1, 60), ("pidgin", "S2", 1, 60), ("pidgin", "S4", 1298, 60),
    ("pidgin", "S5", 10, 60), ("pidgin", "S6", 18, 60), ("pidgin", "S8", 171, 60),
    ("pidgin", "S9", 1813, 60), ("pidgin", "S10", 132, 60), ("pidgin", "S11", 3, 60),
    ("pidgin", "S12", 207, 60),
    ("listcomp", "QEmpty", None, 1), ("listcomp", "QGuard", None, 60),
    ("listcomp", "QLet", None, 60), ("trycatch", "SThrow", None, 1),
]


def _equivalent_on_tests(found, tests):
    tr = rules_translator(found)
    return all(through_core(tr, tc.program, tc.budget) == through_core(oracle_desugar, tc.program, tc.budget)
               for tc in tests)


def test_criterion_6_fast_tier_synthesis():
    with criterion(6, "fast-tier synthesis") as c:
        rows = []
        for name, step, ref, limit in FAST:
            tf = task(name)
            k = tf.step_index(step)
            t = tf.extension_task(k, tf.known_rules(), jobs=default_jobs())
            res = solve_extension(t)
            assert res.found, (step, res.status)
            assert res.elapsed < limit, (step, res.elapsed)
            found = {**tf.known_rules(), **res.rules}
            assert _equivalent_on_tests(found, t.tests), step
            if name == "pidgin":
                # relabellings must come out exactly as written
                for ctor, m in res.rules.items():
                    assert m == tf.intended[ctor], (step, meta_to_sexpr(m))
            if ref is not None:
                assert ratio(res.index, ref) <= 10, (step, res.index, ref)
            rows.append(f"{step}@{res.index}/{res.elapsed:.1f}s")
        c.note(" ".join(rows))


# --- 7 -------------------------------------------------------------------------------

SLOW_STEPS = [
    # task, step, time cap in seconds
    ("pidgin", "S3", "SPrim", 4 * 189),
    ("pidgin", "S13", "SFor", 4 * 569),
    ("pidgin", "S7", "SBetween", 3 * 3600),
    ("trycatch", "STryCatchFinally", "STryCatchFinally", 3 * 3600),
]


def _sublanguage(tf, k):
    allowed = set(tf.base_rules)
    for s in tf.steps[:k + 1]:
        allowed |= set(s.group)
    return allowed


def differential_agreement(tf, k, rules, n=1000, seed=0):
    """Fraction of random in-sublanguage programs on which ``rules`` and the
    reference translation give the same core outcome."""
    rng = random.Random(seed)
    allowed = _sublanguage(tf, k)
    tr = rules_translator(rules)
    agree = 0
    for _ in range(n):
        p = random_program(rng, tf.language.source, allowed, depth=5)
        if "SLet" in allowed:
            # bind the generator's variable names so fewer programs stop at an unbound name
            p = T("SLet", "a", snum(rng.randint(0, 3)), T("SLet", "b", STRUE if rng.random() < 0.5 else SFALSE, p))
        agree += through_core(tr, p) == through_core(oracle_desugar, p)
    return agree / n


def test_differential_agreement_of_shipped_variants():
    """The machinery of criterion 7 on the shorter equivalent rules."""
    for name, step in (("pidgin", "S7"), ("listcomp", "QGuard")):
        tf = task(name)
        k = tf.step_index(step)
        assert differential_agreement(tf, k, tf.known_rules(variants=True), n=300) >= 0.99


def test_differential_agreement_detects_a_wrong_rule():
    tf = task("pidgin")
    k = tf.step_index("S8")
    bad = {**tf.known_rules(), "SIf": CtorApp("CIf", tuple(MVarRef(f"x{i}") for i in (1, 3, 2)))}
    # random programs rarely reach a branch that tells the two apart, so the
    # margin under the 0.99 threshold used by the slow tier is small
    assert differential_agreement(tf, k, bad, n=1000) < 0.99


def test_criterion_7_slow_tier_synthesis():
    with criterion(7, "slow-tier synthesis") as c:
        if not SLOW:
            pytest.skip("set DESUGAR_SYNTH_SLOW=1 to run (hours on one core)")
        wanted = None if SLOW == "1" else set(SLOW.split(","))
        failures = []
        for name, step, ctor, cap in SLOW_STEPS:
            if wanted is not None and ctor not in wanted:
                continue
            tf = task(name)
            k = tf.step_index(step)
            t = tf.extension_task(k, tf.known_rules(), jobs=default_jobs(), timeout=cap)
            res = solve_extension(t)
            if not res.found:
                failures.append(ctor)
                c.note(f"{ctor} {res.status} after {res.candidates_tried} candidates in {res.elapsed:.0f}s")
                continue
            rules = {**tf.known_rules(), **res.rules}
            ok = check_candidate(rules, t.tests, t.budget).passed
            agree = differential_agreement(tf, k, rules)
            c.note(f"{ctor} {meta_to_sexpr(res.rules[ctor])} size {res.size} index {res.index} "
                   f"in {res.elapsed:.0f}s, agreement {agree:.1%}")
            if not (ok and agree >= 0.99 and res.elapsed <= cap):
                failures.append(ctor)
        assert not failures, failures


# --- 8 -------------------------------------------------------------------------------


def test_criterion_8_negative_controls():
    with criterion(8, "negative controls") as c:
        pid = task("pidgin")
        # SLetRec as a plain let cannot pass the recursive test
        k10 = pid.step_index("S10")
        as_let = {**pid.known_rules(), "SLetRec": CtorApp("CLet", tuple(MVarRef(f"x{i}") for i in (1, 2, 3)))}
        res = check_candidate(as_let, pid.steps[k10].tests)
        assert not res.passed and res.counterexample.clause == "soundness"
        c.note(f"SLetRec as CLet: {res.counterexample.clause} failure")

        # SBetween in the large space runs out of time
        k7 = pid.step_index("S7")
        t = pid.extension_task(k7, pid.known_rules(), jobs=default_jobs(), timeout=CONTROL_TIMEOUT,
                               space_override="H1")
        r = solve_extension(t)
        assert r.status == "timeout", (r.status, r.index)
        c.note(f"SBetween in H1: timeout after {r.candidates_tried} candidates ({CONTROL_TIMEOUT:.0f}s cap)")

        # committing to SListComp and QEmpty together picks a rule that drops the qualifiers
        early = task("listcomp_early")
        first = solve_extension(early.extension_task(0, early.base_rules))
        assert first.found
        comp = first.rules["SListComp"]
        assert "x2" not in meta_to_sexpr(comp)
        second = solve_extension(dataclasses.replace(
            early.extension_task(1, {**early.base_rules, **first.rules}), timeout=120))
        assert second.status in ("timeout", "exhausted")
        c.note(f"early commitment: SListComp = {meta_to_sexpr(comp)} at {first.index}, "
               f"then QBind {second.status}")


# --- 9 -------------------------------------------------------------------------------


def test_criterion_9_property_suite_standalone():
    with criterion(9, "property suites run standalone") as c:
        here = Path(__file__).parent
        t0 = time.monotonic()
        r = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                            str(here / "test_properties.py")],
                           capture_output=True, text=True, timeout=600, cwd=here.parent)
        elapsed = time.monotonic() - t0
        assert r.returncode == 0, r.stdout[-2000:]
        assert elapsed < 300
        c.note(r.stdout.strip().splitlines()[-1])
