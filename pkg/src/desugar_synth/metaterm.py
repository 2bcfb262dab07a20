"""Meta-terms: candidate translation rules as typed derivations.

A rule for a source constructor ``f : s1 ... sn -> s`` is a meta-term typed
in the context ``x1 : s1', ..., xn : sn'`` (the core images of the argument
sorts). Right rules build core syntax (variables, constants, constructor
applications and the fresh-name templates); left rules take inputs apart
(list case analysis, unzipping) or abort with a syntax error.

Bound meta-variables are named canonically by the enumerator: the k-th
binder on a path from the root binds ``v{k}``; :func:`alpha_canonical`
brings any meta-term into that form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

from . import sexpr
from .sexpr import Atom
from .semantics import ErrorTag, EvalError, Gensym, Outcome
from .terms import BOOL, ID, OP, OPERATORS, Sort, Term


# --- syntax -----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class MVarRef:
    name: str


@dataclass(frozen=True, slots=True)
class ConstRef:
    value: Union[bool, str]


@dataclass(frozen=True, slots=True)
class CtorApp:
    ctor: str
    args: tuple = ()


@dataclass(frozen=True, slots=True)
class Fresh:
    """``let i = gensym() in CLet(i, value, body[CVar(i)/var])``"""
    var: str
    value: object
    body: object


@dataclass(frozen=True, slots=True)
class FreshTryCatch:
    """``let i = gensym() in CTryCatch(guarded, i, handler[CVar(i)/var])``"""
    var: str
    guarded: object
    handler: object


@dataclass(frozen=True, slots=True)
class MetaLambda:
    """``let i = gensym() in MLam(i, body[MVar(i)/var])``"""
    var: str
    body: object


@dataclass(frozen=True, slots=True)
class FreshPrime:
    """``let var = gensym() in body`` with ``var`` an identifier."""
    var: str
    body: object


@dataclass(frozen=True, slots=True)
class CaseList:
    scrutinee: str
    nil_branch: object
    head: str
    tail: str
    cons_branch: object


@dataclass(frozen=True, slots=True)
class UnzipLet:
    scrutinee: str
    left: str
    right: str
    body: object


@dataclass(frozen=True, slots=True)
class ThrowSyntaxError:
    pass


MetaTerm = Union[MVarRef, ConstRef, CtorApp, Fresh, FreshTryCatch, MetaLambda,
                 FreshPrime, CaseList, UnzipLet, ThrowSyntaxError]

THROW = ThrowSyntaxError()
LEFT_RULES = (CaseList, UnzipLet, ThrowSyntaxError)
FRESH_FAMILY = (Fresh, FreshTryCatch, MetaLambda, FreshPrime)

# rule names as used by hypothesis spaces
RULE_NAMES = {
    Fresh: "Fresh", FreshTryCatch: "FreshTryCatch", MetaLambda: "MetaLambda",
    FreshPrime: "FreshPrime", CaseList: "CaseList", UnzipLet: "UnzipLet",
    ThrowSyntaxError: "Throw",
}


@dataclass(frozen=True)
class MetaContext:
    bindings: Tuple[Tuple[str, Sort], ...] = ()

    def lookup(self, name: str) -> Optional[Sort]:
        for n, s in reversed(self.bindings):
            if n == name:
                return s
        return None

    def extend(self, *pairs: Tuple[str, Sort]) -> "MetaContext":
        names = {n for n, _ in pairs}
        kept = tuple(b for b in self.bindings if b[0] not in names)
        return MetaContext(kept + tuple(pairs))

    def remove(self, name: str) -> "MetaContext":
        return MetaContext(tuple(b for b in self.bindings if b[0] != name))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(n for n, _ in self.bindings)

    def __iter__(self):
        return iter(self.bindings)

    def __len__(self):
        return len(self.bindings)

    def __str__(self):
        return "{" + ", ".join(f"{n}:{s}" for n, s in self.bindings) + "}"


class MetaTypeError(Exception):
    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


def meta_size(m) -> int:
    """Number of derivation-rule applications; a case/unzip scrutinee is a
    reference to the context, not a premise, so it does not count."""
    tm = type(m)
    if tm is MVarRef or tm is ConstRef or tm is ThrowSyntaxError:
        return 1
    if tm is CtorApp:
        return 1 + sum(meta_size(a) for a in m.args)
    if tm is Fresh:
        return 1 + meta_size(m.value) + meta_size(m.body)
    if tm is FreshTryCatch:
        return 1 + meta_size(m.guarded) + meta_size(m.handler)
    if tm is MetaLambda or tm is FreshPrime:
        return 1 + meta_size(m.body)
    if tm is CaseList:
        return 1 + meta_size(m.nil_branch) + meta_size(m.cons_branch)
    if tm is UnzipLet:
        return 1 + meta_size(m.body)
    raise TypeError(f"not a meta-term: {m!r}")


def subterms(m):
    """Pre-order walk over a meta-term's nodes."""
    yield m
    tm = type(m)
    if tm is CtorApp:
        for a in m.args:
            yield from subterms(a)
    elif tm is Fresh:
        yield from subterms(m.value)
        yield from subterms(m.body)
    elif tm is FreshTryCatch:
        yield from subterms(m.guarded)
        yield from subterms(m.handler)
    elif tm in (MetaLambda, FreshPrime, UnzipLet):
        yield from subterms(m.body)
    elif tm is CaseList:
        yield from subterms(m.nil_branch)
        yield from subterms(m.cons_branch)


def layering_violation(m, below_right: bool = False) -> bool:
    """True if a left rule occurs inside a premise of a right rule."""
    tm = type(m)
    if tm in LEFT_RULES:
        if below_right:
            return True
        if tm is CaseList:
            return layering_violation(m.nil_branch) or layering_violation(m.cons_branch)
        if tm is UnzipLet:
            return layering_violation(m.body)
        return False
    return any(layering_violation(s, True) for s in _premises(m))


def fresh_below_ctor(m, below_ctor: bool = False) -> bool:
    """True if a fresh-family rule occurs inside a constructor application
    (what the fresh-at-top layer forbids)."""
    tm = type(m)
    if tm in FRESH_FAMILY and below_ctor:
        return True
    nested = below_ctor or tm is CtorApp
    return any(fresh_below_ctor(s, nested) for s in _premises(m))


def _premises(m):
    tm = type(m)
    if tm is CtorApp:
        return m.args
    if tm is Fresh:
        return (m.value, m.body)
    if tm is FreshTryCatch:
        return (m.guarded, m.handler)
    if tm in (MetaLambda, FreshPrime, UnzipLet):
        return (m.body,)
    if tm is CaseList:
        return (m.nil_branch, m.cons_branch)
    return ()


# --- alpha-canonical naming ----------------------------------------------------

def bound_name(depth: int) -> str:
    return f"v{depth}"


def alpha_canonical(m, depth: int = 0, ren: Optional[Dict[str, str]] = None):
    """Rename bound meta-variables to ``v{k}``, k the binder depth."""
    ren = ren or {}
    tm = type(m)
    if tm is MVarRef:
        n = ren.get(m.name, m.name)
        return m if n == m.name else MVarRef(n)
    if tm is ConstRef or tm is ThrowSyntaxError:
        return m
    if tm is CtorApp:
        return CtorApp(m.ctor, tuple(alpha_canonical(a, depth, ren) for a in m.args))
    if tm is Fresh:
        v = bound_name(depth)
        return Fresh(v, alpha_canonical(m.value, depth, ren),
                     alpha_canonical(m.body, depth + 1, {**ren, m.var: v}))
    if tm is FreshTryCatch:
        v = bound_name(depth)
        return FreshTryCatch(v, alpha_canonical(m.guarded, depth, ren),
                             alpha_canonical(m.handler, depth + 1, {**ren, m.var: v}))
    if tm is MetaLambda or tm is FreshPrime:
        v = bound_name(depth)
        return tm(v, alpha_canonical(m.body, depth + 1, {**ren, m.var: v}))
    if tm is CaseList:
        h, t = bound_name(depth), bound_name(depth + 1)
        return CaseList(ren.get(m.scrutinee, m.scrutinee),
                        alpha_canonical(m.nil_branch, depth, ren), h, t,
                        alpha_canonical(m.cons_branch, depth + 2,
                                        {**ren, m.head: h, m.tail: t}))
    if tm is UnzipLet:
        a, b = bound_name(depth), bound_name(depth + 1)
        return UnzipLet(ren.get(m.scrutinee, m.scrutinee), a, b,
                        alpha_canonical(m.body, depth + 2, {**ren, m.left: a, m.right: b}))
    raise TypeError(f"not a meta-term: {m!r}")


# --- typing -------------------------------------------------------------------

def const_sort(value) -> Sort:
    if type(value) is bool:
        return BOOL
    if type(value) is str and value in OPERATORS:
        return OP
    raise MetaTypeError("unknown constant", repr(value))


def type_check(m, ctx: MetaContext, expected: Sort, space) -> None:
    """Check ``ctx |- m : expected`` using only what ``space`` enables.

    ``space`` is a :class:`~desugar_synth.hypothesis.HypothesisSpace`.
    Raises :class:`MetaTypeError` naming the first problem.
    """
    if space.family == "relabel":
        _check_relabel(m, ctx, expected, space)
        return
    _Checker(space).check(m, ctx, expected, "L")


def _check_relabel(m, ctx, expected, space):
    if type(m) is not CtorApp:
        raise MetaTypeError("rule not enabled", "relabelling allows one constructor application")
    want = tuple(MVarRef(n) for n in ctx.names)
    if m.args != want:
        raise MetaTypeError("rule not enabled", "relabelling passes the arguments in order")
    sig = space.constructor_sig(m.ctor)
    if sig is None:
        raise MetaTypeError("constructor not enabled", m.ctor)
    if sig.result_sort != expected or sig.argument_sorts != tuple(s for _, s in ctx):
        raise MetaTypeError("sort mismatch", f"{m.ctor} does not have the constructor's signature")


class _Checker:
    def __init__(self, space):
        self.space = space
        self.cterm = space.core.program_sort

    def _rule(self, m):
        name = RULE_NAMES[type(m)]
        if name not in self.space.rules:
            raise MetaTypeError("rule not enabled", name)

    def check(self, m, ctx: MetaContext, sort: Sort, layer: str):
        tm = type(m)
        if tm in LEFT_RULES:
            self._rule(m)
            if layer != "L":
                raise MetaTypeError("layering", f"{RULE_NAMES[tm]} below a right rule")
            if tm is ThrowSyntaxError:
                return
            s = ctx.lookup(m.scrutinee)
            if s is None:
                raise MetaTypeError("unknown variable", m.scrutinee)
            rest = ctx.remove(m.scrutinee)
            if tm is CaseList:
                if not s.is_list:
                    raise MetaTypeError("sort mismatch", f"case on non-list {m.scrutinee} : {s}")
                self.check(m.nil_branch, rest, sort, "L")
                self.check(m.cons_branch, rest.extend((m.head, s.element), (m.tail, s)), sort, "L")
                return
            if not (s.is_list and s.element.is_pair):
                raise MetaTypeError("sort mismatch", f"unzip of {m.scrutinee} : {s}")
            a, b = s.element.params
            self.check(m.body, rest.extend((m.left, Sort.list_of(a)), (m.right, Sort.list_of(b))),
                       sort, "L")
            return
        if layer == "L":
            layer = "F" if self.space.fresh_at_top else "R"
        if tm in FRESH_FAMILY:
            self._rule(m)
            if layer == "R'":
                raise MetaTypeError("layering", f"{RULE_NAMES[tm]} below a constructor")
            if sort != self.cterm:
                raise MetaTypeError("sort mismatch", f"{RULE_NAMES[tm]} builds {self.cterm}, expected {sort}")
            if tm is Fresh:
                self.check(m.value, ctx, self.cterm, layer)
                self.check(m.body, ctx.extend((m.var, self.cterm)), self.cterm, layer)
            elif tm is FreshTryCatch:
                self.check(m.guarded, ctx, self.cterm, layer)
                self.check(m.handler, ctx.extend((m.var, self.cterm)), self.cterm, layer)
            elif tm is MetaLambda:
                self.check(m.body, ctx.extend((m.var, self.cterm)), self.cterm, layer)
            else:
                self.check(m.body, ctx.extend((m.var, ID)), self.cterm, layer)
            return
        if tm is MVarRef:
            s = ctx.lookup(m.name)
            if s is None:
                raise MetaTypeError("unknown variable", m.name)
            if s != sort:
                raise MetaTypeError("sort mismatch", f"{m.name} : {s}, expected {sort}")
            return
        if tm is ConstRef:
            if not self.space.allows_constant(m.value):
                raise MetaTypeError("constant not enabled", repr(m.value))
            if const_sort(m.value) != sort:
                raise MetaTypeError("sort mismatch", f"constant {m.value!r} is not a {sort}")
            return
        if tm is CtorApp:
            inner = "R'" if layer in ("F", "R'") else "R"
            if m.ctor in ("nil", "cons"):
                if m.ctor not in self.space.constructors:
                    raise MetaTypeError("constructor not enabled", m.ctor)
                if not sort.is_list:
                    raise MetaTypeError("sort mismatch", f"{m.ctor} builds a list, expected {sort}")
                if m.ctor == "nil":
                    if m.args:
                        raise MetaTypeError("arity mismatch", "nil")
                    return
                if len(m.args) != 2:
                    raise MetaTypeError("arity mismatch", "cons")
                self.check(m.args[0], ctx, sort.element, inner)
                self.check(m.args[1], ctx, sort, inner)
                return
            sig = self.space.constructor_sig(m.ctor)
            if sig is None:
                raise MetaTypeError("constructor not enabled", m.ctor)
            if sig.result_sort != sort:
                raise MetaTypeError("sort mismatch", f"{m.ctor} builds {sig.result_sort}, expected {sort}")
            if len(m.args) != sig.arity:
                raise MetaTypeError("arity mismatch", m.ctor)
            for a, s in zip(m.args, sig.argument_sorts):
                self.check(a, ctx, s, inner)
            return
        raise MetaTypeError("not a meta-term", repr(m))


# --- execution ------------------------------------------------------------------

_SYNTAX = ErrorTag.SyntaxError


def run_meta(m, env: Dict[str, object], gensym):
    """Instantiate ``m`` with meta-variable values ``env``.

    Values are core terms, identifier/operator/boolean literals, tuples for
    lists and ``pair`` terms for pairs. Raises :class:`EvalError` for the
    syntax-error rule.
    """
    tm = type(m)
    if tm is MVarRef:
        return env[m.name]
    if tm is CtorApp:
        c = m.ctor
        if c == "nil":
            return ()
        if c == "cons":
            h = run_meta(m.args[0], env, gensym)
            return (h,) + run_meta(m.args[1], env, gensym)
        return Term(c, tuple([run_meta(a, env, gensym) for a in m.args]))
    if tm is ConstRef:
        return m.value
    if tm is CaseList:
        lst = env[m.scrutinee]
        if not lst:
            return run_meta(m.nil_branch, env, gensym)
        e = dict(env)
        e[m.head] = lst[0]
        e[m.tail] = lst[1:]
        return run_meta(m.cons_branch, e, gensym)
    if tm is ThrowSyntaxError:
        raise EvalError(_SYNTAX)
    if tm is Fresh:
        i = gensym()
        v = run_meta(m.value, env, gensym)
        e = dict(env)
        e[m.var] = Term("CVar", (i,))
        return Term("CLet", (i, v, run_meta(m.body, e, gensym)))
    if tm is UnzipLet:
        pairs = env[m.scrutinee]
        e = dict(env)
        e[m.left] = tuple(p.args[0] for p in pairs)
        e[m.right] = tuple(p.args[1] for p in pairs)
        return run_meta(m.body, e, gensym)
    if tm is FreshTryCatch:
        i = gensym()
        g = run_meta(m.guarded, env, gensym)
        e = dict(env)
        e[m.var] = Term("CVar", (i,))
        return Term("CTryCatch", (g, i, run_meta(m.handler, e, gensym)))
    if tm is MetaLambda:
        i = gensym()
        e = dict(env)
        e[m.var] = Term("MVar", (i,))
        return Term("MLam", (i, run_meta(m.body, e, gensym)))
    if tm is FreshPrime:
        e = dict(env)
        e[m.var] = gensym()
        return run_meta(m.body, e, gensym)
    raise TypeError(f"not a meta-term: {m!r}")


def context_names(n: int) -> Tuple[str, ...]:
    return _NAMES[n] if n < len(_NAMES) else tuple(f"x{k + 1}" for k in range(n))


_NAMES = [tuple(f"x{k + 1}" for k in range(n)) for n in range(8)]


def apply_rule(m, args: Sequence, gensym, names: Optional[Sequence[str]] = None) -> Outcome:
    """Apply a rule to already-translated children (bound to ``x1..xn``)."""
    names = names or context_names(len(args))
    try:
        r = run_meta(m, dict(zip(names, args)), gensym)
    except EvalError as e:
        return Outcome.error(e.tag)
    return Outcome.value(r) if type(r) is Term else Outcome("value", r)


Interpretation = Mapping[str, object]


def _translate(t, rules, gensym):
    if type(t) is tuple:
        return tuple([_translate(x, rules, gensym) for x in t])
    if type(t) is not Term:
        return t
    if t.ctor == "SFBind":
        return Term("pair", (t.args[0], _translate(t.args[1], rules, gensym)))
    args = [_translate(a, rules, gensym) for a in t.args]
    try:
        rule = rules[t.ctor]
    except KeyError:
        raise KeyError(f"no rule for constructor {t.ctor}") from None
    return run_meta(rule, dict(zip(context_names(len(args)), args)), gensym)


def desugar_with(rules: Interpretation, t: Term, gensym=None) -> Outcome:
    """Translate ``t`` bottom-up, children left to right, one gensym state."""
    try:
        return Outcome.value(_translate(t, rules, gensym or Gensym()))
    except EvalError as e:
        return Outcome.error(e.tag)


# --- concrete syntax ------------------------------------------------------------

_KEYWORDS = {"fresh", "fresh-trycatch", "meta-lambda", "fresh-prime", "case", "unzip",
             "syntax-error", "const"}


def meta_to_sexpr(m) -> str:
    tm = type(m)
    if tm is MVarRef:
        return m.name
    if tm is ConstRef:
        v = m.value
        return "(const " + (("true" if v else "false") if type(v) is bool else sexpr.quote(v)) + ")"
    if tm is CtorApp:
        if not m.args:
            return f"({m.ctor})"
        return "(" + m.ctor + " " + " ".join(meta_to_sexpr(a) for a in m.args) + ")"
    if tm is Fresh:
        return f"(fresh {m.var} {meta_to_sexpr(m.value)} {meta_to_sexpr(m.body)})"
    if tm is FreshTryCatch:
        return f"(fresh-trycatch {m.var} {meta_to_sexpr(m.guarded)} {meta_to_sexpr(m.handler)})"
    if tm is MetaLambda:
        return f"(meta-lambda {m.var} {meta_to_sexpr(m.body)})"
    if tm is FreshPrime:
        return f"(fresh-prime {m.var} {meta_to_sexpr(m.body)})"
    if tm is CaseList:
        return (f"(case {m.scrutinee} {meta_to_sexpr(m.nil_branch)} {m.head} {m.tail} "
                f"{meta_to_sexpr(m.cons_branch)})")
    if tm is UnzipLet:
        return f"(unzip {m.scrutinee} {m.left} {m.right} {meta_to_sexpr(m.body)})"
    if tm is ThrowSyntaxError:
        return "(syntax-error)"
    raise TypeError(f"not a meta-term: {m!r}")


def _sym(node) -> str:
    if not isinstance(node, Atom) or node.quoted:
        raise sexpr.SexprError(f"expected a meta-variable name, got {node!r}")
    return node.text


def _from_node(node):
    if isinstance(node, Atom):
        return MVarRef(_sym(node))
    head = sexpr.head_name(node)
    rest = node[1:]

    def need(n):
        if len(rest) != n:
            raise sexpr.SexprError(f"({head} ...) takes {n} arguments, got {len(rest)}")

    if head == "const":
        need(1)
        v = rest[0]
        if isinstance(v, Atom) and not v.quoted and v.text in ("true", "false"):
            return ConstRef(v.text == "true")
        if isinstance(v, Atom) and v.text in OPERATORS:
            return ConstRef(v.text)
        raise sexpr.SexprError(f"unknown constant {v!r}")
    if head == "fresh":
        need(3)
        return Fresh(_sym(rest[0]), _from_node(rest[1]), _from_node(rest[2]))
    if head == "fresh-trycatch":
        need(3)
        return FreshTryCatch(_sym(rest[0]), _from_node(rest[1]), _from_node(rest[2]))
    if head == "meta-lambda":
        need(2)
        return MetaLambda(_sym(rest[0]), _from_node(rest[1]))
    if head == "fresh-prime":
        need(2)
        return FreshPrime(_sym(rest[0]), _from_node(rest[1]))
    if head == "case":
        need(5)
        return CaseList(_sym(rest[0]), _from_node(rest[1]), _sym(rest[2]), _sym(rest[3]),
                        _from_node(rest[4]))
    if head == "unzip":
        need(4)
        return UnzipLet(_sym(rest[0]), _sym(rest[1]), _sym(rest[2]), _from_node(rest[3]))
    if head == "syntax-error":
        need(0)
        return THROW
    return CtorApp(head, tuple(_from_node(a) for a in rest))


def parse_meta(text: str):
    return _from_node(sexpr.read(text))


# --- paper-style pretty printing --------------------------------------------------

def pretty(m, names: Optional[Dict[str, str]] = None, depth: int = 0) -> str:
    """Readable notation: ``let %i0 = gensym() in CLet(%i0, ..., ...)``."""
    names = names or {}
    tm = type(m)
    if tm is MVarRef:
        return names.get(m.name, m.name)
    if tm is ConstRef:
        v = m.value
        return ("true" if v else "false") if type(v) is bool else v
    if tm is CtorApp:
        if m.ctor in ("nil", "cons"):
            items, tail = [], m
            while type(tail) is CtorApp and tail.ctor == "cons":
                items.append(pretty(tail.args[0], names, depth))
                tail = tail.args[1]
            if type(tail) is CtorApp and tail.ctor == "nil":
                return "[" + ", ".join(items) + "]"
            return " : ".join(items + [pretty(tail, names, depth)])
        if not m.args:
            return m.ctor
        return m.ctor + "(" + ", ".join(pretty(a, names, depth) for a in m.args) + ")"
    if tm in FRESH_FAMILY:
        i = f"%i{depth}"
        if tm is Fresh:
            body = pretty(m.body, {**names, m.var: f"CVar({i})"}, depth + 1)
            return f"let {i} = gensym() in CLet({i}, {pretty(m.value, names, depth + 1)}, {body})"
        if tm is FreshTryCatch:
            h = pretty(m.handler, {**names, m.var: f"CVar({i})"}, depth + 1)
            return f"let {i} = gensym() in CTryCatch({pretty(m.guarded, names, depth + 1)}, {i}, {h})"
        if tm is MetaLambda:
            return f"let {i} = gensym() in MLam({i}, {pretty(m.body, {**names, m.var: f'MVar({i})'}, depth + 1)})"
        return f"let {i} = gensym() in {pretty(m.body, {**names, m.var: i}, depth + 1)}"
    if tm is CaseList:
        y = names.get(m.scrutinee, m.scrutinee)
        return (f"case {y} of [] -> {pretty(m.nil_branch, names, depth)}; "
                f"({m.head}:{m.tail}) -> {pretty(m.cons_branch, names, depth)}")
    if tm is UnzipLet:
        x = names.get(m.scrutinee, m.scrutinee)
        return f"let ({m.left}, {m.right}) = unzip({x}) in {pretty(m.body, names, depth)}"
    if tm is ThrowSyntaxError:
        return "syntax_error"
    raise TypeError(f"not a meta-term: {m!r}")
