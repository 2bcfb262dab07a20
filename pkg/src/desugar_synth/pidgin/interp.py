"""Bounded interpreters for Core Pidgin and (directly) for Pidgin source.

Both machines share one runtime model. Values are Python ints, strs, bools,
tuples (lists) and closures; every ``let``/``letrec`` binding and every
parameter of an application gets a fresh store location ``$n``, and an
environment maps identifiers to locations. Assignment writes the location
an identifier resolves to; assigning an undeclared identifier creates a
store entry under the raw name, which later reads then see.

Object-language exceptions (``CThrow``/``SThrow``) travel on their own
channel (:class:`ObjectThrow`) and are only caught by try/catch; meta-level
errors (:class:`EvalError`) are never catchable.
"""

from __future__ import annotations

import sys
import time
from typing import Dict

from ..semantics import DEFAULT_BUDGET, ErrorTag, EvalError, Outcome, StepBudget
from ..terms import Term
from .syntax import STRUE, SFALSE, rename_core, rename_source

# Deep but bounded recursion: StepBudget.max_depth is the real guard, and
# it is clamped so the interpreter's host stack can never overflow.
if sys.getrecursionlimit() < 20_000:
    sys.setrecursionlimit(20_000)
SAFE_DEPTH = 4_000

_TYPE = ErrorTag.TypeError


class ObjectThrow(Exception):
    def __init__(self, value):
        super().__init__("uncaught object exception")
        self.value = value


class Closure:
    __slots__ = ("params", "body", "env")

    def __init__(self, params, body, env):
        self.params = params
        self.body = body
        self.env = env


class MacroClosure:
    """An evaluated ``MLam``. It captures no environment: applying it
    substitutes the argument text and evaluates where the ``MApp`` is."""

    __slots__ = ("param", "body")

    def __init__(self, param, body):
        self.param = param
        self.body = body


class Thunk:
    """A letrec-bound expression, re-evaluated on every read."""

    __slots__ = ("expr", "env")

    def __init__(self, expr, env):
        self.expr = expr
        self.env = env


def prim1(op: str, v):
    if op == "0-":
        if type(v) is int:
            return -v
    elif op == "not":
        if type(v) is bool:
            return not v
    raise EvalError(_TYPE)


def prim2(op: str, v1, v2):
    t1, t2 = type(v1), type(v2)
    if op == "+":
        if t1 is int and t2 is int:
            return v1 + v2
        if t1 is tuple and t2 is tuple:
            return v1 + v2
    elif op == "-":
        if t1 is int and t2 is int:
            return v1 - v2
    elif op == "<":
        if t1 is int and t2 is int:
            return v1 < v2
    elif op == ">":
        if t1 is int and t2 is int:
            return v1 > v2
    elif op == "and":
        if t1 is bool and t2 is bool:
            return v1 and v2
    elif op == "or":
        if t1 is bool and t2 is bool:
            return v1 or v2
    raise EvalError(_TYPE)


class Machine:
    """Store, step accounting and application shared by both languages."""

    DISPATCH: Dict[str, object] = {}  # constructor name -> handler(self, args, env)

    def __init__(self, budget: StepBudget):
        self.max_steps = budget.max_steps
        self.max_depth = min(budget.max_depth, SAFE_DEPTH)
        self.deadline = None if budget.max_seconds is None else time.monotonic() + budget.max_seconds
        self.steps = 0
        self.depth = 0
        self.next_loc = 0
        self.store: Dict[str, object] = {}

    def ev(self, t: Term, env):
        s = self.steps = self.steps + 1
        if s > self.max_steps:
            raise EvalError(ErrorTag.Bot)
        if self.deadline is not None and not s & 1023 and time.monotonic() > self.deadline:
            raise EvalError(ErrorTag.Bot)
        d = self.depth = self.depth + 1
        if d > self.max_depth:
            raise EvalError(ErrorTag.Bot)
        # no try/finally: an exception abandons the depth count, and the
        # try/catch handlers that resume evaluation restore it themselves
        r = self.DISPATCH[t.ctor](self, t.args, env)
        self.depth = d - 1
        return r

    def alloc(self, v) -> str:
        loc = f"${self.next_loc}"
        self.next_loc += 1
        self.store[loc] = v
        return loc

    def read(self, name: str, env):
        try:
            v = self.store[env.get(name, name)]
        except KeyError:
            raise EvalError(ErrorTag.UnboundVariable) from None
        if type(v) is Thunk:
            return self.ev(v.expr, v.env)
        return v

    def bind(self, env, name, v):
        e = dict(env)
        e[name] = self.alloc(v)
        return e

    def apply(self, f, vs):
        ps = f.params
        if len(ps) != len(vs):
            if len(vs) == 1 and type(vs[0]) is tuple and len(vs[0]) == len(ps):
                vs = vs[0]
            else:
                raise EvalError(ErrorTag.ArgumentNumberMismatchError)
        env = dict(f.env)
        for p, v in zip(ps, vs):
            env[p] = self.alloc(v)
        return self.ev(f.body, env)

    def reify(self, v) -> Term:
        raise NotImplementedError

    def run(self, t: Term) -> Outcome:
        try:
            return Outcome.value(self.reify(self.ev(t, {})))
        except EvalError as e:
            return Outcome.error(e.tag)
        except ObjectThrow as e:
            return Outcome.uncaught(self.reify(e.value))
        except RecursionError:
            return Outcome.error(ErrorTag.Bot)


class CoreMachine(Machine):
    def __init__(self, budget: StepBudget = DEFAULT_BUDGET):
        super().__init__(budget)

    def _var(self, a, env):
        return self.read(a[0], env)

    def _lit(self, a, env):
        return a[0]

    def _prim1(self, a, env):
        return prim1(a[0], self.ev(a[1], env))

    def _prim2(self, a, env):
        v1 = self.ev(a[1], env)
        v2 = self.ev(a[2], env)
        return prim2(a[0], v1, v2)

    def _if(self, a, env):
        c = self.ev(a[0], env)
        if type(c) is not bool:
            raise EvalError(_TYPE)
        return self.ev(a[1] if c else a[2], env)

    def _let(self, a, env):
        v = self.ev(a[1], env)
        return self.ev(a[2], self.bind(env, a[0], v))

    def _letrec(self, a, env):
        e = dict(env)
        loc = self.alloc(None)
        e[a[0]] = loc
        self.store[loc] = Thunk(a[1], e)
        return self.ev(a[2], e)

    def _lam(self, a, env):
        return Closure(a[0], a[1], env)

    def _app(self, a, env):
        f = self.ev(a[0], env)
        if type(f) is not Closure:
            raise EvalError(_TYPE)
        return self.apply(f, [self.ev(x, env) for x in a[1]])

    def _assign(self, a, env):
        v = self.ev(a[1], env)
        self.store[env.get(a[0], a[0])] = v
        return v

    def _list(self, a, env):
        return tuple(self.ev(x, env) for x in a[0])

    def _listcase(self, a, env):
        lst = self.ev(a[0], env)
        if type(lst) is not tuple:
            raise EvalError(_TYPE)
        if not lst:
            return self.ev(a[1], env)
        f = self.ev(a[2], env)
        if type(f) is not Closure:
            raise EvalError(_TYPE)
        return self.apply(f, [lst[0], lst[1:]])

    # macros: textual substitution performed when the application is reached

    def _mvar(self, a, env):
        raise EvalError(ErrorTag.MacroError)

    def _mlam(self, a, env):
        return MacroClosure(a[0], a[1])

    def _mapp(self, a, env):
        m = self.ev(a[0], env)
        if type(m) is not MacroClosure:
            raise EvalError(ErrorTag.MacroError)
        return self.ev(substitute_mvar(m.body, m.param, a[1]), env)

    def _return(self, a, env):
        return (self.ev(a[0], env),)

    def _bind(self, a, env):
        lst = self.ev(a[0], env)
        if type(lst) is not tuple:
            raise EvalError(_TYPE)
        f = self.ev(a[1], env)
        if type(f) is not Closure:
            raise EvalError(_TYPE)
        out = ()
        for x in lst:
            r = self.apply(f, [x])
            if type(r) is not tuple:
                raise EvalError(_TYPE)
            out += r
        return out

    def _trycatch(self, a, env):
        depth = self.depth
        try:
            return self.ev(a[0], env)
        except ObjectThrow as ex:
            self.depth = depth
            return self.ev(a[2], self.bind(env, a[1], ex.value))

    def _throw(self, a, env):
        raise ObjectThrow(self.ev(a[0], env))

    def reify(self, v) -> Term:
        tv = type(v)
        if tv is int:
            return Term("CNum", (v,))
        if tv is bool:
            return Term("CBool", (v,))
        if tv is str:
            return Term("CStr", (v,))
        if tv is tuple:
            return Term("CList", (tuple(self.reify(x) for x in v),))
        if tv is Closure:
            m = {k: loc for k, loc in v.env.items() if k not in v.params}
            return Term("CLam", (v.params, rename_core(v.body, m)))
        if tv is MacroClosure:
            return Term("MLam", (v.param, v.body))
        raise TypeError(f"not a runtime value: {v!r}")


def substitute_mvar(t, name: str, arg: Term):
    """Replace ``MVar(name)`` by ``arg``; an ``MLam`` rebinding ``name`` shadows."""
    if type(t) is tuple:
        return tuple(substitute_mvar(x, name, arg) for x in t)
    if type(t) is not Term:
        return t
    if t.ctor == "MVar":
        return arg if t.args[0] == name else t
    if t.ctor == "MLam" and t.args[0] == name:
        return t
    if not t.args:
        return t
    return Term(t.ctor, tuple(substitute_mvar(x, name, arg) for x in t.args))


class SourceMachine(Machine):
    """Direct evaluator for Pidgin source, observably matching the desugared
    program under the core machine."""

    def __init__(self, budget: StepBudget = DEFAULT_BUDGET):
        super().__init__(budget)

    _var = CoreMachine._var
    _lit = CoreMachine._lit
    _if = CoreMachine._if
    _let = CoreMachine._let
    _letrec = CoreMachine._letrec
    _lam = CoreMachine._lam
    _app = CoreMachine._app
    _assign = CoreMachine._assign
    _list = CoreMachine._list
    _listcase = CoreMachine._listcase
    _throw = CoreMachine._throw

    def _true(self, a, env):
        return True

    def _false(self, a, env):
        return False

    def _between(self, a, env):
        v1 = self.ev(a[0], env)
        v2 = self.ev(a[1], env)
        v3 = self.ev(a[2], env)
        lo = prim2("<", v1, v2)
        hi = prim2("<", v2, v3)
        return lo and hi

    def _prim(self, a, env):
        ts = a[1]
        if len(ts) == 1:
            return prim1(a[0], self.ev(ts[0], env))
        v1 = self.ev(ts[0], env)
        v2 = self.ev(ts[1], env)
        return prim2(a[0], v1, v2)

    def _for(self, a, env):
        f = self.ev(a[0], env)
        if type(f) is not Closure:
            raise EvalError(_TYPE)
        ids = tuple(b.args[0] for b in a[1])
        body = Closure(ids, a[2], env)
        vals = tuple(self.ev(b.args[1], env) for b in a[1])
        return self.apply(f, [body, vals])

    def _listcomp(self, a, env):
        return self._qual(a[1], a[0], env)

    def _qual(self, q, head, env):
        c = q.ctor
        if c == "QEmpty":
            return (self.ev(head, env),)
        if c == "QGuard":
            g = self.ev(q.args[0], env)
            if type(g) is not bool:
                raise EvalError(_TYPE)
            return self._qual(q.args[1], head, env) if g else ()
        x, e, rest = q.args
        v = self.ev(e, env)
        if c == "QLet":
            return self._qual(rest, head, self.bind(env, x, v))
        if type(v) is not tuple:
            raise EvalError(_TYPE)
        out = ()
        for item in v:
            out += self._qual(rest, head, self.bind(env, x, item))
        return out

    def _tcf(self, a, env):
        body, i, handler, fin = a
        depth = self.depth
        try:
            try:
                v = self.ev(body, env)
            except ObjectThrow as ex:
                self.depth = depth
                v = self.ev(handler, self.bind(env, i, ex.value))
        except ObjectThrow as ex2:
            self.depth = depth
            self.ev(fin, env)
            raise ex2
        self.ev(fin, env)
        return v

    def reify(self, v) -> Term:
        tv = type(v)
        if tv is int:
            return Term("SNum", (v,))
        if tv is bool:
            return STRUE if v else SFALSE
        if tv is str:
            return Term("SStr", (v,))
        if tv is tuple:
            return Term("SList", (tuple(self.reify(x) for x in v),))
        if tv is Closure:
            m = {k: loc for k, loc in v.env.items() if k not in v.params}
            return Term("SLam", (v.params, rename_source(v.body, m)))
        raise TypeError(f"not a runtime value: {v!r}")


CoreMachine.DISPATCH = {
    "CVar": CoreMachine._var, "CNum": CoreMachine._lit, "CStr": CoreMachine._lit,
    "CBool": CoreMachine._lit, "CPrim1": CoreMachine._prim1, "CPrim2": CoreMachine._prim2,
    "CIf": CoreMachine._if, "CLet": CoreMachine._let, "CLetRec": CoreMachine._letrec,
    "CLam": CoreMachine._lam, "CApp": CoreMachine._app, "CAssign": CoreMachine._assign,
    "CList": CoreMachine._list, "CListCase": CoreMachine._listcase,
    "MVar": CoreMachine._mvar, "MLam": CoreMachine._mlam, "MApp": CoreMachine._mapp,
    "Return": CoreMachine._return, "Bind": CoreMachine._bind,
    "CTryCatch": CoreMachine._trycatch, "CThrow": CoreMachine._throw,
}

SourceMachine.DISPATCH = {
    "SVar": SourceMachine._var, "SNum": SourceMachine._lit, "SStr": SourceMachine._lit,
    "STrue": SourceMachine._true, "SFalse": SourceMachine._false,
    "SBetween": SourceMachine._between, "SPrim": SourceMachine._prim, "SIf": SourceMachine._if,
    "SLam": SourceMachine._lam, "SApp": SourceMachine._app, "SLet": SourceMachine._let,
    "SLetRec": SourceMachine._letrec, "SAssign": SourceMachine._assign,
    "SList": SourceMachine._list, "SListCase": SourceMachine._listcase, "SFor": SourceMachine._for,
    "SListComp": SourceMachine._listcomp,
    "STryCatchFinally": SourceMachine._tcf, "SThrow": SourceMachine._throw,
}


def has_bad_prim(t) -> bool:
    """True if some ``SPrim`` has other than one or two operands; such
    programs are rejected before evaluation, like the desugaring does."""
    if type(t) is tuple:
        return any(has_bad_prim(x) for x in t)
    if type(t) is not Term:
        return False
    if t.ctor == "SPrim" and len(t.args[1]) not in (1, 2):
        return True
    return any(has_bad_prim(x) for x in t.args)


def eval_core(t: Term, budget: StepBudget = DEFAULT_BUDGET) -> Outcome:
    return CoreMachine(budget).run(t)


def eval_source(t: Term, budget: StepBudget = DEFAULT_BUDGET) -> Outcome:
    if has_bad_prim(t):
        return Outcome.error(ErrorTag.SyntaxError)
    return SourceMachine(budget).run(t)


class CoreInterpreter:
    """:class:`~desugar_synth.semantics.Interpreter` over a core signature."""

    def __init__(self, signature):
        self.signature = signature

    def evaluate(self, t: Term, budget: StepBudget = DEFAULT_BUDGET) -> Outcome:
        return eval_core(t, budget)


class SourceInterpreter:
    def __init__(self, signature):
        self.signature = signature

    def evaluate(self, t: Term, budget: StepBudget = DEFAULT_BUDGET) -> Outcome:
        return eval_source(t, budget)
