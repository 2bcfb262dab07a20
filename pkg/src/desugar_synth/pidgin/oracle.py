"""Reference desugaring of Pidgin source into Core Pidgin, written directly.

This is the hand-written translation the synthesised rules are checked
against; it deliberately shares no code with the meta-term machinery.
Children are translated left to right before any fresh name is drawn at a
node, which is also the order rule application uses, so both routes name
generated identifiers identically.
"""

from __future__ import annotations

from ..semantics import ErrorTag, EvalError, Gensym, Outcome
from ..terms import Term
from .interp import substitute_mvar


def _t(c, *args):
    return Term(c, args)


def _ds(t: Term, g: Gensym) -> Term:
    c, a = t.ctor, t.args
    if c == "STrue":
        return _t("CBool", True)
    if c == "SFalse":
        return _t("CBool", False)
    if c == "SNum":
        return _t("CNum", a[0])
    if c == "SStr":
        return _t("CStr", a[0])
    if c == "SVar":
        return _t("CVar", a[0])
    if c == "SPrim":
        ts = tuple(_ds(x, g) for x in a[1])
        if len(ts) == 1:
            return _t("CPrim1", a[0], ts[0])
        if len(ts) == 2:
            return _t("CPrim2", a[0], ts[0], ts[1])
        raise EvalError(ErrorTag.SyntaxError)
    if c == "SBetween":
        x, y, z = (_ds(s, g) for s in a)
        i1, i2, i3 = g(), g(), g()
        v1, v2, v3 = _t("CVar", i1), _t("CVar", i2), _t("CVar", i3)
        test = _t("CPrim2", "and", _t("CPrim2", "<", v1, v2), _t("CPrim2", "<", v2, v3))
        return _t("CLet", i1, x, _t("CLet", i2, y, _t("CLet", i3, z, test)))
    if c == "SIf":
        return _t("CIf", *(_ds(s, g) for s in a))
    if c == "SLam":
        return _t("CLam", a[0], _ds(a[1], g))
    if c == "SApp":
        f = _ds(a[0], g)
        return _t("CApp", f, tuple(_ds(x, g) for x in a[1]))
    if c == "SLet":
        x = _ds(a[1], g)
        return _t("CLet", a[0], x, _ds(a[2], g))
    if c == "SLetRec":
        x = _ds(a[1], g)
        return _t("CLetRec", a[0], x, _ds(a[2], g))
    if c == "SAssign":
        return _t("CAssign", a[0], _ds(a[1], g))
    if c == "SList":
        return _t("CList", tuple(_ds(x, g) for x in a[0]))
    if c == "SListCase":
        return _t("CListCase", *(_ds(s, g) for s in a))
    if c == "SFor":
        f = _ds(a[0], g)
        binds = [(b.args[0], _ds(b.args[1], g)) for b in a[1]]
        body = _ds(a[2], g)
        ids = tuple(i for i, _ in binds)
        vals = tuple(v for _, v in binds)
        return _t("CApp", f, (_t("CLam", ids, body), _t("CList", vals)))
    if c == "SListComp":
        head = _ds(a[0], g)
        return _t("MApp", _ds(a[1], g), head)
    if c == "QEmpty":
        u = g()
        return _t("MLam", u, _t("Return", _t("MVar", u)))
    if c == "QBind":
        src = _ds(a[1], g)
        q = _ds(a[2], g)
        u = g()
        body = _t("CLam", (a[0],), _t("MApp", q, _t("MVar", u)))
        return _t("MLam", u, _t("Bind", src, body))
    if c == "QGuard":
        cond = _ds(a[0], g)
        q = _ds(a[1], g)
        u = g()
        return _t("MLam", u, _t("CIf", cond, _t("MApp", q, _t("MVar", u)), _t("CList", ())))
    if c == "QLet":
        val = _ds(a[1], g)
        q = _ds(a[2], g)
        u = g()
        return _t("MLam", u, _t("CLet", a[0], val, _t("MApp", q, _t("MVar", u))))
    if c == "STryCatchFinally":
        body = _ds(a[0], g)
        handler = _ds(a[2], g)
        fin = _ds(a[3], g)
        v, j, s1, s2 = g(), g(), g(), g()
        rethrow = _t("CLet", s1, fin, _t("CThrow", _t("CVar", j)))
        guarded = _t("CTryCatch", _t("CTryCatch", body, a[1], handler), j, rethrow)
        return _t("CLet", v, guarded, _t("CLet", s2, fin, _t("CVar", v)))
    if c == "SThrow":
        return _t("CThrow", _ds(a[0], g))
    raise ValueError(f"no reference rule for constructor {c}")


def oracle_desugar(t: Term, gensym: Gensym = None) -> Outcome:
    """Translate a source term; ``SPrim`` with other than 1 or 2 operands is a
    ``SyntaxError``. The gensym counter restarts at every top-level call."""
    try:
        return Outcome.value(_ds(t, gensym or Gensym()))
    except EvalError as e:
        return Outcome.error(e.tag)


def desugar_outcome(o: Outcome) -> Outcome:
    """Lift the reference translation to outcomes: errors pass through."""
    if o.kind == "error":
        return o
    r = oracle_desugar(o.term)
    if r.kind == "error" or o.kind == "value":
        return r
    return Outcome.uncaught(r.term)


def expand_macros(t, fuel: int = 10_000):
    """Expand every ``MApp(MLam(i, body), arg)`` redex by textual
    substitution, innermost first.

    Raises :class:`EvalError` with ``MacroError`` for an unbound ``MVar`` or
    an ``MApp`` whose head does not expand to an ``MLam``, and ``Bot`` when
    expansion does not terminate within ``fuel`` substitutions.
    """
    budget = [fuel]

    def go(t, bound: frozenset):
        if type(t) is tuple:
            return tuple(go(x, bound) for x in t)
        if type(t) is not Term or not t.args:
            return t
        c = t.ctor
        if c == "MVar":
            if t.args[0] not in bound:
                raise EvalError(ErrorTag.MacroError)
            return t
        if c == "MLam":
            return Term(c, (t.args[0], go(t.args[1], bound | {t.args[0]})))
        if c == "MApp":
            h = go(t.args[0], bound)
            arg = go(t.args[1], bound)
            if h.ctor == "MLam":
                budget[0] -= 1
                if budget[0] < 0:
                    raise EvalError(ErrorTag.Bot)
                return go(substitute_mvar(h.args[1], h.args[0], arg), bound)
            if h.ctor == "MVar":
                # head is a parameter of an enclosing, not yet applied MLam
                return Term(c, (h, arg))
            raise EvalError(ErrorTag.MacroError)
        return Term(c, tuple(go(x, bound) for x in t.args))

    return go(t, frozenset())
