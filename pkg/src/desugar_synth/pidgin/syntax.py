"""Signatures of the Pidgin source and core languages and their extensions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

from ..terms import BOOL, ID, NUMBER, OP, STRING, ConstructorSig, Signature, Sort, Term

STERM = Sort("STerm")
SQUAL = Sort("SQual")
SFORBIND = Sort.pair_of(ID, STERM, name="SForBind")
CTERM = Sort("CTerm")
CPAIR = Sort.pair_of(ID, CTERM)

L_ID = Sort.list_of(ID)
L_STERM = Sort.list_of(STERM)
L_SFORBIND = Sort.list_of(SFORBIND)
L_CTERM = Sort.list_of(CTERM)
L_CPAIR = Sort.list_of(CPAIR)


def _c(name, args, result, structural=False):
    return ConstructorSig(name, tuple(args), result, structural)


SOURCE_BASE = [
    _c("STrue", [], STERM),
    _c("SFalse", [], STERM),
    _c("SNum", [NUMBER], STERM),
    _c("SVar", [ID], STERM),
    _c("SStr", [STRING], STERM),
    _c("SBetween", [STERM, STERM, STERM], STERM),
    _c("SPrim", [OP, L_STERM], STERM),
    _c("SIf", [STERM, STERM, STERM], STERM),
    _c("SLam", [L_ID, STERM], STERM),
    _c("SApp", [STERM, L_STERM], STERM),
    _c("SLet", [ID, STERM, STERM], STERM),
    _c("SLetRec", [ID, STERM, STERM], STERM),
    _c("SAssign", [ID, STERM], STERM),
    _c("SList", [L_STERM], STERM),
    _c("SListCase", [STERM, STERM, STERM], STERM),
    _c("SFor", [STERM, L_SFORBIND, STERM], STERM),
    _c("SFBind", [ID, STERM], SFORBIND, structural=True),
]

SOURCE_LISTCOMP = [
    _c("SListComp", [STERM, SQUAL], STERM),
    _c("QEmpty", [], SQUAL),
    _c("QBind", [ID, STERM, SQUAL], SQUAL),
    _c("QGuard", [STERM, SQUAL], SQUAL),
    _c("QLet", [ID, STERM, SQUAL], SQUAL),
]

SOURCE_TRYCATCH = [
    _c("STryCatchFinally", [STERM, ID, STERM, STERM], STERM),
    _c("SThrow", [STERM], STERM),
]

CORE_BASE = [
    _c("CVar", [ID], CTERM),
    _c("CPrim1", [OP, CTERM], CTERM),
    _c("CPrim2", [OP, CTERM, CTERM], CTERM),
    _c("CNum", [NUMBER], CTERM),
    _c("CStr", [STRING], CTERM),
    _c("CBool", [BOOL], CTERM),
    _c("CIf", [CTERM, CTERM, CTERM], CTERM),
    _c("CLet", [ID, CTERM, CTERM], CTERM),
    _c("CLetRec", [ID, CTERM, CTERM], CTERM),
    _c("CLam", [L_ID, CTERM], CTERM),
    _c("CApp", [CTERM, L_CTERM], CTERM),
    _c("CAssign", [ID, CTERM], CTERM),
    _c("CList", [L_CTERM], CTERM),
    _c("CListCase", [CTERM, CTERM, CTERM], CTERM),
    _c("pair", [ID, CTERM], CPAIR, structural=True),
]

CORE_LISTCOMP = [
    _c("MVar", [ID], CTERM),
    _c("MLam", [ID, CTERM], CTERM),
    _c("MApp", [CTERM, CTERM], CTERM),
    _c("Return", [CTERM], CTERM),
    _c("Bind", [CTERM, CTERM], CTERM),
]

CORE_TRYCATCH = [
    _c("CTryCatch", [CTERM, ID, CTERM], CTERM),
    _c("CThrow", [CTERM], CTERM),
]

# source sort -> core sort; literal sorts map to themselves
SORT_MAP: Dict[Sort, Sort] = {
    STERM: CTERM,
    SQUAL: CTERM,
    SFORBIND: CPAIR,
    L_STERM: L_CTERM,
    L_SFORBIND: L_CPAIR,
    L_ID: L_ID,
    ID: ID,
    NUMBER: NUMBER,
    STRING: STRING,
    OP: OP,
    BOOL: BOOL,
}


@dataclass(frozen=True)
class LanguagePair:
    name: str
    source: Signature
    core: Signature
    sort_map: Tuple[Tuple[Sort, Sort], ...]

    def map_sort(self, s: Sort) -> Sort:
        for a, b in self.sort_map:
            if a == s:
                return b
        raise KeyError(s)

    @property
    def extension_constructors(self) -> Tuple[str, ...]:
        base = {c.name for c in SOURCE_BASE}
        return tuple(n for n in self.source.constructors if n not in base)


def _pair(name, src_extra, core_extra) -> LanguagePair:
    source = Signature.build(f"{name}-source", SOURCE_BASE + src_extra, STERM)
    core = Signature.build(f"{name}-core", CORE_BASE + core_extra, CTERM,
                           extra_sorts=[L_CPAIR])
    smap = tuple((a, b) for a, b in SORT_MAP.items()
                 if a.name in source.sorts)
    return LanguagePair(name, source, core, smap)


PIDGIN = _pair("pidgin", [], [])
PIDGIN_LISTCOMP = _pair("pidgin+listcomp", SOURCE_LISTCOMP, CORE_LISTCOMP)
PIDGIN_TRYCATCH = _pair("pidgin+trycatch", SOURCE_TRYCATCH, CORE_TRYCATCH)

LANGUAGES: Dict[str, LanguagePair] = {
    lp.name: lp for lp in (PIDGIN, PIDGIN_LISTCOMP, PIDGIN_TRYCATCH)
}
# short aliases used on the command line
LANGUAGES["listcomp"] = PIDGIN_LISTCOMP
LANGUAGES["trycatch"] = PIDGIN_TRYCATCH


def language(name: str) -> LanguagePair:
    try:
        return LANGUAGES[name]
    except KeyError:
        raise ValueError(f"unknown language {name!r}; choose from {sorted(LANGUAGES)}") from None


# --- smart constructors used by interpreters, the oracle and tests ---------

def T(ctor: str, *args) -> Term:
    return Term(ctor, tuple(args))


def cvar(i: str) -> Term:
    return Term("CVar", (i,))


def cnum(n: int) -> Term:
    return Term("CNum", (n,))


def cbool(b: bool) -> Term:
    return Term("CBool", (b,))


def snum(n: int) -> Term:
    return Term("SNum", (n,))


STRUE = Term("STrue", ())
SFALSE = Term("SFalse", ())


# --- free-identifier renaming ----------------------------------------------

def rename_core(t, m: Dict[str, str]):
    """Rename free identifier occurrences of a core term according to ``m``.

    Both reads (``CVar``) and writes (``CAssign``) are renamed; binders
    (``CLet``, ``CLetRec``, ``CLam``, ``CTryCatch``) shadow.
    """
    if not m or type(t) is not Term:
        return t
    c, a = t.ctor, t.args
    if c == "CVar":
        return Term(c, (m.get(a[0], a[0]),))
    if c == "CAssign":
        return Term(c, (m.get(a[0], a[0]), rename_core(a[1], m)))
    if c == "CLet":
        return Term(c, (a[0], rename_core(a[1], m), rename_core(a[2], _without(m, a[0]))))
    if c == "CLetRec":
        inner = _without(m, a[0])
        return Term(c, (a[0], rename_core(a[1], inner), rename_core(a[2], inner)))
    if c == "CLam":
        return Term(c, (a[0], rename_core(a[1], _without(m, *a[0]))))
    if c == "CTryCatch":
        return Term(c, (rename_core(a[0], m), a[1], rename_core(a[2], _without(m, a[1]))))
    return Term(c, tuple(_rename_arg(x, m, rename_core) for x in a))


def rename_source(t, m: Dict[str, str]):
    """Source-language counterpart of :func:`rename_core`."""
    if not m or type(t) is not Term:
        return t
    c, a = t.ctor, t.args
    if c == "SVar":
        return Term(c, (m.get(a[0], a[0]),))
    if c == "SAssign":
        return Term(c, (m.get(a[0], a[0]), rename_source(a[1], m)))
    if c == "SLet":
        return Term(c, (a[0], rename_source(a[1], m), rename_source(a[2], _without(m, a[0]))))
    if c == "SLetRec":
        inner = _without(m, a[0])
        return Term(c, (a[0], rename_source(a[1], inner), rename_source(a[2], inner)))
    if c == "SLam":
        return Term(c, (a[0], rename_source(a[1], _without(m, *a[0]))))
    if c == "SFor":
        ids = [b.args[0] for b in a[1]]
        binds = tuple(Term("SFBind", (b.args[0], rename_source(b.args[1], m))) for b in a[1])
        return Term(c, (rename_source(a[0], m), binds, rename_source(a[2], _without(m, *ids))))
    if c == "STryCatchFinally":
        return Term(c, (rename_source(a[0], m), a[1], rename_source(a[2], _without(m, a[1])),
                        rename_source(a[3], m)))
    if c == "SListComp":
        head, qual = _rename_qual(a[0], a[1], m)
        return Term(c, (head, qual))
    return Term(c, tuple(_rename_arg(x, m, rename_source) for x in a))


def _rename_qual(head, q, m):
    """Qualifiers scope over later qualifiers and the comprehension head."""
    if q.ctor == "QEmpty":
        return rename_source(head, m), q
    if q.ctor == "QGuard":
        h, rest = _rename_qual(head, q.args[1], m)
        return h, Term("QGuard", (rename_source(q.args[0], m), rest))
    x, e, rest = q.args
    h, rest2 = _rename_qual(head, rest, _without(m, x))
    return h, Term(q.ctor, (x, rename_source(e, m), rest2))


def _rename_arg(x, m, f):
    if type(x) is tuple:
        return tuple(f(y, m) for y in x)
    return f(x, m)


def _without(m, *names):
    if not any(n in m for n in names):
        return m
    return {k: v for k, v in m.items() if k not in names}
