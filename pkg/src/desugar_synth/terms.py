"""Multi-sorted signatures and terms.

A :class:`Term` is a constructor name plus an argument tuple. Arguments at
literal-sorted positions (identifiers, numbers, strings, operators, booleans)
are plain Python values; list-sorted positions hold Python tuples (the
``nil``/``cons`` structure every list sort owns); everything else is a
nested :class:`Term`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

from . import sexpr
from .sexpr import Atom, Bracket, SexprError

OPERATORS: Tuple[str, ...] = ("0-", "not", "+", "-", "and", "or", "<", ">")

# literal sort name -> payload class
LITERAL_CLASSES: Dict[str, str] = {
    "Id": "identifier",
    "Number": "number",
    "String": "string",
    "Op": "operator",
    "Bool": "boolean",
}

RESERVED_ID_PREFIXES = ("%", "$")


@dataclass(frozen=True)
class Sort:
    name: str
    kind: str = "atomic"  # atomic | list | pair
    params: Tuple["Sort", ...] = ()

    @staticmethod
    def atomic(name: str) -> "Sort":
        return Sort(name)

    @staticmethod
    def list_of(elem: "Sort") -> "Sort":
        return Sort(f"List[{elem.name}]", "list", (elem,))

    @staticmethod
    def pair_of(a: "Sort", b: "Sort", name: Optional[str] = None) -> "Sort":
        return Sort(name or f"Pair[{a.name},{b.name}]", "pair", (a, b))

    @property
    def is_list(self) -> bool:
        return self.kind == "list"

    @property
    def is_pair(self) -> bool:
        return self.kind == "pair"

    @property
    def element(self) -> "Sort":
        assert self.is_list
        return self.params[0]

    @property
    def is_literal(self) -> bool:
        return self.kind == "atomic" and self.name in LITERAL_CLASSES

    def __str__(self) -> str:
        return self.name


ID = Sort("Id")
NUMBER = Sort("Number")
STRING = Sort("String")
OP = Sort("Op")
BOOL = Sort("Bool")


@dataclass(frozen=True)
class ConstructorSig:
    name: str
    argument_sorts: Tuple[Sort, ...]
    result_sort: Sort
    # pair constructors and the automatic nil/cons are structure, not language
    structural: bool = False

    @property
    def payload(self) -> Optional[str]:
        """Literal class carried by a leaf constructor (``SNum``, ``CStr``, ...)."""
        if len(self.argument_sorts) == 1 and self.argument_sorts[0].is_literal:
            return LITERAL_CLASSES[self.argument_sorts[0].name]
        return None

    @property
    def arity(self) -> int:
        return len(self.argument_sorts)


class SortError(ValueError):
    def __init__(self, reason: str, path: Tuple[int, ...] = (), detail: str = ""):
        self.reason = reason
        self.path = path
        super().__init__(f"{reason} at path {list(path)}" + (f": {detail}" if detail else ""))


@dataclass
class Signature:
    name: str
    sorts: Dict[str, Sort]
    constructors: Dict[str, ConstructorSig]
    program_sort: Sort

    def __post_init__(self):
        if self.program_sort.name not in self.sorts:
            raise ValueError(f"program sort {self.program_sort} not in signature")
        for s in self.sorts.values():
            for p in s.params:
                if p.name not in self.sorts:
                    raise ValueError(f"sort {s} references unregistered sort {p}")
        for c in self.constructors.values():
            for s in (*c.argument_sorts, c.result_sort):
                if s.name not in self.sorts:
                    raise ValueError(f"constructor {c.name} uses unregistered sort {s}")

    @classmethod
    def build(cls, name: str, constructors: Iterable[ConstructorSig], program_sort: Sort,
              extra_sorts: Iterable[Sort] = ()) -> "Signature":
        sorts: Dict[str, Sort] = {}

        def add(s: Sort):
            for p in s.params:
                add(p)
            sorts.setdefault(s.name, s)

        ctors = list(constructors)
        for c in ctors:
            for s in (*c.argument_sorts, c.result_sort):
                add(s)
        for s in extra_sorts:
            add(s)
        add(program_sort)
        return cls(name, sorts, {c.name: c for c in ctors}, program_sort)

    def constructor(self, name: str) -> ConstructorSig:
        try:
            return self.constructors[name]
        except KeyError:
            raise SortError("unknown constructor", (), name) from None

    def constructors_for(self, sort: Sort) -> List[ConstructorSig]:
        """Declared constructors producing ``sort`` plus the automatic list ones."""
        out = [c for c in self.constructors.values() if c.result_sort == sort]
        if sort.is_list:
            out = list_constructors(sort) + out
        return out

    def restrict(self, names: Iterable[str], name: Optional[str] = None) -> "SubSignature":
        return SubSignature(self, frozenset(names), name or self.name)


def list_constructors(sort: Sort) -> List[ConstructorSig]:
    return [
        ConstructorSig("nil", (), sort, structural=True),
        ConstructorSig("cons", (sort.element, sort), sort, structural=True),
    ]


@dataclass(frozen=True)
class SubSignature:
    parent: Signature
    included_constructors: FrozenSet[str]
    name: str = ""

    def __post_init__(self):
        unknown = set(self.included_constructors) - set(self.parent.constructors) - {"nil", "cons"}
        if unknown:
            raise ValueError(f"constructors not in parent signature: {sorted(unknown)}")

    def includes(self, ctor: str) -> bool:
        if ctor in self.included_constructors:
            return True
        c = self.parent.constructors.get(ctor)
        return c is not None and c.structural

    def extend(self, names: Iterable[str]) -> "SubSignature":
        return SubSignature(self.parent, self.included_constructors | frozenset(names), self.name)


class Term:
    """An immutable sorted AST node.

    Equality is structural; the hash is cached on first use.
    """

    __slots__ = ("ctor", "args", "_h")

    def __init__(self, ctor: str, args: tuple = ()):
        self.ctor = ctor
        self.args = args
        self._h = None

    def __eq__(self, other):
        if self is other:
            return True
        return type(other) is Term and self.ctor == other.ctor and self.args == other.args

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        h = self._h
        if h is None:
            h = self._h = hash((self.ctor, self.args))
        return h

    def __repr__(self):
        return to_sexpr(self)

    def __reduce__(self):
        return (Term, (self.ctor, self.args))


def term_size(t) -> int:
    """Number of term constructors, counting ``nil``/``cons`` of list children."""
    if type(t) is Term:
        return 1 + sum(term_size(a) for a in t.args)
    if type(t) is tuple:
        return 1 + sum(1 + term_size(x) for x in t)
    return 0


def iter_terms(t) -> Iterator[Term]:
    """Pre-order walk over every Term node (list items included)."""
    if type(t) is Term:
        yield t
        for a in t.args:
            yield from iter_terms(a)
    elif type(t) is tuple:
        for x in t:
            yield from iter_terms(x)


def _check_literal(value, sort: Sort, path) -> None:
    cls = LITERAL_CLASSES[sort.name]
    if cls == "number":
        ok = type(value) is int
    elif cls == "boolean":
        ok = type(value) is bool
    elif cls == "operator":
        ok = type(value) is str and value in OPERATORS
    else:
        ok = type(value) is str
    if not ok:
        raise SortError("payload mismatch", path, f"{value!r} is not a {cls}")


def _check(value, sort: Sort, sig: Signature, path: Tuple[int, ...]) -> None:
    if sort.is_literal:
        _check_literal(value, sort, path)
        return
    if sort.is_list:
        if type(value) is not tuple:
            raise SortError("sort mismatch", path, f"expected list {sort}")
        for i, item in enumerate(value):
            _check(item, sort.element, sig, path + (i,))
        return
    if type(value) is not Term:
        raise SortError("sort mismatch", path, f"expected a {sort} term, got {value!r}")
    c = sig.constructors.get(value.ctor)
    if c is None:
        raise SortError("unknown constructor", path, value.ctor)
    if c.result_sort != sort:
        raise SortError("sort mismatch", path, f"{value.ctor} builds {c.result_sort}, expected {sort}")
    if len(value.args) != c.arity:
        raise SortError("arity mismatch", path, f"{value.ctor} takes {c.arity}, got {len(value.args)}")
    for i, (a, s) in enumerate(zip(value.args, c.argument_sorts)):
        _check(a, s, sig, path + (i,))


def sort_check(t: Term, sig: Signature, expected: Optional[Sort] = None) -> Sort:
    """Return the sort of ``t`` or raise :class:`SortError` naming the bad path."""
    if type(t) is not Term:
        raise SortError("sort mismatch", (), f"not a term: {t!r}")
    c = sig.constructors.get(t.ctor)
    if c is None:
        raise SortError("unknown constructor", (), t.ctor)
    sort = expected or c.result_sort
    _check(t, sort, sig, ())
    return sort


def in_sublanguage(t, sub: SubSignature) -> bool:
    return all(sub.includes(n.ctor) for n in iter_terms(t))


def identifiers(t) -> Iterator[str]:
    """Every identifier-sorted literal in ``t`` (requires the signature-free
    convention that Id positions hold ``str``; strings are included too)."""
    if type(t) is Term:
        for a in t.args:
            yield from identifiers(a)
    elif type(t) is tuple:
        for x in t:
            yield from identifiers(x)
    elif type(t) is str:
        yield t


# --- concrete syntax -------------------------------------------------------

def _lit_sexpr(v) -> str:
    if type(v) is bool:
        return "true" if v else "false"
    if type(v) is int:
        return str(v)
    return sexpr.quote(v)


def to_sexpr(t) -> str:
    if type(t) is Term:
        if not t.args:
            return f"({t.ctor})"
        return "(" + t.ctor + " " + " ".join(to_sexpr(a) for a in t.args) + ")"
    if type(t) is tuple:
        return "[" + " ".join(to_sexpr(x) for x in t) + "]"
    return _lit_sexpr(t)


def _literal_from(node, sort: Sort, path, user: bool):
    cls = LITERAL_CLASSES[sort.name]
    if cls == "number":
        if type(node) is not int:
            raise SortError("payload mismatch", path, f"expected a number, got {node!r}")
        return node
    if not isinstance(node, Atom):
        raise SortError("payload mismatch", path, f"expected a {cls}, got {node!r}")
    if cls == "boolean":
        if node.text not in ("true", "false"):
            raise SortError("payload mismatch", path, f"expected true/false, got {node.text!r}")
        return node.text == "true"
    if cls == "operator" and node.text not in OPERATORS:
        raise SortError("payload mismatch", path, f"unknown operator {node.text!r}")
    if cls == "identifier" and user and node.text.startswith(RESERVED_ID_PREFIXES):
        raise SortError("reserved identifier", path, node.text)
    return node.text


def from_node(node, sort: Sort, sig: Signature, path=(), user: bool = False):
    if sort.is_literal:
        return _literal_from(node, sort, path, user)
    if sort.is_list:
        if not isinstance(node, Bracket):
            raise SortError("sort mismatch", path, f"expected [list] of {sort.element}")
        return tuple(from_node(x, sort.element, sig, path + (i,), user) for i, x in enumerate(node))
    try:
        name = sexpr.head_name(node)
    except SexprError as e:
        raise SortError("sort mismatch", path, str(e)) from None
    c = sig.constructors.get(name)
    if c is None:
        raise SortError("unknown constructor", path, name)
    if c.result_sort != sort:
        raise SortError("sort mismatch", path, f"{name} builds {c.result_sort}, expected {sort}")
    if len(node) - 1 != c.arity:
        raise SortError("arity mismatch", path, f"{name} takes {c.arity}, got {len(node) - 1}")
    return Term(name, tuple(from_node(a, s, sig, path + (i,), user)
                            for i, (a, s) in enumerate(zip(node[1:], c.argument_sorts))))


def parse_term(text: str, sig: Signature, sort: Optional[Sort] = None, user: bool = False) -> Term:
    """Parse ``text`` as a term of ``sort`` (default: the program sort).

    With ``user=True`` identifiers using the reserved ``%``/``$`` prefixes are
    rejected, since those name generated variables and store locations.
    """
    return from_node(sexpr.read(text), sort or sig.program_sort, sig, (), user)
