"""Outcomes of bounded evaluation and the error monad they live in."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, List, Optional, Protocol, Sequence, Union

from . import sexpr
from .sexpr import Atom
from .terms import Signature, Term, from_node, to_sexpr


class ErrorTag(enum.Enum):
    Bot = "Bot"
    TypeError = "TypeError"
    SyntaxError = "SyntaxError"
    ArgumentNumberMismatchError = "ArgumentNumberMismatchError"
    UnboundVariable = "UnboundVariable"
    MacroError = "MacroError"


class EvalError(Exception):
    """Raised inside interpreters and translations; becomes an error Outcome."""

    def __init__(self, tag: ErrorTag):
        super().__init__(tag.value)
        self.tag = tag


@dataclass(frozen=True)
class Outcome:
    """``value`` and ``uncaught`` carry a term; ``error`` carries only a tag.

    ``uncaught`` is an object-language exception that escaped to the top
    level; it is a distinct result, not a member of the error set.
    """

    kind: str
    term: Optional[Term] = None
    tag: Optional[ErrorTag] = None

    @staticmethod
    def value(t: Term) -> "Outcome":
        return Outcome("value", t)

    @staticmethod
    def error(tag: ErrorTag) -> "Outcome":
        return Outcome("error", None, tag)

    @staticmethod
    def uncaught(t: Term) -> "Outcome":
        return Outcome("uncaught", t)

    @property
    def is_error(self) -> bool:
        return self.kind == "error"

    @property
    def is_value(self) -> bool:
        return self.kind == "value"

    def to_sexpr(self) -> str:
        if self.kind == "error":
            return f"(error {self.tag.value})"
        return f"({self.kind} {to_sexpr(self.term)})"

    def __str__(self) -> str:
        return self.to_sexpr()


def parse_outcome(text: str, sig: Signature) -> Outcome:
    node = sexpr.read(text)
    head = sexpr.head_name(node)
    if head == "error":
        if len(node) != 2 or not isinstance(node[1], Atom):
            raise sexpr.SexprError(f"malformed error outcome: {text}")
        return Outcome.error(ErrorTag(node[1].text))
    if head in ("value", "uncaught") and len(node) == 2:
        return Outcome(head, from_node(node[1], sig.program_sort, sig))
    raise sexpr.SexprError(f"malformed outcome: {text}")


@dataclass(frozen=True)
class StepBudget:
    """Resource bound for one evaluation.

    ``max_steps`` counts interpreter dispatches (one per AST node visited);
    ``max_depth`` bounds evaluation nesting so the host stack cannot
    overflow; ``max_seconds`` is an optional wall-clock limit. Exceeding any
    of them yields ``Bot``.
    """

    max_steps: int = 10_000
    max_depth: int = 2_000
    max_seconds: Optional[float] = None

    def __post_init__(self):
        if self.max_steps < 1 or self.max_depth < 1:
            raise ValueError("budgets must be positive")


DEFAULT_BUDGET = StepBudget()


class Interpreter(Protocol):
    signature: Signature

    def evaluate(self, t: Term, budget: StepBudget = DEFAULT_BUDGET) -> Outcome: ...


class Gensym:
    """Fresh identifiers ``%g0, %g1, ...``; user programs cannot contain
    ``%``-prefixed identifiers, so these never clash with them."""

    __slots__ = ("n",)

    def __init__(self, start: int = 0):
        self.n = start

    def __call__(self) -> str:
        name = f"%g{self.n}"
        self.n += 1
        return name


Arrow = Callable[[Term], Outcome]


def kleisli_compose(f: Arrow, g: Arrow) -> Arrow:
    """``g`` after ``f`` in the error monad: errors short-circuit.

    An ``uncaught`` result of ``f`` also short-circuits, since it is not a
    program ``g`` could consume.
    """

    def composed(t: Term) -> Outcome:
        r = f(t)
        if r.kind != "value":
            return r
        return g(r.term)

    return composed


def first_error(args: Sequence[Outcome]) -> Union[Outcome, List[Term]]:
    """Leftmost error of ``args``, or the list of their values."""
    values = []
    for a in args:
        if a.kind != "value":
            return a
        values.append(a.term)
    return values
