"""A small s-expression reader/writer shared by terms, outcomes and meta-terms.

Atoms come back as :class:`Atom` so callers can tell a quoted ``"x"`` from a
bare ``x``; integers are parsed eagerly. Square brackets produce a
:class:`Bracket` list, parentheses a plain Python list.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, List, Union


class SexprError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    text: str
    quoted: bool = False


class Bracket(list):
    """A ``[...]`` group."""


Node = Union[Atom, int, list]

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<open>[(\[])
      | (?P<close>[)\]])
      | "(?P<str>(?:[^"\\]|\\.)*)"
      | (?P<atom>[^\s()\[\]"]+)
    )""",
    re.VERBOSE,
)
_INT = re.compile(r"-?\d+\Z")
_ESC = re.compile(r"\\(.)", re.S)
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r"}


def _unescape(m) -> str:
    return _ESCAPES.get(m.group(1), m.group(1))


def _tokens(text: str):
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise SexprError(f"unexpected character at offset {pos}: {text[pos:pos + 10]!r}")
        pos = m.end()
        if m.group("open"):
            yield ("open", m.group("open"))
        elif m.group("close"):
            yield ("close", m.group("close"))
        elif m.group("str") is not None:
            raw = m.group("str")
            yield ("atom", Atom(_ESC.sub(_unescape, raw), quoted=True))
        else:
            tok = m.group("atom")
            if _INT.match(tok):
                yield ("atom", int(tok))
            else:
                yield ("atom", Atom(tok))


def read(text: str) -> Node:
    """Parse exactly one s-expression from ``text``."""
    stack: List[list] = []
    closers: List[str] = []
    result: Any = None
    done = False
    for kind, val in _tokens(text):
        if done:
            raise SexprError("trailing input after s-expression")
        if kind == "open":
            stack.append(Bracket() if val == "[" else [])
            closers.append("]" if val == "[" else ")")
            continue
        if kind == "close":
            if not stack or closers[-1] != val:
                raise SexprError(f"unbalanced {val!r}")
            closers.pop()
            node = stack.pop()
        else:
            node = val
        if stack:
            stack[-1].append(node)
        else:
            result, done = node, True
    if stack:
        raise SexprError("unterminated s-expression")
    if not done:
        raise SexprError("empty input")
    return result


def quote(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    return '"' + out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r") + '"'


def head_name(node: Node) -> str:
    """The operator symbol of a parenthesised form."""
    if not isinstance(node, list) or isinstance(node, Bracket) or not node:
        raise SexprError(f"expected a (form ...), got {node!r}")
    h = node[0]
    if not isinstance(h, Atom) or h.quoted:
        raise SexprError(f"form head must be a bare symbol, got {h!r}")
    return h.text
