"""Hypothesis spaces: which constructors, constants and meta-rules a
candidate rule may use, plus the layering discipline."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

from .metaterm import MetaContext, context_names
from .terms import OPERATORS, ConstructorSig, Signature

ALL_RULES = ("Throw", "CaseList", "UnzipLet", "Fresh", "FreshTryCatch", "MetaLambda", "FreshPrime")
FAMILIES = ("relabel", "subst", "meta")
BOOL_CONSTANTS: Tuple[bool, ...] = (True, False)
H1_CONSTANTS: Tuple[object, ...] = BOOL_CONSTANTS + OPERATORS


class UnmappedSort(KeyError):
    pass


@dataclass(frozen=True)
class HypothesisSpace:
    """A rule system over a core signature.

    ``constructors`` lists the enabled core constructors (``nil``/``cons``
    included when list building is allowed) in the core signature's
    declaration order; ``constants`` likewise fixes the order of the
    enabled boolean and operator constants.
    """

    name: str
    core: Signature
    constructors: Tuple[str, ...]
    constants: Tuple[object, ...] = ()
    rules: FrozenSet[str] = frozenset()
    family: str = "meta"
    fresh_at_top: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        unknown = set(self.rules) - set(ALL_RULES)
        if unknown:
            raise ValueError(f"unknown meta-rules {sorted(unknown)}")
        if self.family != "meta" and self.rules:
            raise ValueError(f"the {self.family} family admits no meta-rules")
        for c in self.constructors:
            if c not in ("nil", "cons") and c not in self.core.constructors:
                raise ValueError(f"{c} is not a constructor of {self.core.name}")
        for v in self.constants:
            if not (type(v) is bool or v in OPERATORS):
                raise ValueError(f"unsupported constant {v!r}")

    def constructor_sig(self, name: str) -> Optional[ConstructorSig]:
        if name not in self.constructors:
            return None
        return self.core.constructors.get(name)

    def allows_constant(self, value) -> bool:
        return any(type(c) is type(value) and c == value for c in self.constants)

    def with_overrides(self, *, name: Optional[str] = None,
                       add_constructors: Iterable[str] = (), remove_constructors: Iterable[str] = (),
                       add_rules: Iterable[str] = (), remove_rules: Iterable[str] = (),
                       constants: Optional[Iterable[object]] = None,
                       fresh_at_top: Optional[bool] = None) -> "HypothesisSpace":
        wanted = (set(self.constructors) | set(add_constructors)) - set(remove_constructors)
        return replace(
            self,
            name=name or self.name,
            constructors=_ordered(self.core, wanted),
            rules=(frozenset(self.rules) | frozenset(add_rules)) - frozenset(remove_rules),
            constants=self.constants if constants is None else tuple(constants),
            fresh_at_top=self.fresh_at_top if fresh_at_top is None else fresh_at_top,
        )


def _ordered(core: Signature, names) -> Tuple[str, ...]:
    names = set(names)
    out = [n for n in ("nil", "cons") if n in names]
    out += [n for n in core.constructors if n in names]
    missing = names - set(out)
    if missing:
        raise ValueError(f"not constructors of {core.name}: {sorted(missing)}")
    return tuple(out)


def _language_ctors(core: Signature) -> Tuple[str, ...]:
    return tuple(n for n, c in core.constructors.items() if not c.structural)


def builtin_space(name: str, core: Signature) -> HypothesisSpace:
    """The named spaces of the case studies, over ``core``."""
    every = ("nil", "cons") + _language_ctors(core)
    if name == "H1":
        return HypothesisSpace("H1", core, every, H1_CONSTANTS,
                               frozenset({"CaseList", "Throw", "UnzipLet", "Fresh"}))
    if name == "H2":
        return HypothesisSpace("H2", core, _ordered(core, {"CVar", "CPrim2"}), H1_CONSTANTS,
                               frozenset({"Fresh"}))
    if name == "Hlc":
        return HypothesisSpace("Hlc", core, every, H1_CONSTANTS, frozenset({"MetaLambda"}))
    if name == "Htcf":
        return HypothesisSpace("Htcf", core, _ordered(core, {"CThrow", "CTryCatch"}), (),
                               frozenset({"Fresh", "FreshTryCatch"}), fresh_at_top=True)
    if name == "relabel":
        return HypothesisSpace("relabel", core, _language_ctors(core), (), frozenset(), "relabel")
    if name == "subst":
        return HypothesisSpace("subst", core, every, H1_CONSTANTS, frozenset(), "subst")
    raise ValueError(f"unknown hypothesis space {name!r}; choose from {BUILTIN_NAMES}")


BUILTIN_NAMES = ("H1", "H2", "Hlc", "Htcf", "relabel", "subst")


def space_from_config(cfg, core: Signature) -> HypothesisSpace:
    """A space from a task-file entry: a builtin name, or a mapping with
    ``builtin`` plus optional ``add_constructors``, ``remove_constructors``,
    ``add_rules``, ``remove_rules``, ``constants`` and ``fresh_at_top``."""
    if isinstance(cfg, str):
        return builtin_space(cfg, core)
    cfg = dict(cfg)
    base = builtin_space(cfg.pop("builtin"), core)
    consts = cfg.pop("constants", None)
    if consts is not None:
        consts = [c if c in OPERATORS else _bool_const(c) for c in consts]
    space = base.with_overrides(constants=consts, **cfg)
    return space


def _bool_const(c):
    if c in (True, "true"):
        return True
    if c in (False, "false"):
        return False
    raise ValueError(f"unknown constant {c!r}")


def space_to_config(space: HypothesisSpace) -> Dict[str, object]:
    """Inverse of :func:`space_from_config` relative to the space's builtin."""
    base = builtin_space(space.name.split("+")[0], space.core) if space.name.split("+")[0] in BUILTIN_NAMES else None
    if base is None or base == space:
        return {"builtin": space.name} if base is None else space.name
    out: Dict[str, object] = {"builtin": base.name}
    add = [c for c in space.constructors if c not in base.constructors]
    rem = [c for c in base.constructors if c not in space.constructors]
    if add:
        out["add_constructors"] = add
    if rem:
        out["remove_constructors"] = rem
    if set(space.rules) - set(base.rules):
        out["add_rules"] = sorted(set(space.rules) - set(base.rules))
    if set(base.rules) - set(space.rules):
        out["remove_rules"] = sorted(set(base.rules) - set(space.rules))
    if space.constants != base.constants:
        out["constants"] = [("true" if c else "false") if type(c) is bool else c for c in space.constants]
    if space.fresh_at_top != base.fresh_at_top:
        out["fresh_at_top"] = space.fresh_at_top
    if space.name != base.name:
        out["name"] = space.name
    return out


def variable_budget(f: ConstructorSig) -> Counter:
    """How many argument positions of ``f`` have each sort."""
    return Counter(f.argument_sorts)


def derive_context(f: ConstructorSig, sort_map) -> MetaContext:
    """One meta-variable ``x1..xn`` per argument of ``f``, at its core sort.

    ``sort_map`` is a callable or mapping from source to core sorts.
    """
    lookup = sort_map if callable(sort_map) else sort_map.__getitem__
    out = []
    for name, s in zip(context_names(f.arity), f.argument_sorts):
        try:
            out.append((name, lookup(s)))
        except KeyError:
            raise UnmappedSort(f"{f.name}: argument sort {s} has no core image") from None
    return MetaContext(tuple(out))
