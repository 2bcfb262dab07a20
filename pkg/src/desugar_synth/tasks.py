"""Task files: sequential learning problems as YAML.

A task file names a language pair, optionally a rules file giving the base
desugaring, default budgets, and an ordered list of steps. Each step lists
its constructor group, the hypothesis space (a builtin name, a mapping
with overrides, or one of those per constructor), optional hint rules, and
test programs with their expected outcomes. Expected outcomes are
recomputed with the source interpreter on load and must match.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import yaml

from .hypothesis import HypothesisSpace, space_from_config
from .metaterm import meta_size, meta_to_sexpr, parse_meta
from .pidgin import LanguagePair, eval_source, language
from .semantics import DEFAULT_BUDGET, StepBudget, parse_outcome
from .sexpr import SexprError
from .solver import ExtensionTask, SearchResult, TestCase
from .terms import SortError, in_sublanguage, parse_term, sort_check, to_sexpr

DATA = "desugar_synth.data"


class TaskValidationError(ValueError):
    def __init__(self, message: str, source: str = "", where: str = ""):
        self.source, self.where = source, where
        prefix = ":".join(p for p in (source, where) if p)
        super().__init__(f"{prefix}: {message}" if prefix else message)


@dataclass
class Step:
    name: str
    group: Tuple[str, ...]
    spaces: Dict[str, HypothesisSpace]
    tests: List[TestCase]
    space_config: object = "H1"
    hints: Dict[str, object] = field(default_factory=dict)
    timeout: Optional[float] = None
    slow: bool = False


@dataclass
class TaskFile:
    language: LanguagePair
    steps: List[Step]
    base_rules: Dict[str, object] = field(default_factory=dict)
    base_rules_file: Optional[str] = None
    budget: StepBudget = DEFAULT_BUDGET
    timeout: Optional[float] = None
    source: str = ""
    intended_file: Optional[str] = None
    intended: Dict[str, object] = field(default_factory=dict)
    variants: Dict[str, object] = field(default_factory=dict)

    def known_rules(self, variants: bool = False) -> Dict[str, object]:
        """Base rules plus the intended rules of every step, if shipped."""
        return {**self.base_rules, **self.intended, **(self.variants if variants else {})}

    def step_index(self, key: Union[int, str]) -> int:
        """Steps are addressed by 1-based position or by name."""
        if isinstance(key, int) or str(key).isdigit():
            k = int(key)
            if not 1 <= k <= len(self.steps):
                raise KeyError(f"step {k} out of range 1..{len(self.steps)}")
            return k - 1
        for i, s in enumerate(self.steps):
            if s.name == key:
                return i
        raise KeyError(f"no step named {key!r}")

    def extension_task(self, k: int, base: Dict[str, object], *, jobs: int = 1,
                       timeout: Optional[float] = None, budget: Optional[StepBudget] = None,
                       space_override: Optional[object] = None) -> ExtensionTask:
        step = self.steps[k]
        spaces = step.spaces
        if space_override is not None:
            spaces = {c: space_from_config(space_override, self.language.core) for c in step.group}
        b = budget or self.budget
        tests = step.tests
        if budget is not None:
            tests = [dataclasses.replace(tc, budget=None) if tc.budget is None else tc for tc in tests]
        base = {c: r for c, r in base.items() if c not in step.group}
        return ExtensionTask(
            language=self.language, base=base, group=step.group, spaces=spaces, tests=list(tests),
            budget=b, timeout=timeout if timeout is not None else (step.timeout or self.timeout),
            jobs=jobs, hints=dict(step.hints), name=step.name,
        )

    def all_tests(self) -> List[TestCase]:
        return [tc if tc.budget else dataclasses.replace(tc, budget=self.budget)
                for s in self.steps for tc in s.tests]


def data_path(name: str) -> Path:
    return Path(str(resources.files(DATA).joinpath(name)))


def shipped(name: str) -> Path:
    """Path of a shipped task or rules file (``pidgin``, ``listcomp.rules`` ...)."""
    if not name.endswith(".yaml"):
        name += ".yaml"
    p = data_path(name)
    if not p.exists():
        raise FileNotFoundError(f"no shipped file {name}")
    return p


def _resolve(ref: str, relative_to: Optional[Path]) -> Path:
    p = Path(ref)
    if relative_to is not None and not p.is_absolute() and (relative_to.parent / p).exists():
        return relative_to.parent / p
    if p.exists():
        return p
    return shipped(ref)


# --- rules files ---------------------------------------------------------------------


@dataclass
class RulesFile:
    language: str
    rules: Dict[str, object]
    variants: Dict[str, object] = field(default_factory=dict)

    def with_variants(self) -> Dict[str, object]:
        return {**self.rules, **self.variants}


def load_rules(path: Union[str, Path]) -> RulesFile:
    path = Path(path) if Path(path).exists() else shipped(str(path))
    raw = yaml.safe_load(path.read_text())
    try:
        rules = {c: parse_meta(s) for c, s in (raw.get("rules") or {}).items()}
        variants = {c: parse_meta(s) for c, s in (raw.get("variants") or {}).items()}
    except SexprError as e:
        raise TaskValidationError(str(e), str(path)) from None
    return RulesFile(raw.get("language", ""), rules, variants)


def dump_rules(rf: RulesFile) -> str:
    return yaml.safe_dump({
        "language": rf.language,
        "rules": {c: meta_to_sexpr(m) for c, m in rf.rules.items()},
        "variants": {c: meta_to_sexpr(m) for c, m in rf.variants.items()},
    }, sort_keys=False, allow_unicode=True)


# --- task files ----------------------------------------------------------------------------


def _budget(raw, default: StepBudget) -> StepBudget:
    if raw is None:
        return default
    if isinstance(raw, int):
        return dataclasses.replace(default, max_steps=raw)
    return dataclasses.replace(default, **raw)


def load_task_file(path: Union[str, Path], check_expected: bool = True) -> TaskFile:
    """Parse and validate a task file (a path or a shipped name)."""
    p = Path(path)
    if not p.exists():
        p = shipped(str(path))
    text = p.read_text()
    return parse_task_file(text, source=str(p), path=p, check_expected=check_expected)


def parse_task_file(text: str, source: str = "<string>", path: Optional[Path] = None,
                    check_expected: bool = True) -> TaskFile:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise TaskValidationError(f"not valid YAML: {e}", source) from None
    if not isinstance(raw, dict):
        raise TaskValidationError("expected a mapping at top level", source)

    def fail(msg, where=""):
        raise TaskValidationError(msg, source, where)

    try:
        lang = language(raw.get("language", ""))
    except ValueError as e:
        fail(str(e), "language")
    budget = _budget(raw.get("budget"), DEFAULT_BUDGET)
    base_rules: Dict[str, object] = {}
    base_file = raw.get("base_rules")
    if base_file:
        try:
            base_rules = load_rules(_resolve(base_file, path)).rules
        except (FileNotFoundError, TaskValidationError) as e:
            fail(str(e), "base_rules")
    intended = RulesFile("", {})
    intended_file = raw.get("intended_rules")
    if intended_file:
        try:
            intended = load_rules(_resolve(intended_file, path))
        except (FileNotFoundError, TaskValidationError) as e:
            fail(str(e), "intended_rules")
    known = set(base_rules)
    tf = TaskFile(lang, [], base_rules, base_file, budget, raw.get("timeout"), source,
                  intended_file, dict(intended.rules), dict(intended.variants))
    seen = set(known)
    for n, rs in enumerate(raw.get("steps") or [], start=1):
        where = f"steps[{n}]"
        name = str(rs.get("name", n))
        group = tuple(rs.get("group") or ())
        if not group:
            fail("empty constructor group", where)
        for c in group:
            if c not in lang.source.constructors:
                fail(f"unknown source constructor {c}", where)
            if c in seen:
                fail(f"{c} appears in an earlier step or in the base rules", where)
        seen.update(group)
        space_cfg = rs.get("space", "H1")
        try:
            if isinstance(space_cfg, dict) and "builtin" not in space_cfg:
                spaces = {c: space_from_config(space_cfg[c], lang.core) for c in group}
            else:
                spaces = {c: space_from_config(space_cfg, lang.core) for c in group}
        except (ValueError, KeyError) as e:
            fail(f"bad space: {e}", where)
        hints = {}
        for c, s in (rs.get("hints") or {}).items():
            if c not in group:
                fail(f"hint for {c}, which is not in the group", where)
            try:
                hints[c] = parse_meta(s)
            except SexprError as e:
                fail(f"hint for {c}: {e}", where)
        sub = lang.source.restrict(seen)
        tests = []
        for j, rt in enumerate(rs.get("tests") or [], start=1):
            tw = f"{where}.tests[{j}]"
            try:
                prog = parse_term(rt["program"], lang.source, lang.source.program_sort, user=True)
                sort_check(prog, lang.source, lang.source.program_sort)
            except (SexprError, SortError, KeyError) as e:
                fail(f"program: {e}", tw)
            if not in_sublanguage(prog, sub):
                fail("program uses constructors from later steps", tw)
            tb = _budget(rt.get("max_steps"), budget) if "max_steps" in rt else None
            actual = eval_source(prog, tb or budget)
            if "expected" in rt:
                try:
                    expected = parse_outcome(rt["expected"], lang.source)
                except (SexprError, SortError, ValueError) as e:
                    fail(f"expected: {e}", tw)
                if check_expected and expected != actual:
                    fail(f"expected {expected} but the source interpreter gives {actual}", tw)
            else:
                expected = actual
            tests.append(TestCase(prog, expected, tb, rt.get("name", f"{name}.{j}")))
        if not tests:
            fail("a step needs at least one test", where)
        tf.steps.append(Step(name, group, spaces, tests, space_cfg, hints,
                             rs.get("timeout"), bool(rs.get("slow", False))))
    if not tf.steps:
        fail("no steps")
    return tf


def task_to_dict(tf: TaskFile) -> dict:
    out = {"language": tf.language.name}
    if tf.base_rules_file:
        out["base_rules"] = tf.base_rules_file
    if tf.intended_file:
        out["intended_rules"] = tf.intended_file
    if tf.budget != DEFAULT_BUDGET:
        out["budget"] = {k: v for k, v in dataclasses.asdict(tf.budget).items()
                         if v != getattr(DEFAULT_BUDGET, k)}
    if tf.timeout is not None:
        out["timeout"] = tf.timeout
    steps = []
    for s in tf.steps:
        rs = {"name": s.name, "group": list(s.group), "space": s.space_config}
        if s.slow:
            rs["slow"] = True
        if s.timeout is not None:
            rs["timeout"] = s.timeout
        if s.hints:
            rs["hints"] = {c: meta_to_sexpr(m) for c, m in s.hints.items()}
        rs["tests"] = []
        for tc in s.tests:
            rt = {"name": tc.name, "program": to_sexpr(tc.program), "expected": tc.expected.to_sexpr()}
            if tc.budget is not None:
                rt["max_steps"] = tc.budget.max_steps
            rs["tests"].append(rt)
        steps.append(rs)
    out["steps"] = steps
    return out


def dump_task_file(tf: TaskFile) -> str:
    return yaml.safe_dump(task_to_dict(tf), sort_keys=False, allow_unicode=True, width=100)


# --- reports --------------------------------------------------------------------------------


@dataclass
class ReportRow:
    step: str
    group: Tuple[str, ...]
    space: str
    status: str
    size: Optional[int]
    index: Optional[int]
    tests: int
    elapsed: float
    rules: Dict[str, str] = field(default_factory=dict)
    regressions: List[str] = field(default_factory=list)


@dataclass
class RunReport:
    title: str
    rows: List[ReportRow] = field(default_factory=list)

    @property
    def total_tests(self) -> int:
        return sum(r.tests for r in self.rows)

    @property
    def total_elapsed(self) -> float:
        return sum(r.elapsed for r in self.rows)

    @property
    def ok(self) -> bool:
        return all(r.status in ("found", "skipped") and not r.regressions for r in self.rows)

    def add(self, step: Step, result: SearchResult, space_name: str, regressions=()) -> ReportRow:
        searched = [c for c in step.group if c not in step.hints]
        size = sum(meta_size(result.rules[c]) for c in searched) if result.found else None
        row = ReportRow(step.name, step.group, space_name, result.status, size, result.index,
                        len(step.tests), result.elapsed,
                        {c: meta_to_sexpr(m) for c, m in result.rules.items()}, list(regressions))
        self.rows.append(row)
        return row

    def table(self) -> str:
        head = ("Task", "New constructors", "Space", "Status", "AST size", "Index", "#tests", "Time")
        body = [(r.step, ", ".join(r.group), r.space, r.status,
                 "" if r.size is None else str(r.size), "" if r.index is None else str(r.index),
                 str(r.tests), _fmt_time(r.elapsed)) for r in self.rows]
        body.append(("total", "", "", "", "", "", str(self.total_tests), _fmt_time(self.total_elapsed)))
        widths = [max(len(x[i]) for x in [head] + body) for i in range(len(head))]
        line = lambda row: " | ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
        sep = "-+-".join("-" * w for w in widths)
        return "\n".join([self.title, line(head), sep] + [line(b) for b in body[:-1]] + [sep, line(body[-1])])

    def jsonl(self) -> str:
        return "".join(json.dumps(dataclasses.asdict(r), ensure_ascii=False) + "\n" for r in self.rows)


def _fmt_time(s: float) -> str:
    if s < 60:
        return f"{s:.1f}s"
    m, s = divmod(int(round(s)), 60)
    if m < 60:
        return f"{m}min{s}s"
    h, m = divmod(m, 60)
    return f"{h}h{m}min{s}s"
