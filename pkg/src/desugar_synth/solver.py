"""Checking candidate desugarings against tests, and searching for them.

Two routes check a candidate. :func:`check_candidate` is the reference:
translate each program with :func:`~desugar_synth.metaterm.desugar_with`,
run the core interpreter, compare. :class:`IncrementalChecker` is what the
search uses: it translates only the parts of a test program that mention
the constructors being learned, reusing cached translations for the rest,
and memoises core evaluations. The test suite compares the two routes.
"""

from __future__ import annotations

import itertools
import multiprocessing
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .enumeration import DEFAULT_MAX_SIZE, EnumCache, Enumeration, constructor_enum, product_interleave
from .hypothesis import HypothesisSpace, derive_context
from .metaterm import (
    MetaTypeError, _translate, context_names, desugar_with, meta_size, meta_to_sexpr, run_meta,
    type_check,
)
from .pidgin import LanguagePair, eval_core
from .semantics import DEFAULT_BUDGET, EvalError, Gensym, Outcome, StepBudget
from .terms import Term

JOBS_ENV = "DESUGAR_SYNTH_JOBS"


@dataclass(frozen=True)
class TestCase:
    program: Term
    expected: Outcome
    budget: Optional[StepBudget] = None
    name: str = ""


@dataclass(frozen=True)
class CounterExample:
    """First failing test (position in the test list) and the failed clause:
    ``soundness``, ``adequacy-errors`` or ``adequacy-distinct``."""

    test: int
    clause: str
    detail: str = ""

    def __str__(self):
        where = f"test {self.test}" if self.test >= 0 else "test set"
        return f"{self.clause} failed at {where}" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True)
class CheckResult:
    counterexample: Optional[CounterExample] = None

    @property
    def passed(self) -> bool:
        return self.counterexample is None

    def __bool__(self):
        return self.passed


PASS = CheckResult()


def _translator(rules) -> Callable[[Term], Outcome]:
    if callable(rules):
        return rules
    return lambda t: desugar_with(rules, t)


def desugar_expected(rules, o: Outcome) -> Outcome:
    """The candidate translation lifted to outcomes: an error stays itself;
    an escaped exception keeps its kind with a translated payload."""
    if o.kind == "error":
        return o
    r = _translator(rules)(o.term)
    if r.kind == "error" or o.kind == "value":
        return r
    return Outcome.uncaught(r.term)


def check_candidate(rules, tests: Sequence[TestCase],
                    budget: StepBudget = DEFAULT_BUDGET) -> CheckResult:
    """Soundness and adequacy of ``rules`` on ``tests``.

    ``rules`` maps source constructors to meta-terms; any function from
    source terms to outcomes (a hand-written desugaring) also works.

    For every test, in order: the translated expected outcome must not be
    an error unless the expected outcome is (adequacy on errors), and
    evaluating the translated program must give exactly the translated
    expected outcome (soundness). Finally the number of distinct translated
    outcomes must equal the number of distinct expected outcomes.
    """
    tr = _translator(rules)
    images = []
    for n, tc in enumerate(tests):
        want = desugar_expected(tr, tc.expected)
        if not tc.expected.is_error and want.is_error:
            return CheckResult(CounterExample(n, "adequacy-errors", f"{tc.expected} maps to {want}"))
        prog = tr(tc.program)
        got = prog if prog.is_error else eval_core(prog.term, tc.budget or budget)
        if got != want:
            return CheckResult(CounterExample(n, "soundness", f"expected {want}, got {got}"))
        images.append(want)
    if len(set(images)) != len({tc.expected for tc in tests}):
        return CheckResult(CounterExample(-1, "adequacy-distinct",
                                          "distinct outcomes are identified by the translation"))
    return PASS


# --- the incremental route ------------------------------------------------------------


class _Failed(Exception):
    pass


class IncrementalChecker:
    """Checks candidates for the constructors ``group`` given fixed rules
    for everything else; must agree with :func:`check_candidate`."""

    def __init__(self, fixed: Mapping, group: Iterable[str], tests: Sequence[TestCase],
                 budget: StepBudget = DEFAULT_BUDGET, eval_memo: int = 200_000):
        self.fixed = dict(fixed)
        self.group = tuple(group)
        gset = frozenset(self.group)
        self.tests = list(tests)
        self.budget = budget
        self.budgets = [tc.budget or budget for tc in self.tests]
        self.memo_cap = eval_memo
        self.dynamic = set()
        for tc in self.tests:
            for t in (tc.program, tc.expected.term):
                if t is not None:
                    self._mark(t, gset)
        self.static_memo: Dict[tuple, tuple] = {}
        self.eval_memo: List[Dict[Term, Outcome]] = [dict() for _ in self.tests]
        self.distinct_expected = len({tc.expected for tc in self.tests})
        # translations of expected outcomes that do not depend on the candidate
        self.fixed_images = [None if self._depends(tc.expected) else desugar_expected(self.fixed, tc.expected)
                             for tc in self.tests]

    def _mark(self, t, gset) -> bool:
        if type(t) is tuple:
            hit = False
            for x in t:
                hit = self._mark(x, gset) or hit
            return hit
        if type(t) is not Term:
            return False
        hit = t.ctor in gset
        for a in t.args:
            hit = self._mark(a, gset) or hit
        if hit:
            self.dynamic.add(t)
        return hit

    def _depends(self, o: Outcome) -> bool:
        return o.term is not None and o.term in self.dynamic

    def _tr(self, t, rules, g):
        if type(t) is tuple:
            return tuple([self._tr(x, rules, g) for x in t])
        if type(t) is not Term:
            return t
        if t not in self.dynamic:
            key = (t, g.n)
            hit = self.static_memo.get(key)
            if hit is None:
                try:
                    hit = (_translate(t, self.fixed, g), g.n, None)
                except EvalError as e:
                    hit = (None, g.n, e.tag)
                self.static_memo[key] = hit
            g.n = hit[1]
            if hit[2] is not None:
                raise EvalError(hit[2])
            return hit[0]
        if t.ctor == "SFBind":
            return Term("pair", (t.args[0], self._tr(t.args[1], rules, g)))
        args = [self._tr(a, rules, g) for a in t.args]
        return run_meta(rules[t.ctor], dict(zip(context_names(len(args)), args)), g)

    def _translate(self, t, rules) -> Outcome:
        try:
            return Outcome.value(self._tr(t, rules, Gensym()))
        except EvalError as e:
            return Outcome.error(e.tag)

    def _image(self, n, rules) -> Outcome:
        fixed = self.fixed_images[n]
        if fixed is not None:
            return fixed
        o = self.tests[n].expected
        if o.kind == "error":
            return o
        r = self._translate(o.term, rules)
        if r.kind == "error" or o.kind == "value":
            return r
        return Outcome.uncaught(r.term)

    def _eval(self, n, t: Term) -> Outcome:
        memo = self.eval_memo[n]
        r = memo.get(t)
        if r is None:
            r = eval_core(t, self.budgets[n])
            if len(memo) >= self.memo_cap:
                memo.clear()
            memo[t] = r
        return r

    def rules_for(self, candidate: Sequence) -> Dict[str, object]:
        rules = dict(self.fixed)
        rules.update(zip(self.group, candidate))
        return rules

    def check(self, candidate: Sequence) -> CheckResult:
        """``candidate`` lists one meta-term per group constructor."""
        rules = self.rules_for(candidate)
        images = []
        for n, tc in enumerate(self.tests):
            want = self._image(n, rules)
            if not tc.expected.is_error and want.is_error:
                return CheckResult(CounterExample(n, "adequacy-errors"))
            prog = self._translate(tc.program, rules)
            got = prog if prog.is_error else self._eval(n, prog.term)
            if got != want:
                return CheckResult(CounterExample(n, "soundness"))
            images.append(want)
        if len(set(images)) != self.distinct_expected:
            return CheckResult(CounterExample(-1, "adequacy-distinct"))
        return PASS

    def passes(self, candidate: Sequence) -> bool:
        return self.check(candidate).passed


# --- tasks and search ------------------------------------------------------------------


@dataclass
class ExtensionTask:
    """Learn rules for ``group`` given ``base`` rules for a sublanguage.

    ``hints`` are user-supplied rules for some group members; they are
    used as given and not searched for.
    """

    language: LanguagePair
    base: Dict[str, object]
    group: Tuple[str, ...]
    spaces: Dict[str, HypothesisSpace]
    tests: List[TestCase]
    budget: StepBudget = DEFAULT_BUDGET
    timeout: Optional[float] = None
    jobs: int = 1
    hints: Dict[str, object] = field(default_factory=dict)
    max_size: int = DEFAULT_MAX_SIZE
    max_candidates: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        self.group = tuple(self.group)
        overlap = set(self.group) & set(self.base)
        if overlap:
            raise ValueError(f"{sorted(overlap)} already have rules in the base desugaring")
        for c in self.searched:
            if c not in self.spaces:
                raise ValueError(f"no hypothesis space for {c}")

    @property
    def searched(self) -> Tuple[str, ...]:
        return tuple(c for c in self.group if c not in self.hints)


@dataclass
class SearchResult:
    status: str  # found | timeout | exhausted
    rules: Dict[str, object]
    index: Optional[int]
    candidates_tried: int
    elapsed: float
    task: str = ""
    hinted: Tuple[str, ...] = ()

    @property
    def found(self) -> bool:
        return self.status == "found"

    @property
    def size(self) -> Optional[int]:
        if not self.found:
            return None
        return sum(meta_size(m) for c, m in self.rules.items() if c not in self.hinted)

    def record(self) -> dict:
        return {
            "task": self.task,
            "status": self.status,
            "index": self.index,
            "size": self.size,
            "rules": {c: meta_to_sexpr(m) for c, m in self.rules.items()},
            "candidates": self.candidates_tried,
            "elapsed": round(self.elapsed, 3),
        }


def task_enumeration(task: ExtensionTask, caches: Optional[Dict[str, EnumCache]] = None) -> Enumeration:
    """Candidate tuples for the searched constructors, in search order."""
    caches = caches if caches is not None else {}
    es = []
    lang = task.language
    for c in task.searched:
        space = task.spaces[c]
        cache = caches.get(space.name)
        if cache is None or cache.space != space:
            cache = caches[space.name] = EnumCache(space)
        es.append(constructor_enum(lang.source.constructors[c], space, lang.map_sort, cache))
    return product_interleave(es)


def make_checker(task: ExtensionTask) -> IncrementalChecker:
    fixed = dict(task.base)
    fixed.update(task.hints)
    return IncrementalChecker(fixed, task.searched, task.tests, task.budget)


def default_jobs() -> int:
    env = os.environ.get(JOBS_ENV)
    if env:
        return max(1, int(env))
    return 1


Progress = Callable[[int, int, float], None]  # candidates tried, current size, elapsed


def solve_extension(task: ExtensionTask, progress: Optional[Progress] = None,
                    progress_every: float = 5.0, block_size: int = 20_000) -> SearchResult:
    """Scan candidates in enumeration order; return the first that passes."""
    t0 = time.monotonic()
    if not task.searched:
        fixed = dict(task.hints)
        ok = check_candidate({**task.base, **fixed}, task.tests, task.budget).passed
        return SearchResult("found" if ok else "exhausted", fixed, 0 if ok else None, 1,
                            time.monotonic() - t0, task.name, tuple(task.hints))
    enum = task_enumeration(task)
    checker = make_checker(task)
    jobs = max(1, task.jobs)
    if jobs == 1:
        return _serial(task, enum, checker, t0, progress, progress_every)
    return _parallel(task, enum, checker, t0, jobs, block_size, progress, progress_every)


def _result(task, status, cand, index, tried, t0):
    rules = dict(task.hints)
    if cand is not None:
        rules.update(zip(task.searched, cand))
    return SearchResult(status, rules, index, tried, time.monotonic() - t0, task.name, tuple(task.hints))


def _serial(task, enum, checker, t0, progress, every):
    deadline = None if task.timeout is None else t0 + task.timeout
    limit = task.max_candidates
    next_report = t0 + every
    tried = 0
    for size, cand in enum.stream_sized(0, task.max_size):
        if checker.passes(cand):
            return _result(task, "found", cand, tried, tried + 1, t0)
        tried += 1
        if not tried & 63:
            now = time.monotonic()
            if deadline is not None and now > deadline:
                return _result(task, "timeout", None, None, tried, t0)
            if progress is not None and now >= next_report:
                progress(tried, size, now - t0)
                next_report = now + every
        if limit is not None and tried >= limit:
            return _result(task, "timeout", None, None, tried, t0)
    return _result(task, "exhausted", None, None, tried, t0)


# state inherited by forked workers
_WORKER: dict = {}


def _scan_block(b: int):
    enum, checker, size, max_size = (_WORKER[k] for k in ("enum", "checker", "block", "max_size"))
    start = b * size
    n = 0
    for cand in itertools.islice(enum.stream(start, max_size), size):
        if checker.passes(cand):
            return b, start + n, n + 1
        n += 1
    return b, None, n


def _parallel(task, enum, checker, t0, jobs, block, progress, every):
    total = enum.cumulative(task.max_size)
    nblocks = -(-total // block)
    _WORKER.update(enum=enum, checker=checker, block=block, max_size=task.max_size)
    ctx = multiprocessing.get_context("fork")
    deadline = None if task.timeout is None else t0 + task.timeout
    tried = 0
    next_report = t0 + every
    with ctx.Pool(jobs) as pool:
        pending = {}
        submitted = 0
        done = 0
        while done < nblocks:
            while submitted < nblocks and len(pending) < 2 * jobs:
                pending[submitted] = pool.apply_async(_scan_block, (submitted,))
                submitted += 1
            res = pending[done]
            while not res.ready():
                res.wait(0.2)
                now = time.monotonic()
                if deadline is not None and now > deadline:
                    pool.terminate()
                    return _result(task, "timeout", None, None, tried, t0)
                if progress is not None and now >= next_report:
                    progress(tried, enum.locate(min(done * block, total - 1), task.max_size)[0], now - t0)
                    next_report = now + every
            _, hit, n = res.get()
            del pending[done]
            done += 1
            tried += n
            if hit is not None:
                pool.terminate()
                k, i = enum.locate(hit, task.max_size)
                return _result(task, "found", enum.select(k, i), hit, tried, t0)
            if task.max_candidates is not None and tried >= task.max_candidates:
                pool.terminate()
                return _result(task, "timeout", None, None, tried, t0)
    return _result(task, "exhausted", None, None, tried, t0)


# --- sequential learning ------------------------------------------------------------------


@dataclass
class StepOutcome:
    task: ExtensionTask
    result: SearchResult
    regressions: List[int] = field(default_factory=list)  # earlier steps whose tests now fail


@dataclass
class SequentialResult:
    rules: Dict[str, object]
    steps: List[StepOutcome]
    stuck_at: Optional[int] = None
    full_check: Optional[CheckResult] = None

    @property
    def succeeded(self) -> bool:
        return self.stuck_at is None and bool(self.full_check)


def solve_sequential(tasks: Sequence[ExtensionTask], progress: Optional[Callable] = None) -> SequentialResult:
    """Greedy: each step's rules become part of the next step's base."""
    rules: Dict[str, object] = dict(tasks[0].base) if tasks else {}
    steps: List[StepOutcome] = []
    for k, task in enumerate(tasks):
        task.base = {**task.base, **rules}
        for c in task.group:
            task.base.pop(c, None)
        res = solve_extension(task, progress=(lambda *a, k=k: progress(k, *a)) if progress else None)
        out = StepOutcome(task, res)
        steps.append(out)
        if not res.found:
            return SequentialResult(rules, steps, stuck_at=k)
        rules.update(res.rules)
        out.regressions = [j for j, prev in enumerate(tasks[:k])
                           if not check_candidate(rules, prev.tests, prev.budget)]
    everything = [tc for t in tasks for tc in _with_budget(t)]
    return SequentialResult(rules, steps, None, check_candidate(rules, everything))


def _with_budget(task: ExtensionTask) -> List[TestCase]:
    return [tc if tc.budget is not None else TestCase(tc.program, tc.expected, task.budget, tc.name)
            for tc in task.tests]


# --- membership ---------------------------------------------------------------------------


@dataclass
class MembershipEntry:
    constructor: str
    typed: bool
    size: int
    error: str = ""
    index: Optional[int] = None


@dataclass
class MembershipReport:
    entries: List[MembershipEntry]
    check: CheckResult

    @property
    def passed(self) -> bool:
        return all(e.typed for e in self.entries) and self.check.passed

    @property
    def size(self) -> int:
        return sum(e.size for e in self.entries)


def verify_membership(intended: Mapping, task: ExtensionTask, with_index: bool = False) -> MembershipReport:
    """Type-check the intended rules in the task's spaces and run the tests,
    without searching. ``with_index`` also locates each rule in its
    constructor's enumeration."""
    lang = task.language
    entries = []
    for c in task.group:
        m = intended.get(c) if c not in task.hints else task.hints[c]
        if m is None:
            entries.append(MembershipEntry(c, False, 0, "no rule given"))
            continue
        size = meta_size(m)
        if c in task.hints:
            entries.append(MembershipEntry(c, True, size, "hint"))
            continue
        f = lang.source.constructors[c]
        space = task.spaces[c]
        try:
            type_check(m, derive_context(f, lang.map_sort), lang.map_sort(f.result_sort), space)
        except MetaTypeError as e:
            entries.append(MembershipEntry(c, False, size, str(e)))
            continue
        idx = None
        if with_index:
            idx = constructor_enum(f, space, lang.map_sort).index_of(m)
        entries.append(MembershipEntry(c, True, size, "", idx))
    rules = {**task.base, **task.hints, **{c: intended[c] for c in task.group if c in intended}}
    return MembershipReport(entries, check_candidate(rules, task.tests, task.budget))
