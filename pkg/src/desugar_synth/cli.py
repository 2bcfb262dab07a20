"""Command-line front end.

    desugar-synth run pidgin --all --skip-slow
    desugar-synth run pidgin --step S7 --space H1 --timeout 600
    desugar-synth eval source '(SLet x (SNum 1) (SPrim "+" [(SVar x) (SVar x)]))'
    desugar-synth enum SIf H1 --first 200
    desugar-synth verify listcomp --variants

Exit codes: 0 success, 1 a verification failed, 2 invalid input,
3 a search step got stuck (timeout, exhausted or regression).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import List, Optional

from .enumeration import EnumCache, constructor_enum
from .hypothesis import BUILTIN_NAMES, derive_context, space_from_config
from .metaterm import meta_to_sexpr, pretty
from .pidgin import eval_core, eval_source, language
from .semantics import DEFAULT_BUDGET, StepBudget
from .sexpr import SexprError
from .solver import SearchResult, check_candidate, default_jobs, solve_extension, verify_membership
from .tasks import ReportRow, RunReport, TaskValidationError, load_rules, load_task_file
from .terms import SortError, parse_term, sort_check

EXIT_OK, EXIT_CHECK, EXIT_INVALID, EXIT_STUCK = 0, 1, 2, 3


def _err(msg: str) -> None:
    print(f"desugar-synth: {msg}", file=sys.stderr)


def _budget(args) -> Optional[StepBudget]:
    if args.step_budget is None:
        return None
    return dataclasses.replace(DEFAULT_BUDGET, max_steps=args.step_budget)


def _progress(step: str):
    def report(tried, size, elapsed):
        rate = tried / elapsed if elapsed else 0.0
        print(f"  [{step}] {tried} candidates, size {size}, {elapsed:.0f}s, {rate:.0f}/s",
              file=sys.stderr, flush=True)
    return report


# --- run ------------------------------------------------------------------------------


def cmd_run(args) -> int:
    tf = load_task_file(args.task)
    budget = _budget(args)
    if args.all:
        keys = list(range(len(tf.steps)))
    else:
        keys = [tf.step_index(k) for k in args.step]
    report = RunReport(f"{tf.language.name}: {Path(tf.source).stem}")
    # A single step starts from the intended rules of every other step; with
    # --all, each step builds on what the previous steps found.
    rules = tf.known_rules() if not args.all else dict(tf.base_rules)
    stuck = False
    for k in keys:
        step = tf.steps[k]
        if args.skip_slow and step.slow:
            rules.update({c: tf.intended[c] for c in step.group if c in tf.intended})
            rules.update(step.hints)
            report.rows.append(_skipped_row(step))
            print(f"{step.name}: skipped (slow)", file=sys.stderr)
            continue
        task = tf.extension_task(k, rules, jobs=args.jobs, timeout=args.timeout, budget=budget,
                                 space_override=args.space)
        space = args.space or _space_label(step.space_config)
        res = solve_extension(task, progress=None if args.quiet else _progress(step.name))
        regressions = []
        if res.found:
            rules.update(res.rules)
            if args.all:
                regressions = [tf.steps[j].name for j in keys[:keys.index(k)]
                               if not check_candidate(rules, tf.steps[j].tests, budget or tf.budget)]
        report.add(step, res, space, regressions)
        _print_step(step.name, res, regressions)
        if not res.found or regressions:
            stuck = True
            if args.all:
                print(f"stuck at step {step.name}", file=sys.stderr)
                break
    print(report.table())
    if args.report:
        with open(args.report, "a", encoding="utf-8") as fh:
            fh.write(report.jsonl())
    return EXIT_STUCK if stuck else EXIT_OK


def _space_label(cfg) -> str:
    if isinstance(cfg, str):
        return cfg
    if "builtin" in cfg:
        return cfg.get("name", cfg["builtin"] + "+")
    return ",".join(sorted({_space_label(v) for v in cfg.values()}))


def _skipped_row(step):
    return ReportRow(step.name, step.group, _space_label(step.space_config), "skipped",
                     None, None, len(step.tests), 0.0)


def _print_step(name: str, res: SearchResult, regressions) -> None:
    if res.found:
        for c, m in res.rules.items():
            print(f"{name}: {c} = {meta_to_sexpr(m)}", file=sys.stderr)
    else:
        print(f"{name}: {res.status} after {res.candidates_tried} candidates", file=sys.stderr)
    if regressions:
        print(f"{name}: earlier steps now fail: {', '.join(regressions)}", file=sys.stderr)


# --- eval -----------------------------------------------------------------------------


def cmd_eval(args) -> int:
    lang = language(args.language)
    sig = lang.source if args.side == "source" else lang.core
    t = parse_term(args.program, sig, sig.program_sort, user=args.side == "source")
    sort_check(t, sig, sig.program_sort)
    b = _budget(args) or DEFAULT_BUDGET
    out = eval_source(t, b) if args.side == "source" else eval_core(t, b)
    print(out.to_sexpr())
    return EXIT_OK


# --- enum -----------------------------------------------------------------------------


def cmd_enum(args) -> int:
    lang = language(args.language)
    f = lang.source.constructors.get(args.constructor)
    if f is None:
        raise ValueError(f"unknown source constructor {args.constructor}")
    space = space_from_config(args.space, lang.core)
    e = constructor_enum(f, space, lang.map_sort, EnumCache(space))
    print(f"{f.name} in {space.name}: context {derive_context(f, lang.map_sort)}")
    if args.first is None or args.counts:
        total = 0
        print("size  count  cumulative")
        for k in range(1, args.max_size + 1):
            n = e.count(k)
            total += n
            print(f"{k:4d}  {n}  {total}")
    if args.first:
        for i, (size, m) in enumerate(e.stream_sized(0, args.max_size)):
            if i >= args.first:
                break
            text = pretty(m) if args.pretty else meta_to_sexpr(m)
            print(f"{i:6d}  [{size}]  {text}")
    return EXIT_OK


# --- verify ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    tf = load_task_file(args.task)
    if args.rules:
        rf = load_rules(args.rules)
        rules = {**tf.base_rules, **rf.rules, **(rf.variants if args.variants else {})}
    else:
        rules = tf.known_rules(variants=args.variants)
    ok = True
    for k, step in enumerate(tf.steps):
        task = tf.extension_task(k, rules, budget=_budget(args))
        rep = verify_membership(rules, task, with_index=args.index)
        status = "PASS" if rep.passed else "FAIL"
        ok &= rep.passed
        parts = []
        for e in rep.entries:
            extra = f" index {e.index}" if e.index is not None else ""
            why = f" ({e.error})" if e.error else ""
            parts.append(f"{e.constructor} size {e.size}{extra}{why}")
        print(f"{step.name}: {status}  {'; '.join(parts)}  {len(task.tests)} tests")
        ce = rep.check.counterexample
        if ce is not None:
            named = f" ({task.tests[ce.test].name})" if ce.test >= 0 else ""
            print(f"  {ce}{named}")
    return EXIT_OK if ok else EXIT_CHECK


# --- entry point ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="desugar-synth",
                                description="Synthesize desugaring rules from tests.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="search for the rules of one or more steps")
    r.add_argument("task", help="task file path or shipped name (pidgin, listcomp, trycatch)")
    which = r.add_mutually_exclusive_group(required=True)
    which.add_argument("--step", action="append", help="step number or name; repeatable")
    which.add_argument("--all", action="store_true", help="learn every step in order")
    r.add_argument("--jobs", type=int, default=default_jobs())
    r.add_argument("--timeout", type=float, help="seconds per step")
    r.add_argument("--step-budget", type=int, help="interpreter step bound per evaluation")
    r.add_argument("--space", help=f"override the hypothesis space ({', '.join(BUILTIN_NAMES)})")
    r.add_argument("--skip-slow", action="store_true",
                   help="use the intended rules for steps tagged slow instead of searching")
    r.add_argument("--report", help="append one JSON record per step to this file")
    r.add_argument("--quiet", action="store_true", help="no progress lines")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="evaluate one program")
    e.add_argument("side", choices=("source", "core"))
    e.add_argument("program", help="term s-expression")
    e.add_argument("--language", default="pidgin")
    e.add_argument("--step-budget", type=int)
    e.set_defaults(func=cmd_eval)

    n = sub.add_parser("enum", help="list candidate rules for a constructor")
    n.add_argument("constructor")
    n.add_argument("space", help=f"one of {', '.join(BUILTIN_NAMES)}")
    n.add_argument("--language", default="pidgin")
    n.add_argument("--max-size", type=int, default=8)
    n.add_argument("--first", type=int, help="print the first N candidates")
    n.add_argument("--counts", action="store_true", help="also print counts when using --first")
    n.add_argument("--pretty", action="store_true", help="print rules in let/case notation")
    n.set_defaults(func=cmd_enum)

    v = sub.add_parser("verify", help="check rules against every step without searching")
    v.add_argument("task")
    v.add_argument("rules", nargs="?", help="rules file (default: the task's intended rules)")
    v.add_argument("--variants", action="store_true", help="use the alternative rules where shipped")
    v.add_argument("--index", action="store_true", help="also locate each rule in its enumeration")
    v.add_argument("--step-budget", type=int)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TaskValidationError, SexprError, SortError, ValueError, KeyError,
            FileNotFoundError) as e:
        _err(str(e))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
