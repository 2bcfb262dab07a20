from pathlib import Path

import pytest
import yaml
from hypothesis import given, settings

from desugar_synth.metaterm import desugar_with
from desugar_synth.pidgin import (
    PIDGIN, PIDGIN_LISTCOMP, PIDGIN_TRYCATCH, eval_core, eval_source, expand_macros,
    oracle_desugar,
)
from desugar_synth.pidgin.syntax import T, cnum, cvar, snum
from desugar_synth.semantics import ErrorTag, EvalError, Gensym, Outcome, kleisli_compose, parse_outcome
from desugar_synth.terms import identifiers, parse_term, sort_check

from helpers import SMALL, shipped_tests, source_programs, task

GOLDEN = yaml.safe_load((Path(__file__).parent / "golden" / "eval.yaml").read_text())

SECTIONS = {
    "core": (PIDGIN, "core"),
    "language_listcomp": (PIDGIN_LISTCOMP, "core"),
    "language_trycatch": (PIDGIN_TRYCATCH, "core"),
    "source": (PIDGIN, "source"),
    "source_listcomp": (PIDGIN_LISTCOMP, "source"),
    "source_trycatch": (PIDGIN_TRYCATCH, "source"),
}
CASES = [(sec, i, e) for sec in SECTIONS for i, e in enumerate(GOLDEN[sec])]


@pytest.mark.parametrize("section, i, entry", CASES, ids=[f"{s}-{i}" for s, i, _ in CASES])
def test_golden_outcomes(section, i, entry):
    lang, side = SECTIONS[section]
    sig = lang.core if side == "core" else lang.source
    t = parse_term(entry["program"], sig, sig.program_sort)
    sort_check(t, sig)
    want = parse_outcome(entry["outcome"], sig)
    got = eval_core(t) if side == "core" else eval_source(t)
    assert got == want
    if side == "source":
        # the direct source interpreter agrees with translate-then-run
        via_core = kleisli_compose(oracle_desugar, eval_core)(t)
        assert via_core.kind == got.kind
        if got.kind == "error":
            assert via_core == got
        else:
            assert oracle_desugar(got.term).term == via_core.term


# --- reference translation --------------------------------------------------------------------


def test_oracle_relabellings():
    t1, t2 = snum(1), T("SVar", "x")
    assert oracle_desugar(T("SLet", "i", t1, t2)).term == T("CLet", "i", cnum(1), cvar("x"))
    assert oracle_desugar(T("STrue")).term == T("CBool", True)


def test_oracle_for_unzips_bindings():
    t = T("SFor", T("SVar", "f"), (T("SFBind", "a", snum(1)), T("SFBind", "b", snum(2))), T("SVar", "a"))
    want = T("CApp", cvar("f"), (T("CLam", ("a", "b"), cvar("a")), T("CList", (cnum(1), cnum(2)))))
    assert oracle_desugar(t).term == want


def test_oracle_between_uses_fresh_names():
    t = T("SBetween", snum(1), snum(2), snum(3))
    out = oracle_desugar(t).term
    names = [n for n in identifiers(out) if n.startswith("%")]
    assert len(set(names)) == 3
    assert out.ctor == "CLet"


def test_oracle_rejects_bad_prim_arity():
    for args in [(), (snum(1), snum(2), snum(3))]:
        assert oracle_desugar(T("SPrim", "+", args)) == Outcome.error(ErrorTag.SyntaxError)


def test_oracle_is_deterministic():
    t = T("SBetween", snum(1), T("SBetween", snum(1), snum(2), snum(3)), snum(3))
    assert oracle_desugar(t) == oracle_desugar(t)


@pytest.mark.parametrize("name", ["pidgin", "listcomp", "trycatch"])
def test_rule_encoding_matches_reference_translation(name):
    rules = task(name).known_rules()
    for tc in shipped_tests(name):
        assert desugar_with(rules, tc.program) == oracle_desugar(tc.program), tc.name


@settings(max_examples=300, deadline=None)
@given(source_programs())
def test_rule_encoding_matches_reference_on_random_programs(t):
    assert desugar_with(task("pidgin").known_rules(), t) == oracle_desugar(t)


# --- composition law and sort preservation ------------------------------------------------


@pytest.mark.parametrize("name", ["pidgin", "listcomp", "trycatch"])
def test_composition_law_on_shipped_tests(name):
    for tc in shipped_tests(name):
        src = eval_source(tc.program, tc.budget)
        core = oracle_desugar(tc.program)
        via_core = eval_core(core.term, tc.budget) if core.is_value else core
        assert src.kind == via_core.kind
        if src.kind == "value":
            assert oracle_desugar(src.term) == via_core
        elif src.kind == "uncaught":
            assert oracle_desugar(src.term).term == via_core.term
        else:
            assert src == via_core


@settings(max_examples=300, deadline=None)
@given(source_programs())
def test_composition_law_on_random_programs(t):
    src = eval_source(t, SMALL)
    core = oracle_desugar(t)
    via_core = eval_core(core.term, SMALL) if core.is_value else core
    if src.is_value:
        assert oracle_desugar(src.term) == via_core
    else:
        assert src == via_core


@settings(max_examples=200, deadline=None)
@given(source_programs())
def test_reference_translation_preserves_sorts(t):
    out = oracle_desugar(t)
    if out.is_value:
        sort_check(out.term, PIDGIN.core, PIDGIN.core.program_sort)


# --- macros -----------------------------------------------------------------------------


def test_expand_single_macro():
    t = T("MApp", T("MLam", "u", T("Return", T("MVar", "u"))), cnum(1))
    assert expand_macros(t) == T("Return", cnum(1))


def test_unbound_macro_variable():
    with pytest.raises(EvalError) as ei:
        expand_macros(T("MVar", "u"))
    assert ei.value.tag == ErrorTag.MacroError


def test_expanded_comprehension_is_macro_free():
    prog = parse_term("(SListComp (SVar x) (QBind x (SList [(SNum 1) (SNum 2)]) (QEmpty)))",
                      PIDGIN_LISTCOMP.source)
    core = expand_macros(oracle_desugar(prog).term)
    assert not any(n.ctor in ("MApp", "MLam", "MVar") for n in _walk(core))
    assert eval_core(core) == Outcome.value(T("CList", (cnum(1), cnum(2))))


def test_expansion_and_run_time_macros_agree_on_shipped_tests():
    for tc in shipped_tests("listcomp"):
        core = oracle_desugar(tc.program).term
        assert eval_core(expand_macros(core), tc.budget) == eval_core(core, tc.budget)


def _walk(t):
    from desugar_synth.terms import iter_terms
    return iter_terms(t)


# --- try/catch/finally --------------------------------------------------------------------


def test_decision_table_rows():
    tf = task("trycatch")
    step = tf.steps[tf.step_index("STryCatchFinally")]
    got = [eval_source(tc.program).to_sexpr() for tc in step.tests[:6]]
    assert got == [
        "(value (SNum 1))",       # body normal, finally normal
        "(uncaught (SNum 3))",    # body normal, finally throws
        "(value (SNum 11))",      # handler normal, finally normal
        "(uncaught (SNum 3))",    # handler normal, finally throws
        "(uncaught (SNum 21))",   # handler throws, finally normal
        "(uncaught (SNum 3))",    # handler throws, finally throws
    ]


def test_gensym_names_are_reserved():
    g = Gensym()
    assert [g(), g()] == ["%g0", "%g1"]
