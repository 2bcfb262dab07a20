import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from desugar_synth.enumeration import (
    EnumCache, brute_force, build_enum, constructor_enum, product_interleave,
)
from desugar_synth.hypothesis import builtin_space, derive_context
from desugar_synth.metaterm import (
    THROW, ConstRef, CtorApp, MetaContext, MVarRef, alpha_canonical, meta_size,
    type_check,
)
from desugar_synth.pidgin import PIDGIN, PIDGIN_LISTCOMP, PIDGIN_TRYCATCH
from desugar_synth.pidgin.syntax import CTERM

LANGS = {"pidgin": PIDGIN, "listcomp": PIDGIN_LISTCOMP, "trycatch": PIDGIN_TRYCATCH}


def enum_for(ctor, space="H1", lang=PIDGIN, cache=None):
    return constructor_enum(lang.source.constructors[ctor], builtin_space(space, lang.core),
                            lang.map_sort, cache)


# --- hand counts ----------------------------------------------------------------------------


def test_counts_for_nullary_constructor():
    # size 1: syntax-error. size 2: CBool true/false, CList []. size 3: nothing fits.
    # size 4: CPrim1 op t for 8 ops and the 3 size-2 terms (24); fresh v = t in v (3);
    # CApp t [] (3); CLam [] t (3).
    assert enum_for("STrue").counts(4) == [1, 3, 0, 33]


def test_counts_with_a_number_argument():
    # as above with CNum x1 as a fourth size-2 term: 8*4 + 4 + 4 + 4 at size 4
    assert enum_for("SNum").counts(4) == [1, 4, 0, 44]


def test_relabel_counts():
    assert enum_for("SLet", "relabel").counts(3) == [0, 0, 0]
    assert enum_for("SLet", "relabel").cumulative(4) == 2


def test_first_terms_in_order():
    e = enum_for("SNum")
    got = list(itertools.islice(e.stream(), 5))
    assert got == [THROW, CtorApp("CNum", (MVarRef("x1"),)), CtorApp("CBool", (ConstRef(True),)),
                   CtorApp("CBool", (ConstRef(False),)), CtorApp("CList", (CtorApp("nil"),))]


# --- select / rank / index ---------------------------------------------------------------


@pytest.mark.parametrize("ctor, space, lang", [
    ("SIf", "H1", "pidgin"), ("SFor", "H1", "pidgin"), ("SBetween", "H2", "pidgin"),
    ("QBind", "Hlc", "listcomp"), ("STryCatchFinally", "Htcf", "trycatch"),
])
def test_select_and_rank_are_inverse(ctor, space, lang):
    e = enum_for(ctor, space, LANGS[lang])
    for k in range(1, 7):
        n = e.count(k)
        for i in sorted({0, n // 3, n // 2, n - 1}):
            if 0 <= i < n:
                m = e.select(k, i)
                assert meta_size(m) == k
                assert e.rank(m) == i


def test_stream_matches_select_global():
    e = enum_for("SPrim")
    for i, m in enumerate(itertools.islice(e.stream(), 400)):
        assert e.select_global(i) == m
        assert e.index_of(m) == i


def test_stream_resumes_from_an_offset():
    e = enum_for("SIf")
    full = list(itertools.islice(e.stream(), 3000))
    assert list(itertools.islice(e.stream(start=1234), 50)) == full[1234:1284]


def test_rank_rejects_foreign_term():
    e = enum_for("SNum")
    with pytest.raises(ValueError):
        e.rank(CtorApp("CNum", (MVarRef("x9"),)))


def test_select_out_of_range():
    with pytest.raises(IndexError):
        enum_for("SNum").select(1, 1)


def test_intended_rule_indices_are_stable():
    assert enum_for("SIf").index_of(CtorApp("CIf", tuple(MVarRef(f"x{i}") for i in (1, 2, 3)))) == 150


# --- the enumerator agrees with a naive generator -------------------------------------------


@pytest.mark.parametrize("ctor, space, lang, max_size", [
    ("SPrim", "H1", "pidgin", 5), ("SBetween", "H2", "pidgin", 6),
    ("STryCatchFinally", "Htcf", "trycatch", 6), ("SLet", "subst", "pidgin", 5),
    ("SLet", "relabel", "pidgin", 5),
])
def test_prefix_equals_brute_force(ctor, space, lang, max_size):
    lp = LANGS[lang]
    f = lp.source.constructors[ctor]
    sp = builtin_space(space, lp.core)
    e = constructor_enum(f, sp, lp.map_sort)
    prefix = list(e.stream(max_size=max_size))
    canon = [alpha_canonical(m) for m in prefix]
    assert len(set(canon)) == len(canon)
    assert set(canon) == set(brute_force(derive_context(f, lp.map_sort), lp.map_sort(f.result_sort),
                                         sp, max_size))


def test_enumerated_terms_type_check():
    e = enum_for("SFor")
    ctx = derive_context(PIDGIN.source.constructors["SFor"], PIDGIN.map_sort)
    space = builtin_space("H1", PIDGIN.core)
    for m in e.stream(max_size=6):
        type_check(m, ctx, CTERM, space)


# --- caching ---------------------------------------------------------------------------------


def test_cache_is_transparent():
    space = builtin_space("H1", PIDGIN.core)
    on = enum_for("SIf", cache=EnumCache(space))
    off = enum_for("SIf", cache=EnumCache(space, enabled=False))
    tiny = enum_for("SIf", cache=EnumCache(space, materialize=10, retention=100))
    a = list(itertools.islice(on.stream(), 5000))
    assert a == list(itertools.islice(off.stream(), 5000))
    assert a == list(itertools.islice(tiny.stream(), 5000))


def test_cache_rejects_other_space():
    with pytest.raises(ValueError):
        build_enum(MetaContext(), CTERM, builtin_space("H1", PIDGIN.core),
                   EnumCache(builtin_space("H2", PIDGIN.core)))


# --- fair products -------------------------------------------------------------------------


def test_product_orders_by_combined_size():
    a, b = enum_for("SNum"), enum_for("STrue")
    p = product_interleave([a, b])
    sizes = [meta_size(x) + meta_size(y) for x, y in itertools.islice(p.stream(), 3000)]
    assert sizes == sorted(sizes)
    assert p.counts(5) == [sum(a.count(i) * b.count(k - i) for i in range(1, k)) for k in range(1, 6)]


def test_product_breaks_ties_by_first_component_size():
    p = product_interleave([enum_for("SNum"), enum_for("STrue")])
    firsts = [meta_size(x) for x, y in p.terms(5)]
    assert firsts == sorted(firsts)


def test_product_of_one_wraps_in_tuples():
    e = enum_for("SNum")
    p = product_interleave([e])
    assert list(itertools.islice(p.stream(), 10)) == [(m,) for m in itertools.islice(e.stream(), 10)]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 20_000))
def test_product_rank_inverts_select(i):
    p = product_interleave([enum_for("SIf"), enum_for("SNum")])
    m = p.select_global(i)
    assert p.index_of(m) == i


def test_empty_product_is_rejected():
    with pytest.raises(ValueError):
        product_interleave([])
