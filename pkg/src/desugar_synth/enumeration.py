"""Size-indexed enumeration of well-typed meta-terms.

Every judgement ``ctx |- ? : sort`` at a given layer becomes an
:class:`Enumeration`: an ordered list of *alternatives* (one per derivation
rule that could end the derivation), each with a fixed own cost and a list
of premise enumerations. The terms of size ``k`` are, alternative by
alternative, all ways of splitting ``k - cost`` among the premises
(compositions in lexicographic order) and, for each split, the product of
the premise parts with the first premise varying slowest.

Only counts are computed eagerly; terms are produced by walking that
structure, either by streaming or by random access (:meth:`select`).

Order of alternatives within a size:

* left layer ``L``: ``Throw``, ``Case`` on each list variable, ``Unzip`` on
  each list-of-pairs variable (context order), then the right layer;
* right layers: ``Axiom`` (context order), constants (space order),
  constructors (``nil``/``cons`` first for list sorts, then core
  declaration order), then ``Fresh``, ``FreshTryCatch``, ``MetaLambda``,
  ``FreshPrime``.

With the fresh-at-top layer the right layer is ``F``: constructors whose
premises may not use the fresh family (layer ``R'``), and fresh-family
rules whose premises stay in ``F``.
"""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from .hypothesis import HypothesisSpace, derive_context
from .metaterm import (
    THROW, CaseList, ConstRef, CtorApp, Fresh, FreshPrime, FreshTryCatch, MetaContext,
    LEFT_RULES, MetaLambda, MVarRef, UnzipLet, bound_name, const_sort, meta_size,
)
from .terms import ID, ConstructorSig, Sort

DEFAULT_MAX_SIZE = 40
DEFAULT_MATERIALIZE = 20_000
DEFAULT_RETENTION = 4_000_000


class Alt:
    """One derivation rule: own size ``cost``, premises ``enums`` and a
    ``make`` building the meta-term from the premise terms."""

    __slots__ = ("cost", "enums", "make", "match", "label")

    def __init__(self, cost: int, enums: Sequence["Enumeration"], make: Callable,
                 match: Callable, label: str = ""):
        self.cost = cost
        self.enums = tuple(enums)
        self.make = make
        self.match = match  # term -> premise terms, or None if built by another rule
        self.label = label


class _Part:
    __slots__ = ("count", "starts", "segs", "terms")

    def __init__(self, count, starts, segs):
        self.count = count
        self.starts = starts
        self.segs = segs  # (alt, comps) with comps = (starts, [(count, sizes)]) or None for leaves
        self.terms = None


def _identity(x):
    return x


def _size_of(m) -> int:
    if type(m) is tuple:
        return sum(meta_size(x) for x in m)
    return meta_size(m)


class Enumeration:
    """The terms of one judgement, indexed by size then position."""

    def __init__(self, key, alts_fn: Callable[[], List[Alt]], cache: "EnumCache"):
        self.key = key
        self._alts_fn = alts_fn
        self._alts: Optional[List[Alt]] = None
        self._parts: Dict[int, _Part] = {}
        self.cache = cache

    @property
    def alts(self) -> List[Alt]:
        if self._alts is None:
            self._alts = self._alts_fn()
        return self._alts

    # --- counting ------------------------------------------------------------

    def _part(self, k: int) -> _Part:
        p = self._parts.get(k)
        if p is None:
            p = self._build(k)
            self._parts[k] = p
        return p

    def _build(self, k: int) -> _Part:
        segs, starts, total = [], [], 0
        for alt in self.alts:
            rem = k - alt.cost
            n = len(alt.enums)
            if n == 0:
                if rem == 0:
                    starts.append(total)
                    segs.append((alt, None))
                    total += 1
                continue
            if rem < n:
                continue
            cstarts, comps, sub = [], [], 0
            for sizes, c in _compositions(alt.enums, rem):
                cstarts.append(sub)
                comps.append((c, sizes))
                sub += c
            if sub:
                starts.append(total)
                segs.append((alt, (cstarts, comps)))
                total += sub
        return _Part(total, starts, segs)

    def count(self, k: int) -> int:
        if k < 1:
            return 0
        return self._part(k).count

    def counts(self, max_size: int) -> List[int]:
        return [self.count(k) for k in range(1, max_size + 1)]

    def cumulative(self, k: int) -> int:
        """Number of terms of size at most ``k``."""
        return sum(self.count(j) for j in range(1, k + 1))

    # --- generation ----------------------------------------------------------

    def terms(self, k: int) -> Sequence:
        """All terms of size ``k``, materialised when small enough."""
        p = self._part(k)
        if p.terms is not None:
            return p.terms
        if p.count <= self.cache.materialize and self.cache.reserve(p.count):
            p.terms = list(self._generate(p, 0))
            return p.terms
        return _Lazy(self, k, p.count)

    def iter_part(self, k: int, start: int = 0) -> Iterator:
        if k < 1:
            return iter(())
        p = self._part(k)
        if start >= p.count:
            return iter(())
        if p.terms is None and p.count <= self.cache.materialize:
            self.terms(k)
        if p.terms is not None:
            return itertools.islice(p.terms, start, None)
        return self._generate(p, start)

    def _generate(self, p: _Part, start: int) -> Iterator:
        i = bisect.bisect_right(p.starts, start) - 1 if start else 0
        for j in range(max(i, 0), len(p.segs)):
            alt, comps = p.segs[j]
            off = start - p.starts[j] if start > p.starts[j] else 0
            if comps is None:
                yield alt.make()
                continue
            cstarts, items = comps
            ci = bisect.bisect_right(cstarts, off) - 1 if off else 0
            make = alt.make
            for q in range(ci, len(items)):
                c, sizes = items[q]
                o = off - cstarts[q] if off > cstarts[q] else 0
                if make is _identity:
                    yield from alt.enums[0].iter_part(sizes[0], o)
                else:
                    for tup in _product(alt.enums, sizes, o):
                        yield make(*tup)

    def select(self, k: int, i: int):
        """The ``i``-th term of size ``k``."""
        p = self._part(k)
        if not 0 <= i < p.count:
            raise IndexError(f"size {k} has {p.count} terms, asked for {i}")
        if p.terms is not None:
            return p.terms[i]
        j = bisect.bisect_right(p.starts, i) - 1
        alt, comps = p.segs[j]
        i -= p.starts[j]
        if comps is None:
            return alt.make()
        cstarts, items = comps
        q = bisect.bisect_right(cstarts, i) - 1
        i -= cstarts[q]
        sizes = items[q][1]
        picked = [None] * len(sizes)
        for pos in range(len(sizes) - 1, -1, -1):
            e, s = alt.enums[pos], sizes[pos]
            i, d = divmod(i, e.count(s))
            picked[pos] = e.select(s, d)
        return alt.make(*picked)

    def rank(self, m, k: Optional[int] = None) -> int:
        """Position of ``m`` among the terms of its size (inverse of
        :meth:`select`); raises ``ValueError`` if ``m`` is not enumerated."""
        k = _size_of(m) if k is None else k
        p = self._part(k)
        for j, (alt, comps) in enumerate(p.segs):
            prem = alt.match(m)
            if prem is None:
                continue
            if comps is None:
                return p.starts[j]
            sizes = tuple(_size_of(x) for x in prem)
            cstarts, items = comps
            for q, (c, sz) in enumerate(items):
                if sz == sizes:
                    break
            else:
                break
            r = 0
            for e, s, x in zip(alt.enums, sizes, prem):
                r = r * e.count(s) + e.rank(x, s)
            return p.starts[j] + cstarts[q] + r
        raise ValueError(f"not enumerated here: {m!r}")

    def index_of(self, m) -> int:
        """Global position of ``m`` in :meth:`stream` order."""
        k = _size_of(m)
        return self.cumulative(k - 1) + self.rank(m, k)

    def locate(self, index: int, max_size: int = DEFAULT_MAX_SIZE) -> Tuple[int, int]:
        """Map a global index to ``(size, position within size)``."""
        base = 0
        for k in range(1, max_size + 1):
            c = self.count(k)
            if index < base + c:
                return k, index - base
            base += c
        raise IndexError(f"index {index} beyond the {base} terms up to size {max_size}")

    def select_global(self, index: int, max_size: int = DEFAULT_MAX_SIZE):
        k, i = self.locate(index, max_size)
        return self.select(k, i)

    def stream(self, start: int = 0, max_size: int = DEFAULT_MAX_SIZE) -> Iterator:
        """Terms in canonical order from global index ``start``."""
        base = 0
        for k in range(1, max_size + 1):
            c = self.count(k)
            if start < base + c:
                yield from self.iter_part(k, max(0, start - base))
            base += c

    def stream_sized(self, start: int = 0, max_size: int = DEFAULT_MAX_SIZE) -> Iterator[Tuple[int, object]]:
        """Like :meth:`stream` but yields ``(size, term)``."""
        base = 0
        for k in range(1, max_size + 1):
            c = self.count(k)
            if start < base + c:
                for t in self.iter_part(k, max(0, start - base)):
                    yield k, t
            base += c

    def __repr__(self):
        return f"Enumeration({self.key!r})"


class _Lazy:
    """Sequence view over a part too large to keep."""

    def __init__(self, e, k, n):
        self.e, self.k, self.n = e, k, n

    def __len__(self):
        return self.n

    def __iter__(self):
        return self.e.iter_part(self.k)

    def __getitem__(self, i):
        return self.e.select(self.k, i)


def _compositions(enums, total):
    """``(sizes, count)`` for every split of ``total`` among ``enums`` with
    nonzero count, lexicographic in ``sizes``."""
    n = len(enums)
    if n == 1:
        c = enums[0].count(total)
        if c:
            yield (total,), c
        return
    first, rest = enums[0], enums[1:]
    for s in range(1, total - (n - 1) + 1):
        c = first.count(s)
        if not c:
            continue
        for sizes, c2 in _compositions(rest, total - s):
            yield (s,) + sizes, c * c2


def _product(enums, sizes, offset):
    if len(enums) == 1:
        return ((t,) for t in enums[0].iter_part(sizes[0], offset))
    if offset == 0 and all(e.count(s) <= e.cache.materialize for e, s in zip(enums, sizes)):
        lists = [e.terms(s) for e, s in zip(enums, sizes)]
        if all(type(x) is list for x in lists):
            return itertools.product(*lists)
    return _nested(enums, sizes, offset)


def _nested(enums, sizes, offset):
    if len(enums) == 1:
        for t in enums[0].iter_part(sizes[0], offset):
            yield (t,)
        return
    rest = 1
    for e, s in zip(enums[1:], sizes[1:]):
        rest *= e.count(s)
    d, r = divmod(offset, rest)
    for t in enums[0].iter_part(sizes[0], d):
        for tail in _nested(enums[1:], sizes[1:], r):
            yield (t,) + tail
        r = 0


# --- the cache and judgement enumerations ------------------------------------------


@dataclass
class EnumCache:
    """Memo table from ``(context, depth, sort, layer)`` to enumerations.

    ``materialize`` is the largest part kept as a list; ``retention`` caps
    the total number of kept terms, beyond which parts are regenerated on
    demand. With ``enabled=False`` every request builds a new enumeration
    (same terms and order, much slower).
    """

    space: HypothesisSpace
    enabled: bool = True
    materialize: int = DEFAULT_MATERIALIZE
    retention: int = DEFAULT_RETENTION
    table: Dict[tuple, Enumeration] = field(default_factory=dict)
    kept: int = 0

    def reserve(self, n: int) -> bool:
        if self.kept + n > self.retention:
            return False
        self.kept += n
        return True

    def get(self, ctx: MetaContext, depth: int, sort: Sort, layer: str) -> Enumeration:
        key = (ctx.bindings, depth, sort, layer)
        if self.enabled:
            e = self.table.get(key)
            if e is not None:
                return e
        e = Enumeration(key, lambda: _alternatives(self, ctx, depth, sort, layer), self)
        if self.enabled:
            self.table[key] = e
        return e


def _leaf(term, label):
    return Alt(1, (), lambda: term, lambda m: () if m == term else None, label)


def _match_right(m):
    return None if type(m) in LEFT_RULES else (m,)


def _match_ctor(f):
    def match(m):
        return m.args if type(m) is CtorApp and m.ctor == f else None
    return match


def _match_binder(cls, *fields):
    def match(m):
        return tuple(getattr(m, a) for a in fields) if type(m) is cls else None
    return match


def _right_layer(space: HypothesisSpace) -> str:
    return "F" if space.fresh_at_top else "R"


def _alternatives(cache: EnumCache, ctx: MetaContext, d: int, sort: Sort, layer: str) -> List[Alt]:
    space = cache.space
    out: List[Alt] = []
    if layer == "L":
        rules = space.rules
        if "Throw" in rules:
            out.append(_leaf(THROW, "Throw"))
        if "CaseList" in rules:
            for name, s in ctx:
                if not s.is_list:
                    continue
                rest = ctx.remove(name)
                h, t = bound_name(d), bound_name(d + 1)
                nil = cache.get(rest, d, sort, "L")
                cons = cache.get(rest.extend((h, s.element), (t, s)), d + 2, sort, "L")
                out.append(Alt(1, (nil, cons),
                               lambda a, b, y=name, h=h, t=t: CaseList(y, a, h, t, b),
                               lambda m, y=name: (m.nil_branch, m.cons_branch)
                               if type(m) is CaseList and m.scrutinee == y else None, "Case"))
        if "UnzipLet" in rules:
            for name, s in ctx:
                if not (s.is_list and s.element.is_pair):
                    continue
                a_s, b_s = s.element.params
                l, r = bound_name(d), bound_name(d + 1)
                body = cache.get(ctx.remove(name).extend((l, Sort.list_of(a_s)), (r, Sort.list_of(b_s))),
                                 d + 2, sort, "L")
                out.append(Alt(1, (body,), lambda b, y=name, l=l, r=r: UnzipLet(y, l, r, b),
                               lambda m, y=name: (m.body,)
                               if type(m) is UnzipLet and m.scrutinee == y else None, "Unzip"))
        out.append(Alt(0, (cache.get(ctx, d, sort, _right_layer(space)),), _identity,
                       _match_right, "right"))
        return out

    for name, s in ctx:
        if s == sort:
            out.append(_leaf(MVarRef(name), "Axiom"))
    for c in space.constants:
        if const_sort(c) == sort:
            out.append(_leaf(ConstRef(c), "C"))
    inner = "R" if layer == "R" else "R'"
    if sort.is_list:
        if "nil" in space.constructors:
            out.append(_leaf(CtorApp("nil", ()), "F"))
        if "cons" in space.constructors:
            out.append(Alt(1, (cache.get(ctx, d, sort.element, inner), cache.get(ctx, d, sort, inner)),
                           lambda h, t: CtorApp("cons", (h, t)), _match_ctor("cons"), "F"))
    for name in space.constructors:
        sig = space.core.constructors.get(name)
        if sig is None or sig.result_sort != sort:
            continue
        if not sig.argument_sorts:
            out.append(_leaf(CtorApp(name, ()), "F"))
            continue
        premises = tuple(cache.get(ctx, d, s, inner) for s in sig.argument_sorts)
        out.append(Alt(1, premises, lambda *xs, f=name: CtorApp(f, xs), _match_ctor(name), "F"))
    if layer != "R'" and sort == space.core.program_sort:
        cterm = sort
        v = bound_name(d)
        inside = ctx.extend((v, cterm))
        rules = space.rules
        if "Fresh" in rules:
            out.append(Alt(1, (cache.get(ctx, d, cterm, layer), cache.get(inside, d + 1, cterm, layer)),
                           lambda a, b, v=v: Fresh(v, a, b),
                           _match_binder(Fresh, "value", "body"), "Fresh"))
        if "FreshTryCatch" in rules:
            out.append(Alt(1, (cache.get(ctx, d, cterm, layer), cache.get(inside, d + 1, cterm, layer)),
                           lambda a, b, v=v: FreshTryCatch(v, a, b),
                           _match_binder(FreshTryCatch, "guarded", "handler"), "FreshTryCatch"))
        if "MetaLambda" in rules:
            out.append(Alt(1, (cache.get(inside, d + 1, cterm, layer),),
                           lambda b, v=v: MetaLambda(v, b),
                           _match_binder(MetaLambda, "body"), "MetaLambda"))
        if "FreshPrime" in rules:
            out.append(Alt(1, (cache.get(ctx.extend((v, ID)), d + 1, cterm, layer),),
                           lambda b, v=v: FreshPrime(v, b),
                           _match_binder(FreshPrime, "body"), "FreshPrime"))
    return out


def _relabel_alternatives(space: HypothesisSpace, ctx: MetaContext, sort: Sort) -> List[Alt]:
    want = tuple(s for _, s in ctx)
    args = tuple(MVarRef(n) for n in ctx.names)
    out = []
    for name in space.constructors:
        sig = space.core.constructors.get(name)
        if sig is not None and sig.result_sort == sort and sig.argument_sorts == want:
            term = CtorApp(name, args)
            out.append(_leaf(term, "F"))
            out[-1].cost = 1 + len(args)
    return out


def build_enum(ctx: MetaContext, target: Sort, space: HypothesisSpace,
               cache: Optional[EnumCache] = None) -> Enumeration:
    """All meta-terms ``m`` with ``ctx |- m : target`` in ``space``."""
    cache = cache if cache is not None else EnumCache(space)
    if cache.space != space:
        raise ValueError("cache belongs to a different hypothesis space")
    if space.family == "relabel":
        key = ("relabel", ctx.bindings, target)
        e = cache.table.get(key) if cache.enabled else None
        if e is None:
            e = Enumeration(key, lambda: _relabel_alternatives(space, ctx, target), cache)
            if cache.enabled:
                cache.table[key] = e
        return e
    layer = "R'" if space.family == "subst" else "L"
    return cache.get(ctx, 0, target, layer)


def constructor_enum(f: ConstructorSig, space: HypothesisSpace, sort_map,
                     cache: Optional[EnumCache] = None) -> Enumeration:
    """Candidate rules for source constructor ``f``."""
    lookup = sort_map if callable(sort_map) else sort_map.__getitem__
    return build_enum(derive_context(f, lookup), lookup(f.result_sort), space, cache)


def _tuple_match(n):
    def match(m):
        return m if type(m) is tuple and len(m) == n else None
    return match


def product_interleave(es: Sequence[Enumeration]) -> Enumeration:
    """Tuples of terms, one from each of ``es``, ordered by combined size,
    then by size composition (lexicographic), then first component slowest."""
    if not es:
        raise ValueError("product_interleave needs at least one enumeration")
    es = tuple(es)
    if len(es) == 1:
        only = es[0]
        alt = Alt(0, (only,), lambda t: (t,), _tuple_match(1), "tuple")
    else:
        alt = Alt(0, es, lambda *ts: ts, _tuple_match(len(es)), "tuple")
    return Enumeration(("tuple",) + tuple(e.key for e in es), lambda: [alt], es[0].cache)


# --- independent generator for cross-checking ----------------------------------------


def brute_force(ctx: MetaContext, target: Sort, space: HypothesisSpace, max_size: int) -> List:
    """Every well-typed meta-term up to ``max_size``, by naive recursion over
    candidate shapes followed by a type check; used to test the enumerator.

    Bound names come from a counter and the results are alpha-canonicalised,
    so this shares nothing with the enumerator's naming or ordering.
    """
    from .metaterm import MetaTypeError, alpha_canonical, meta_size, type_check

    cterm = space.core.program_sort
    sorts = set(space.core.sorts.values()) | {s for _, s in ctx}
    for s in list(sorts):
        if s.is_list:
            sorts.add(s.element)
            if s.element.is_pair:
                sorts.update(Sort.list_of(p) for p in s.element.params)
    counter = itertools.count()

    def shapes(ctx, sort, n):
        """Unchecked candidates of size exactly ``n`` (sorts only loosely respected)."""
        if n < 1:
            return
        if n == 1:
            for name, s in ctx:
                if s == sort:
                    yield MVarRef(name)
            for c in space.constants:
                yield ConstRef(c)
            yield THROW
            if sort.is_list:
                yield CtorApp("nil", ())
            return
        for name in space.constructors:
            if name == "nil":
                continue
            if name == "cons":
                if sort.is_list:
                    arg_sorts = (sort.element, sort)
                else:
                    continue
            else:
                sig = space.core.constructors[name]
                if sig.result_sort != sort:
                    continue
                arg_sorts = sig.argument_sorts
            for args in splits(ctx, arg_sorts, n - 1):
                yield CtorApp(name, args)
        if sort == cterm:
            v = f"b{next(counter)}"
            for a in range(1, n - 1):
                for x in shapes(ctx, cterm, a):
                    for y in shapes(ctx.extend((v, cterm)), cterm, n - 1 - a):
                        yield Fresh(v, x, y)
                        yield FreshTryCatch(v, x, y)
            for y in shapes(ctx.extend((v, cterm)), cterm, n - 1):
                yield MetaLambda(v, y)
            for y in shapes(ctx.extend((v, ID)), cterm, n - 1):
                yield FreshPrime(v, y)
        for name, s in ctx:
            if s.is_list:
                h, t = f"b{next(counter)}", f"b{next(counter)}"
                rest = ctx.remove(name)
                for a in range(1, n - 1):
                    for x in shapes(rest, sort, a):
                        for y in shapes(rest.extend((h, s.element), (t, s)), sort, n - 1 - a):
                            yield CaseList(name, x, h, t, y)
                if s.element.is_pair:
                    l, r = f"b{next(counter)}", f"b{next(counter)}"
                    ls, rs = (Sort.list_of(p) for p in s.element.params)
                    for y in shapes(rest.extend((l, ls), (r, rs)), sort, n - 1):
                        yield UnzipLet(name, l, r, y)

    def splits(ctx, arg_sorts, n):
        if not arg_sorts:
            if n == 0:
                yield ()
            return
        for a in range(1, n - len(arg_sorts) + 2):
            for x in shapes(ctx, arg_sorts[0], a):
                for rest in splits(ctx, arg_sorts[1:], n - a):
                    yield (x,) + rest

    found = set()
    for n in range(1, max_size + 1):
        for m in shapes(ctx, target, n):
            try:
                type_check(m, ctx, target, space)
            except MetaTypeError:
                continue
            assert meta_size(m) == n
            found.add(alpha_canonical(m))
    return sorted(found, key=lambda m: (meta_size(m), repr(m)))
