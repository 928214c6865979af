"""Independent curvature computations used as ground truth.

* :func:`riemann_frame` runs the textbook Levi-Civita recipe
  ``R^r_{smn} = d_m G^r_{ns} - d_n G^r_{ms} + G^r_{ml} G^l_{ns} - G^r_{nl} G^l_{ms}``
  on ``g_aa = eta_a g_a^2``, lowers with ``g_rr`` and converts to the frame.
* :func:`ll_rtc` and :func:`mathpages_rtc` are two classical closed formulas
  for the lowered diagonal component ``R_{abab}`` of an orthogonal metric.
* :func:`finite_diff_riemann` rebuilds frame components at a point from
  central differences of the numerically evaluated metric.

Coordinate components convert to frame components through

    R^{AB}_{CD} = eta_A eta_B R_{ABCD} / (g_A g_B g_C g_D).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import numpy as np

from .curvature import RtcTable, pattern
from .expr import ZERO, Const, Expr, add, diff, func, mul, neg, power, sub, to_str
from .metric import DiagonalMetric, Index, validate
from .numeric import SamplingError, compile_exprs, residual, sample_points

__all__ = [
    "ChristoffelTable", "christoffels", "riemann_lowered", "riemann_frame",
    "to_frame", "ll_rtc", "ll_table", "mathpages_rtc", "mathpages_table",
    "ComponentVerdict", "ComparisonReport", "compare",
    "ProximityError", "finite_diff_riemann",
]

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class ChristoffelTable:
    """Gamma^r_{mn}, stored for m <= n."""

    n: int
    entries: Mapping[tuple[int, int, int], Expr]

    def __call__(self, r: int, m: int, n: int) -> Expr:
        if m > n:
            m, n = n, m
        return self.entries.get((r, m, n), ZERO)

    def nonzero(self) -> list[tuple[int, int, int]]:
        return [k for k, v in self.entries.items() if not v.is_zero]


@lru_cache(maxsize=256)
def christoffels(m: DiagonalMetric) -> ChristoffelTable:
    """(1/2) g^{rr} (g_{rm,n} + g_{rn,m} - g_{mn,r}) with g diagonal."""
    gd = [m.g_diag(a) for a in range(m.n)]
    inv = [power(x, -1) for x in gd]

    def g(a, b):
        return gd[a] if a == b else ZERO

    entries = {}
    for r in range(m.n):
        for a in range(m.n):
            for b in range(a, m.n):
                t = add(diff(g(r, a), m.coords[b]), diff(g(r, b), m.coords[a]),
                        neg(diff(g(a, b), m.coords[r])))
                if not t.is_zero:
                    entries[(r, a, b)] = mul(Const(HALF), inv[r], t)
    return ChristoffelTable(m.n, entries)


def _riemann_up(m: DiagonalMetric, G: ChristoffelTable, r, s, a, b) -> Expr:
    xa, xb = m.coords[a], m.coords[b]
    terms = [diff(G(r, b, s), xa), neg(diff(G(r, a, s), xb))]
    for l in range(m.n):
        p = G(r, a, l)
        q = G(l, b, s)
        if not (p.is_zero or q.is_zero):
            terms.append(mul(p, q))
        p = G(r, b, l)
        q = G(l, a, s)
        if not (p.is_zero or q.is_zero):
            terms.append(neg(mul(p, q)))
    return add(*terms)


def riemann_lowered(m: DiagonalMetric, a: int, b: int, c: int, d: int) -> Expr:
    """Coordinate component R_{abcd} = g_aa R^a_{bcd}."""
    G = christoffels(m)
    return mul(m.g_diag(a), _riemann_up(m, G, a, b, c, d))


def to_frame(m: DiagonalMetric, a: int, b: int, c: int, d: int, lowered: Expr) -> Expr:
    if lowered.is_zero:
        return ZERO
    return mul(Const(m.eta[a] * m.eta[b]), lowered,
               power(mul(m.g[a], m.g[b], m.g[c], m.g[d]), -1))


@lru_cache(maxsize=128)
def riemann_frame(m: DiagonalMetric) -> RtcTable:
    """Every frame component R^{AB}_{CD} with A<B, C<D, all index patterns."""
    entries = {}
    pairs = list(itertools.combinations(range(m.n), 2))
    for a, b in pairs:
        for c, d in pairs:
            v = to_frame(m, a, b, c, d, riemann_lowered(m, a, b, c, d))
            if not v.is_zero:
                entries[(a, b, c, d)] = v
    return RtcTable(m.n, entries, "oracle", None, m.names,
                    frozenset({"ABAB", "ABAD", "ABCD"}))


def _pair(m: DiagonalMetric, A: Index, B: Index) -> tuple[int, int]:
    a, b = m.index(A), m.index(B)
    if a == b:
        raise IndexError("indices must differ")
    return a, b


def ll_rtc(m: DiagonalMetric, i: Index, l: Index) -> Expr:
    """Lowered R_{lili} in terms of F_a = ln g_a and eps_a = eta_a.

    R_lili = eps_l e^{2F_l} (F_{i,i} F_{l,i} - F_{l,i}^2 - F_{l,ii})
           + eps_i e^{2F_i} (F_{l,l} F_{i,l} - F_{i,l}^2 - F_{i,ll})
           - eps_l eps_i sum_m eps_m e^{2F_l + 2F_i - 2F_m} F_{i,m} F_{l,m}
    """
    i, l = _pair(m, i, l)
    F = [func("ln", g) for g in m.g]
    x = m.coords
    eps = m.eta

    def dF(a, b):
        return diff(F[a], x[b])

    def e2(*signed):
        return func("exp", add(*(mul(Const(2 * s), F[k]) for k, s in signed)))

    t1 = mul(Const(eps[l]), e2((l, 1)),
             add(mul(dF(i, i), dF(l, i)), neg(power(dF(l, i), 2)), neg(diff(dF(l, i), x[i]))))
    t2 = mul(Const(eps[i]), e2((i, 1)),
             add(mul(dF(l, l), dF(i, l)), neg(power(dF(i, l), 2)), neg(diff(dF(i, l), x[l]))))
    rest = []
    for k in range(m.n):
        if k in (i, l):
            continue
        rest.append(mul(Const(eps[k]), e2((l, 1), (i, 1), (k, -1)), dF(i, k), dF(l, k)))
    t3 = mul(Const(-eps[l] * eps[i]), add(*rest))
    return add(t1, t2, t3)


def mathpages_rtc(m: DiagonalMetric, a: Index, b: Index) -> Expr:
    """Lowered R_{abab}; the sum over c runs over every other coordinate.

    R_abab = -(g_aa,bb + g_bb,aa)/2
             + ((g_aa,b^2 + g_aa,a g_bb,a) / g_aa
                + (g_bb,a^2 + g_bb,b g_aa,b) / g_bb
                - sum_c g_aa,c g_bb,c / g_cc) / 4
    """
    a, b = _pair(m, a, b)
    g = [m.g_diag(k) for k in range(m.n)]
    x = m.coords

    def d(k, j):
        return diff(g[k], x[j])

    second = mul(Const(-HALF), add(diff(d(a, b), x[b]), diff(d(b, a), x[a])))
    inner = [
        mul(add(power(d(a, b), 2), mul(d(a, a), d(b, a))), power(g[a], -1)),
        mul(add(power(d(b, a), 2), mul(d(b, b), d(a, b))), power(g[b], -1)),
    ]
    for c in range(m.n):
        if c in (a, b):
            continue
        inner.append(neg(mul(d(a, c), d(b, c), power(g[c], -1))))
    return add(second, mul(Const(Fraction(1, 4)), add(*inner)))


def _abab_table(m: DiagonalMetric, fn, provenance: str) -> RtcTable:
    entries = {}
    for a, b in itertools.combinations(range(m.n), 2):
        v = to_frame(m, a, b, a, b, fn(m, a, b))
        if not v.is_zero:
            entries[(a, b, a, b)] = v
    return RtcTable(m.n, entries, provenance, None, m.names, frozenset({"ABAB"}))


@lru_cache(maxsize=128)
def ll_table(m: DiagonalMetric) -> RtcTable:
    return _abab_table(m, lambda m, a, b: ll_rtc(m, b, a), "ll")


@lru_cache(maxsize=128)
def mathpages_table(m: DiagonalMetric) -> RtcTable:
    return _abab_table(m, mathpages_rtc, "mathpages")


def ll_applicable(m: DiagonalMetric, seed: int = 0) -> bool:
    """ln g_a needs g_a > 0 on the whole sample domain."""
    return validate(m, seed).valid


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

@dataclass
class ComponentVerdict:
    key: tuple[int, int, int, int]
    label: str
    verdict: str            # symbolic-zero | agree | mismatch
    max_residual: float
    worst_point: dict[str, float] | None = None


@dataclass
class ComparisonReport:
    left: str
    right: str
    components: list[ComponentVerdict]
    patterns: tuple[str, ...]
    tol: float
    seed: int
    samples: int
    rejected: int = 0
    sign_convention: str | None = None
    sign_flip: int | None = None
    max_residual: float = 0.0
    worst_component: str | None = None
    worst_point: dict[str, float] | None = None
    note: str = ""

    @property
    def agree(self) -> bool:
        return all(c.verdict != "mismatch" for c in self.components)

    def __bool__(self) -> bool:
        return self.agree

    def mismatches(self) -> list[ComponentVerdict]:
        return [c for c in self.components if c.verdict == "mismatch"]


def compare(a: RtcTable, b: RtcTable, m: DiagonalMetric, tol: float = 1e-9,
            seed: int = 0, samples: int = 32) -> ComparisonReport:
    """Compare two tables on the index patterns both of them compute.

    Components are evaluated at ``samples`` seeded points of the metric's
    sample domain; missing entries count as zero.  If every mismatch is
    reconciled by negating one side, ``sign_flip`` is set to -1.
    """
    if a.n != b.n or a.n != m.n:
        raise ValueError("tables and metric disagree on dimension")
    pats = tuple(sorted(set(a.patterns) & set(b.patterns)))
    keys = a.keys(pats)
    report = ComparisonReport(a.provenance, b.provenance, [], pats, tol, seed, samples,
                              sign_convention=a.sign_convention or b.sign_convention)
    numeric_keys = []
    for k in keys:
        ea, eb = a.entries.get(k, ZERO), b.entries.get(k, ZERO)
        if ea == eb:
            report.components.append(ComponentVerdict(
                k, a.label(k), "symbolic-zero" if ea.is_zero else "agree", 0.0))
        else:
            numeric_keys.append(k)
    if not numeric_keys:
        return report
    pts = sample_points(m.sample_domain, samples, seed)
    f = compile_exprs([a.entries.get(k, ZERO) for k in numeric_keys]
                      + [b.entries.get(k, ZERO) for k in numeric_keys])
    vals = f(pts)
    ok = np.all(np.isfinite(vals), axis=0)
    report.rejected = int(samples - ok.sum())
    if report.rejected * 2 > samples:
        raise SamplingError(f"{report.rejected} of {samples} samples fell outside the domain")
    h = len(numeric_keys)
    va, vb = vals[:h, ok], vals[h:, ok]
    kept = {name: arr[ok] for name, arr in pts.items()}
    res = residual(va, vb)
    flipped = residual(va, -vb)
    all_flip = True
    any_mismatch = False
    worst = (-1.0, None, None)
    for i, k in enumerate(numeric_keys):
        j = int(np.argmax(res[i])) if res.shape[1] else 0
        r = float(res[i, j]) if res.shape[1] else 0.0
        point = {name: float(arr[j]) for name, arr in kept.items()} if res.shape[1] else None
        verdict = "agree" if r <= tol else "mismatch"
        if verdict == "mismatch":
            any_mismatch = True
            if float(flipped[i].max()) > tol:
                all_flip = False
        report.components.append(ComponentVerdict(k, a.label(k), verdict, r, point))
        if r > worst[0]:
            worst = (r, a.label(k), point)
    report.components.sort(key=lambda c: c.key)
    report.max_residual, report.worst_component, report.worst_point = worst
    if any_mismatch and all_flip:
        report.sign_flip = -1
    return report


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

class ProximityError(ValueError):
    """The stencil would leave the sample domain or hit a singular point."""


def finite_diff_riemann(m: DiagonalMetric, p: Mapping[str, float], h: float,
                        ) -> dict[tuple[int, int, int, int], float]:
    """Frame components at ``p`` from central differences of g_aa with step ``h``.

    Second derivatives use the three-point rule on the diagonal and the
    four-point mixed stencil off it, so the error is O(h^2).
    """
    n = m.n
    dom = m.sample_domain
    for c in m.names:
        lo, hi = dom[c]
        if not (lo + 2 * h <= p[c] <= hi - 2 * h):
            raise ProximityError(f"{c}={p[c]} is within 2h={2 * h} of the domain boundary")
    f = compile_exprs([m.g_diag(a) for a in range(n)] + list(m.g))
    base = {k: float(v) for k, v in p.items()}

    # one batch: the centre, +-h e_i, and +-h e_i +-h e_j for i<j
    offsets: list[dict[int, float]] = [{}]
    for i in range(n):
        offsets += [{i: h}, {i: -h}]
    for i, j in itertools.combinations(range(n), 2):
        offsets += [{i: h, j: h}, {i: h, j: -h}, {i: -h, j: h}, {i: -h, j: -h}]
    cols = {name: np.array([base[name] + o.get(m.names.index(name), 0.0)
                            if name in m.names else base[name] for o in offsets])
            for name in base}
    vals = f(cols)
    if not np.all(np.isfinite(vals)):
        raise ProximityError("metric is not finite on the stencil")
    G = vals[:n]                       # g_aa at each stencil point
    roots = vals[n:, 0]
    idx = {tuple(sorted(o.items())): k for k, o in enumerate(offsets)}

    def at(o):
        return G[:, idx[tuple(sorted(o.items()))]]

    g0 = at({})
    d1 = np.zeros((n, n))              # d1[c, a] = d_c g_aa
    d2 = np.zeros((n, n, n))           # d2[c, e, a] = d_c d_e g_aa
    for c in range(n):
        d1[c] = (at({c: h}) - at({c: -h})) / (2 * h)
        d2[c, c] = (at({c: h}) - 2 * g0 + at({c: -h})) / h ** 2
    for c, e in itertools.combinations(range(n), 2):
        mixed = (at({c: h, e: h}) - at({c: h, e: -h}) - at({c: -h, e: h})
                 + at({c: -h, e: -h})) / (4 * h * h)
        d2[c, e] = d2[e, c] = mixed

    def dg(c, a, b):                   # d_c g_ab
        return d1[c, a] if a == b else 0.0

    def ddg(c, e, a, b):               # d_c d_e g_ab
        return d2[c, e, a] if a == b else 0.0

    def gam(e, b, c):                  # Gamma_{e,bc}, first index lowered
        return 0.5 * (dg(c, e, b) + dg(b, e, c) - dg(e, b, c))

    out = {}
    pairs = list(itertools.combinations(range(n), 2))
    for a, b in pairs:
        for c, d in pairs:
            r = 0.5 * (ddg(b, c, a, d) + ddg(a, d, b, c) - ddg(b, d, a, c) - ddg(a, c, b, d))
            for e in range(n):
                r += (gam(e, b, c) * gam(e, a, d) - gam(e, b, d) * gam(e, a, c)) / g0[e]
            out[(a, b, c, d)] = m.eta[a] * m.eta[b] * r / (roots[a] * roots[b] * roots[c] * roots[d])
    return out
