"""Closed-form orthonormal-frame Riemann components of a diagonal metric.

Notation: ``a_AB = g_{A,B} / g_B`` (the sqrt connection).  The diagonal
component splits into the Gaussian curvature of the (A,B) block and an
intermediary sum over the remaining coordinates D:

    R^{AB}_{AB} = K_AB + I^AB
    K_AB = -(g_A g_B)^-1 (eta_B a_{AB,B} + eta_A a_{BA,A})
    I^AB = -sum_D eta_D g_D^-2 (g_{A,D}/g_A) (g_{B,D}/g_B)

The components with one repeated index are

    R^{AB}_{AD} = -eta_B g_A^-1 (g_D^-1 a_{AB,D} - (g_B g_D^2)^-1 g_{A,D} g_{D,B})
    R^{AB}_{BD} =  eta_A (g_D g_B)^-1 (a_{BA,D} - (g_A g_D)^-1 g_{D,A} g_{B,D})

Each family is computed as a signature weight times a fixed structure, so
alternative sign placements can be expressed as a :class:`SignConvention`
and checked against the Christoffel oracle (see :func:`calibrate`).
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .expr import ZERO, Const, Expr, add, diff, mul, neg, power, size, sub, to_str
from .metric import DiagonalMetric, Index
from .numeric import compile_exprs, sample_points
from .simplify import simplify

__all__ = [
    "RtcTable", "SignConvention", "RESOLVED", "LITERAL", "WEIGHTS",
    "pattern", "canonical_key",
    "gauss_K", "gauss_K_oneill", "intermediary_I", "rtc_diag",
    "rtc_offdiag_AD", "rtc_offdiag_BD", "sqrt_connection", "christoffel_DAA",
    "closed_form_table", "FlatnessVerdict", "flatness_check", "calibrate",
    "CalibrationResult", "four_distinct_experiment",
]

PROVENANCES = ("closed_form", "cartan", "oracle", "ll", "mathpages")


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def canonical_key(a: int, b: int, c: int, d: int) -> tuple[int, tuple[int, int, int, int]] | None:
    """(sign, key) with a<b and c<d, or None when a pair repeats an index."""
    if a == b or c == d:
        return None
    sign = 1
    if a > b:
        a, b, sign = b, a, -sign
    if c > d:
        c, d, sign = d, c, -sign
    return sign, (a, b, c, d)


def pattern(key: tuple[int, int, int, int]) -> str:
    shared = len({key[0], key[1]} & {key[2], key[3]})
    return ("ABCD", "ABAD", "ABAB")[shared]


@dataclass
class RtcTable:
    """Frame components ``R^{AB}_{CD}`` keyed by canonical ``(A, B, C, D)``.

    ``patterns`` lists the index patterns the producer computes; a key of a
    covered pattern that is absent from ``entries`` is zero.
    """

    n: int
    entries: dict[tuple[int, int, int, int], Expr]
    provenance: str
    sign_convention: str | None = None
    names: tuple[str, ...] = ()
    patterns: frozenset = frozenset({"ABAB", "ABAD"})

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        clean = {}
        for k, v in self.entries.items():
            ck = canonical_key(*k)
            if ck is None:
                raise ValueError(f"degenerate key {k}")
            sign, key = ck
            if key != tuple(k):
                raise ValueError(f"key {k} is not canonical")
            if pattern(key) not in self.patterns:
                raise ValueError(f"key {k} outside declared patterns")
            clean[key] = v
        self.entries = dict(sorted(clean.items()))

    def get(self, a, b, c, d) -> Expr:
        ck = canonical_key(a, b, c, d)
        if ck is None:
            return ZERO
        sign, key = ck
        if pattern(key) not in self.patterns:
            raise KeyError(f"{self.provenance} does not compute {pattern(key)} components")
        v = self.entries.get(key, ZERO)
        return v if sign > 0 else neg(v)

    def keys(self, patterns: Iterable[str] | None = None) -> list[tuple[int, int, int, int]]:
        """All canonical keys of the given patterns (default: the covered ones)."""
        pats = set(self.patterns if patterns is None else patterns)
        out = []
        pairs = list(itertools.combinations(range(self.n), 2))
        for ab in pairs:
            for cd in pairs:
                k = ab + cd
                if pattern(k) in pats:
                    out.append(k)
        return out

    def label(self, key) -> str:
        names = self.names or tuple(str(i) for i in range(self.n))
        sep = "" if all(len(x) == 1 for x in names) else " "
        a, b, c, d = (names[i] for i in key)
        return f"{a}{sep}{b},{c}{sep}{d}"

    def simplified(self) -> "RtcTable":
        return RtcTable(self.n, {k: simplify(v) for k, v in self.entries.items()},
                        self.provenance, self.sign_convention, self.names, self.patterns)


# ---------------------------------------------------------------------------
# sign conventions
# ---------------------------------------------------------------------------

# Candidate signature weights for a component family, as functions of (eta_A, eta_B).
WEIGHTS = {
    "+1": lambda ea, eb: 1, "-1": lambda ea, eb: -1,
    "+eAeB": lambda ea, eb: ea * eb, "-eAeB": lambda ea, eb: -ea * eb,
    "+eA": lambda ea, eb: ea, "-eA": lambda ea, eb: -ea,
    "+eB": lambda ea, eb: eb, "-eB": lambda ea, eb: -eb,
}


@dataclass(frozen=True)
class SignConvention:
    """Per-family signature weights and the sign of the off-diagonal product term."""

    diag: str = "+1"
    ad: str = "+1"
    bd: str = "+1"
    product: int = 1

    def __post_init__(self):
        for w in (self.diag, self.ad, self.bd):
            if w not in WEIGHTS:
                raise ValueError(f"unknown weight {w!r}")
        if self.product not in (1, -1):
            raise ValueError("product sign must be +1 or -1")

    @property
    def label(self) -> str:
        return f"diag={self.diag};ad={self.ad};bd={self.bd};product={self.product:+d}"

    @classmethod
    def from_label(cls, label: str) -> "SignConvention":
        parts = dict(p.split("=") for p in label.split(";"))
        return cls(parts["diag"], parts["ad"], parts["bd"], int(parts["product"]))

    def w(self, family: str, ea: int, eb: int) -> int:
        return WEIGHTS[getattr(self, family)](ea, eb)


# The printed formulas taken at face value.
LITERAL = SignConvention("+1", "+1", "+1", 1)
# Selected by calibrate() against the Christoffel oracle; asserted in the tests.
RESOLVED = SignConvention("+eAeB", "+eB", "-eB", -1)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def _pair(m: DiagonalMetric, A: Index, B: Index) -> tuple[int, int]:
    a, b = m.index(A), m.index(B)
    if a == b:
        raise IndexError("indices must differ")
    return a, b


def _triple(m: DiagonalMetric, A, B, D) -> tuple[int, int, int]:
    a, b, d = m.index(A), m.index(B), m.index(D)
    if len({a, b, d}) != 3:
        raise IndexError("indices must be pairwise distinct")
    return a, b, d


def sqrt_connection(m: DiagonalMetric, A: Index, D: Index) -> Expr:
    """g_{A,D} / g_D.  Not the square root of anything."""
    a, d = _pair(m, A, D)
    return mul(m.dg(a, d), power(m.g[d], -1))


def christoffel_DAA(m: DiagonalMetric, A: Index, D: Index, form: str = "sqrt") -> Expr:
    """Gamma^D_AA, either via the sqrt connection or straight from g_AA."""
    a, d = _pair(m, A, D)
    if form == "sqrt":
        return mul(Const(-m.eta[d] * m.eta[a]), m.g[a], power(m.g[d], -1),
                   sqrt_connection(m, a, d))
    if form == "metric":
        return mul(Const(Fraction(-1, 2)), diff(m.g_diag(a), m.coords[d]),
                   power(m.g_diag(d), -1))
    raise ValueError(f"unknown form {form!r}")


def _gauss_literal(m: DiagonalMetric, a: int, b: int) -> Expr:
    xa, xb = m.coords[a], m.coords[b]
    t1 = diff(sqrt_connection(m, a, b), xb)
    t2 = diff(sqrt_connection(m, b, a), xa)
    inner = add(mul(Const(m.eta[a]), t1), mul(Const(m.eta[b]), t2))
    return mul(Const(-1), power(mul(m.g[a], m.g[b]), -1), inner)


def _intermediary_literal(m: DiagonalMetric, a: int, b: int) -> Expr:
    terms = []
    for d in range(m.n):
        if d in (a, b):
            continue
        ga, gb = m.dg(a, d), m.dg(b, d)
        if ga.is_zero or gb.is_zero:
            continue
        terms.append(mul(Const(-m.eta[d] * m.eta[a] * m.eta[b]), power(m.g[d], -2),
                         ga, power(m.g[a], -1), gb, power(m.g[b], -1)))
    return add(*terms)


def gauss_K(m: DiagonalMetric, A: Index, B: Index,
            convention: SignConvention = RESOLVED) -> Expr:
    """Gaussian curvature of the 2-d block spanned by coordinates A and B."""
    a, b = _pair(m, A, B)
    return mul(Const(convention.w("diag", m.eta[a], m.eta[b])), _gauss_literal(m, a, b))


def intermediary_I(m: DiagonalMetric, A: Index, B: Index,
                   convention: SignConvention = RESOLVED) -> Expr:
    """Coupling of A and B through third coordinates; the empty sum for n = 2."""
    a, b = _pair(m, A, B)
    return mul(Const(convention.w("diag", m.eta[a], m.eta[b])), _intermediary_literal(m, a, b))


def rtc_diag(m: DiagonalMetric, A: Index, B: Index,
             convention: SignConvention = RESOLVED) -> Expr:
    """R^{AB}_{AB} = K_AB + I^AB."""
    return add(gauss_K(m, A, B, convention), intermediary_I(m, A, B, convention))


def gauss_K_oneill(E: Expr, G: Expr, eps1: int, eps2: int, u, v) -> Expr:
    """K = -(e g)^-1 (eps1 (g_u/e)_u + eps2 (e_v/g)_v) with e = sqrt|E|, g = sqrt|G|."""
    half = Fraction(1, 2)
    e = power(mul(Const(eps1), E), half)
    g = power(mul(Const(eps2), G), half)
    t1 = diff(mul(diff(g, u), power(e, -1)), u)
    t2 = diff(mul(diff(e, v), power(g, -1)), v)
    return mul(Const(-1), power(mul(e, g), -1), add(mul(Const(eps1), t1), mul(Const(eps2), t2)))


def _ad_structure(m: DiagonalMetric, a: int, b: int, d: int, s: int) -> Expr:
    x_d = m.coords[d]
    t1 = mul(power(m.g[d], -1), diff(sqrt_connection(m, a, b), x_d))
    t2 = mul(Const(s), power(m.g[b], -1), power(m.g[d], -2), m.dg(a, d), m.dg(d, b))
    return mul(Const(-1), power(m.g[a], -1), add(t1, t2))


def _bd_structure(m: DiagonalMetric, a: int, b: int, d: int, s: int) -> Expr:
    x_d = m.coords[d]
    t1 = mul(Const(s), power(mul(m.g[a], m.g[d]), -1), m.dg(d, a), m.dg(b, d))
    t2 = diff(sqrt_connection(m, b, a), x_d)
    return mul(Const(-m.eta[a] * m.eta[b]), power(mul(m.g[d], m.g[b]), -1), add(t1, t2))


def rtc_offdiag_AD(m: DiagonalMetric, A: Index, B: Index, D: Index,
                   convention: SignConvention = RESOLVED) -> Expr:
    """R^{AB}_{AD} for pairwise distinct A, B, D."""
    a, b, d = _triple(m, A, B, D)
    w = convention.w("ad", m.eta[a], m.eta[b])
    return mul(Const(w), _ad_structure(m, a, b, d, convention.product))


def rtc_offdiag_BD(m: DiagonalMetric, A: Index, B: Index, D: Index,
                   convention: SignConvention = RESOLVED) -> Expr:
    """R^{AB}_{BD} for pairwise distinct A, B, D."""
    a, b, d = _triple(m, A, B, D)
    w = convention.w("bd", m.eta[a], m.eta[b])
    return mul(Const(w), _bd_structure(m, a, b, d, convention.product))


def _closed_form_entries(m: DiagonalMetric, conv: SignConvention) -> dict:
    entries: dict = {}

    def put(a, b, c, d, v):
        sign, key = canonical_key(a, b, c, d)
        entries[key] = v if sign > 0 else neg(v)

    for a, b in itertools.combinations(range(m.n), 2):
        put(a, b, a, b, rtc_diag(m, a, b, conv))
        for d in range(m.n):
            if d in (a, b):
                continue
            put(a, b, a, d, rtc_offdiag_AD(m, a, b, d, conv))
            put(a, b, b, d, rtc_offdiag_BD(m, a, b, d, conv))
    return entries


def closed_form_table(m: DiagonalMetric, convention: SignConvention = RESOLVED) -> RtcTable:
    return _closed_form_table(m, convention)


@lru_cache(maxsize=128)
def _closed_form_table(m: DiagonalMetric, convention: SignConvention) -> RtcTable:
    return RtcTable(m.n, _closed_form_entries(m, convention), "closed_form",
                    convention.label, m.names, frozenset({"ABAB", "ABAD"}))


# ---------------------------------------------------------------------------
# flatness
# ---------------------------------------------------------------------------

@dataclass
class FlatnessVerdict:
    flat: bool
    methods: dict[tuple[int, int, int, int], str]
    witness: tuple[int, int, int, int] | None = None
    witness_expr: str | None = None
    witness_value: float | None = None
    max_abs: float = 0.0
    nonzero: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.flat


def flatness_check(m: DiagonalMetric, mode: str = "symbolic", tol: float = 1e-9,
                   seed: int = 0, samples: int = 64,
                   convention: SignConvention = RESOLVED) -> FlatnessVerdict:
    """Flat iff every closed-form component vanishes.

    In ``symbolic`` mode each component is first simplified; whatever does not
    simplify to zero is sampled numerically.  ``numeric`` mode samples all.
    """
    if mode not in ("symbolic", "numeric"):
        raise ValueError(f"unknown mode {mode!r}")
    table = closed_form_table(m, convention)
    keys = table.keys()
    methods: dict = {}
    pending: list = []
    exprs: dict = {}
    for k in keys:
        e = table.entries.get(k, ZERO)
        if mode == "symbolic":
            e = simplify(e)
            if e.is_zero:
                methods[k] = "symbolic"
                continue
        exprs[k] = e
        pending.append(k)
    verdict = FlatnessVerdict(True, methods)
    if not pending:
        return verdict
    pts = sample_points(m.sample_domain, samples, seed)
    vals = compile_exprs([exprs[k] for k in pending])(pts)
    finite = np.all(np.isfinite(vals), axis=0)
    if finite.sum() * 2 < samples:
        from .numeric import SamplingError
        raise SamplingError(f"{samples - int(finite.sum())} of {samples} samples fell outside the domain")
    vals = np.abs(vals[:, finite])
    worst = vals.max(axis=1)
    for k, w in zip(pending, worst):
        methods[k] = "numeric"
        if w > tol:
            verdict.nonzero.append(k)
    verdict.max_abs = float(worst.max())
    if verdict.nonzero:
        verdict.flat = False
        i = int(np.argmax(worst))
        k = pending[i]
        verdict.witness = k
        e = exprs[k]
        verdict.witness_expr = to_str(simplify(e) if size(e) < 400 else e)
        first = int(np.argmax(finite))
        verdict.witness_value = float(compile_exprs([e])({n: a[first] for n, a in pts.items()})[0])
    return verdict


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

@dataclass
class CalibrationResult:
    convention: SignConvention
    residual: float
    candidates_passing: int
    runner_up: float


def _family_residuals(m: DiagonalMetric, samples: int, seed: int):
    """Numeric pieces for every family and product sign at seeded samples."""
    from .oracle import riemann_frame
    oracle = riemann_frame(m)
    pts = sample_points(m.sample_domain, samples, seed)
    rows = []   # (family, s or 0, ea, eb, structure expr, oracle expr)
    for a, b in itertools.permutations(range(m.n), 2):
        ea, eb = m.eta[a], m.eta[b]
        rows.append(("diag", 0, ea, eb, add(_gauss_literal(m, a, b), _intermediary_literal(m, a, b)),
                     oracle.get(a, b, a, b)))
        for d in range(m.n):
            if d in (a, b):
                continue
            for s in (1, -1):
                rows.append(("ad", s, ea, eb, _ad_structure(m, a, b, d, s), oracle.get(a, b, a, d)))
                rows.append(("bd", s, ea, eb, _bd_structure(m, a, b, d, s), oracle.get(a, b, b, d)))
    vals = compile_exprs([r[4] for r in rows] + [r[5] for r in rows])(pts)
    k = len(rows)
    struct, ref = vals[:k], vals[k:]
    ok = np.all(np.isfinite(vals), axis=0)
    return rows, struct[:, ok], ref[:, ok]


def calibrate(fixtures: Sequence[DiagonalMetric] | None = None, samples: int = 16,
              seed: int = 0, tol: float = 1e-9) -> CalibrationResult:
    """Pick the unique sign convention under which every closed-form family matches the oracle.

    Every combination of family weights and product sign is scored by its
    worst relative residual over all fixtures; exactly one must pass.
    """
    if fixtures is None:
        from .fixtures import load_fixture
        fixtures = [load_fixture("schwarzschild"), load_fixture("anisotropic4d")]
    data = [_family_residuals(m, samples, seed) for m in fixtures]

    def worst(family: str, weight: str, s: int) -> float:
        out = 0.0
        for rows, struct, ref in data:
            for i, (fam, rs, ea, eb, _, _) in enumerate(rows):
                if fam != family or (rs and rs != s):
                    continue
                w = WEIGHTS[weight](ea, eb)
                r = np.abs(w * struct[i] - ref[i]) / np.maximum(
                    np.maximum(np.abs(struct[i]), np.abs(ref[i])), 1.0)
                if r.size:
                    out = max(out, float(r.max()))
        return out

    scores = []
    for diag, ad, bd, s in itertools.product(WEIGHTS, WEIGHTS, WEIGHTS, (1, -1)):
        score = max(worst("diag", diag, s), worst("ad", ad, s), worst("bd", bd, s))
        scores.append((score, SignConvention(diag, ad, bd, s)))
    passing = [c for sc, c in scores if sc <= tol]
    ranked = sorted(scores, key=lambda t: (t[0], t[1].label))
    if len(passing) != 1:
        raise RuntimeError(
            f"calibration is not decisive: {len(passing)} conventions pass at tol={tol}")
    best_score, best = ranked[0]
    return CalibrationResult(best, best_score, len(passing), ranked[1][0])


def four_distinct_experiment(m: DiagonalMetric, samples: int = 32, seed: int = 0) -> float:
    """Largest |R^{AB}_{CD}| over four distinct indices, from the oracle, at samples.

    Returns 0.0 for n < 4.  Nothing in the closed forms assumes the answer.
    """
    from .oracle import riemann_frame
    if m.n < 4:
        return 0.0
    t = riemann_frame(m)
    keys = t.keys({"ABCD"})
    vals = compile_exprs([t.get(*k) for k in keys])(sample_points(m.sample_domain, samples, seed))
    vals = vals[:, np.all(np.isfinite(vals), axis=0)]
    return float(np.abs(vals).max()) if vals.size else 0.0
