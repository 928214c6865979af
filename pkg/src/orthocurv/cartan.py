"""Exterior forms over a diagonal metric and the Cartan structure equations.

Forms of grade 0, 1 and 2 are stored as ``{index tuple: coefficient}`` with
strictly increasing indices; the sign of any reordering is folded into the
coefficient.  A form lives either on the coordinate differentials ``dx^a`` or
on the orthonormal coframe ``w^a = g_a dx^a``.

Curvature is read off from

    R^a_b = d w^a_b + w^a_c ^ w^c_b = sum_{c<d} R^a_{bcd} w^c ^ w^d

and the frame component with both upper indices is ``R^{ab}_{cd} = eta_b R^a_{bcd}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

from .expr import ONE, ZERO, Const, Expr, add, diff, mul, neg, power
from .metric import DiagonalMetric

__all__ = [
    "ExteriorForm", "FormError", "wedge", "ext_d",
    "connection_forms", "curvature_two_forms", "extract_rtc", "cartan_table",
    "torsion", "abab_fast",
]

BASES = ("coord", "frame")


class FormError(ValueError):
    pass


def _sort_sign(idx: tuple[int, ...]) -> tuple[int, tuple[int, ...]] | None:
    """Sort indices by transpositions; None if an index repeats."""
    if len(set(idx)) != len(idx):
        return None
    items = list(idx)
    sign = 1
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, tuple(items)


@dataclass(frozen=True)
class ExteriorForm:
    metric: DiagonalMetric
    grade: int
    basis: str
    items: tuple[tuple[tuple[int, ...], Expr], ...]

    @classmethod
    def make(cls, metric: DiagonalMetric, grade: int, terms: Mapping[tuple[int, ...], Expr],
             basis: str = "coord") -> "ExteriorForm":
        if basis not in BASES:
            raise FormError(f"unknown basis {basis!r}")
        if not 0 <= grade <= 2:
            raise FormError("only grades 0, 1 and 2 are supported")
        acc: dict[tuple[int, ...], list[Expr]] = {}
        for idx, c in terms.items():
            idx = tuple(metric.index(i) for i in idx)
            if len(idx) != grade:
                raise FormError(f"index tuple {idx} does not match grade {grade}")
            s = _sort_sign(idx)
            if s is None or c.is_zero:
                continue
            sign, key = s
            acc.setdefault(key, []).append(c if sign > 0 else neg(c))
        items = []
        for key in sorted(acc):
            c = add(*acc[key])
            if not c.is_zero:
                items.append((key, c))
        return cls(metric, grade, basis, tuple(items))

    @classmethod
    def scalar(cls, metric: DiagonalMetric, f: Expr, basis: str = "coord") -> "ExteriorForm":
        return cls.make(metric, 0, {(): f}, basis)

    @classmethod
    def one_form(cls, metric: DiagonalMetric, coeffs: Mapping[int, Expr],
                 basis: str = "coord") -> "ExteriorForm":
        return cls.make(metric, 1, {(i,): c for i, c in coeffs.items()}, basis)

    @classmethod
    def zero(cls, metric: DiagonalMetric, grade: int, basis: str = "coord") -> "ExteriorForm":
        return cls.make(metric, grade, {}, basis)

    @property
    def terms(self) -> dict[tuple[int, ...], Expr]:
        return dict(self.items)

    def coeff(self, *idx) -> Expr:
        """Coefficient of the basis element with the given (any-order) indices."""
        s = _sort_sign(tuple(self.metric.index(i) for i in idx))
        if s is None:
            return ZERO
        sign, key = s
        c = self.terms.get(key, ZERO)
        return c if sign > 0 else neg(c)

    @property
    def is_zero(self) -> bool:
        return not self.items

    # -- linear structure -------------------------------------------------
    def _check(self, other: "ExteriorForm") -> None:
        if other.metric != self.metric:
            raise FormError("forms belong to different metrics")
        if other.basis != self.basis:
            raise FormError(f"basis mismatch: {self.basis} vs {other.basis}")

    def __add__(self, other: "ExteriorForm") -> "ExteriorForm":
        self._check(other)
        if other.grade != self.grade:
            raise FormError("cannot add forms of different grade")
        acc: dict = {}
        for k, c in self.items + other.items:
            acc[k] = add(acc[k], c) if k in acc else c
        return ExteriorForm.make(self.metric, self.grade, acc, self.basis)

    def __neg__(self) -> "ExteriorForm":
        return self.scale(Const(-1))

    def __sub__(self, other: "ExteriorForm") -> "ExteriorForm":
        return self + (-other)

    def scale(self, f: Expr) -> "ExteriorForm":
        return ExteriorForm.make(self.metric, self.grade,
                                 {k: mul(f, c) for k, c in self.items}, self.basis)

    # -- basis changes ----------------------------------------------------
    def _rescale(self, q: int) -> dict:
        g = self.metric.g
        return {k: mul(c, *(power(g[i], q) for i in k)) for k, c in self.items}

    def to_coordinate(self) -> "ExteriorForm":
        if self.basis == "coord":
            return self
        return ExteriorForm.make(self.metric, self.grade, self._rescale(1), "coord")

    def to_coframe(self) -> "ExteriorForm":
        if self.basis == "frame":
            return self
        return ExteriorForm.make(self.metric, self.grade, self._rescale(-1), "frame")

    def to_basis(self, basis: str) -> "ExteriorForm":
        return self.to_coframe() if basis == "frame" else self.to_coordinate()

    def __str__(self) -> str:
        sym = "d" if self.basis == "coord" else "w"
        names = self.metric.names
        if not self.items:
            return "0"
        parts = []
        for k, c in self.items:
            basis = "^".join(f"{sym}{names[i]}" for i in k)
            parts.append(f"({c})" + (f"*{basis}" if basis else ""))
        return " + ".join(parts)


def wedge(a: ExteriorForm, b: ExteriorForm) -> ExteriorForm:
    a._check(b)
    if a.grade + b.grade > 2:
        raise FormError(f"wedge of grades {a.grade} and {b.grade} exceeds grade 2")
    terms: dict = {}
    for ka, ca in a.items:
        for kb, cb in b.items:
            s = _sort_sign(ka + kb)
            if s is None:
                continue
            sign, key = s
            c = mul(ca, cb)
            c = c if sign > 0 else neg(c)
            terms[key] = add(terms[key], c) if key in terms else c
    return ExteriorForm.make(a.metric, a.grade + b.grade, terms, a.basis)


def ext_d(a: ExteriorForm) -> ExteriorForm:
    """Exterior derivative; frame-basis input is converted and the result returned in its basis."""
    if a.grade >= 2:
        raise FormError("d of a 2-form would exceed grade 2")
    basis = a.basis
    a = a.to_coordinate()
    m = a.metric
    terms: dict = {}
    for k, c in a.items:
        for d, x in enumerate(m.coords):
            dc = diff(c, x)
            if dc.is_zero:
                continue
            s = _sort_sign((d,) + k)
            if s is None:
                continue
            sign, key = s
            dc = dc if sign > 0 else neg(dc)
            terms[key] = add(terms[key], dc) if key in terms else dc
    return ExteriorForm.make(m, a.grade + 1, terms, "coord").to_basis(basis)


# ---------------------------------------------------------------------------
# structure equations
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def connection_forms(m: DiagonalMetric) -> tuple[tuple[ExteriorForm, ...], ...]:
    """Matrix ``W[a][d]`` of connection one-forms w^a_d in the coframe basis.

    w^a_d = (g_a g_d)^-1 (g_{a,d} w^a - eta_a eta_d g_{d,a} w^d), and w^a_a = 0.
    """
    n = m.n
    rows = []
    for a in range(n):
        row = []
        for d in range(n):
            if a == d:
                row.append(ExteriorForm.zero(m, 1, "frame"))
                continue
            inv = power(mul(m.g[a], m.g[d]), -1)
            ca = mul(inv, m.dg(a, d))
            cd = mul(Const(-m.eta[a] * m.eta[d]), inv, m.dg(d, a))
            row.append(ExteriorForm.one_form(m, {a: ca, d: cd}, "frame"))
        rows.append(tuple(row))
    return tuple(rows)


def torsion(m: DiagonalMetric, a: int) -> ExteriorForm:
    """d w^a + w^a_d ^ w^d in the coframe basis; zero for the Levi-Civita forms."""
    W = connection_forms(m)
    w = [ExteriorForm.one_form(m, {i: ONE}, "frame") for i in range(m.n)]
    out = ext_d(w[a])
    for d in range(m.n):
        out = out + wedge(W[a][d], w[d])
    return out


@lru_cache(maxsize=256)
def curvature_two_forms(m: DiagonalMetric) -> tuple[tuple[ExteriorForm, ...], ...]:
    """Matrix ``R[a][b]`` of curvature two-forms in the coframe basis."""
    W = connection_forms(m)
    n = m.n
    rows = []
    for a in range(n):
        row = []
        for b in range(n):
            if a == b:
                row.append(ExteriorForm.zero(m, 2, "frame"))
                continue
            acc = ext_d(W[a][b])
            for c in range(n):
                if c != a and c != b:
                    acc = acc + wedge(W[a][c], W[c][b])
            row.append(acc)
        rows.append(tuple(row))
    return tuple(rows)


def extract_rtc(R, m: DiagonalMetric):
    """Read ``R^{ab}_{cd}`` (a<b, c<d) off the curvature two-forms."""
    from .curvature import RtcTable
    entries = {}
    for a in range(m.n):
        for b in range(a + 1, m.n):
            form = R[a][b]
            if form.basis != "frame":
                form = form.to_coframe()
            for (c, d), coeff in form.items:
                v = coeff if m.eta[b] > 0 else neg(coeff)
                entries[(a, b, c, d)] = v
    return RtcTable(m.n, entries, "cartan", None, m.names, frozenset({"ABAB", "ABAD", "ABCD"}))


def cartan_table(m: DiagonalMetric):
    return extract_rtc(curvature_two_forms(m), m)


def abab_fast(m: DiagonalMetric, a: int, b: int) -> Expr:
    """Only the w^a ^ w^b coefficient of R^a_b, without building whole two-forms.

    Of d w^a_b only its (a,b) part contributes, and of w^a_c ^ w^c_b only the
    product of the w^a and w^b components of the two factors.
    """
    a, b = m.index(a), m.index(b)
    if a == b:
        raise IndexError("a and b must differ")
    W = connection_forms(m)
    total = ext_d(W[a][b]).coeff(a, b)
    terms = [total]
    for c in range(m.n):
        if c in (a, b):
            continue
        terms.append(mul(W[a][c].coeff(a), W[c][b].coeff(b)))
    v = add(*terms)
    return v if m.eta[b] > 0 else neg(v)
