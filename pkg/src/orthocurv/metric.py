"""Diagonal metrics ds^2 = sum_a eta_a g_a^2 (dx^a)^2 and their file format.

A metric is given by its positive roots ``g_a = sqrt|g_aa|`` and signature
flags ``eta_a``.  Files look like::

    coords = t, r, theta, phi
    signature = +, -, -, -
    param = M
    g[t] = 1
    g[r] = t
    domain[t] = 0.5, 2.0

``g[x,x] = ...`` may be used instead of ``g[x]`` to give the full diagonal
entry; it is converted to the root after checking its sign against the
declared signature.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .expr import Const, Expr, Symbol, diff, free_symbols, mul, power, to_str
from .numeric import compile_exprs, sample_points
from .parse import ParseError, UnknownSymbolError, parse

__all__ = [
    "DiagonalMetric", "MetricFormatError", "MetricVerdict",
    "load", "load_file", "dumps", "validate", "coframe", "line_element",
]

Index = int | str | Symbol


class MetricFormatError(ValueError):
    """Malformed metric file.  ``line`` is 1-based, or None for whole-file errors."""

    def __init__(self, message: str, line: int | None = None, symbol: str | None = None):
        self.line = line
        self.symbol = symbol
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class DiagonalMetric:
    coords: tuple[Symbol, ...]
    eta: tuple[int, ...]
    g: tuple[Expr, ...]
    params: tuple[Symbol, ...] = ()
    domain_items: tuple[tuple[str, float, float], ...] = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = len(self.coords)
        if n < 2:
            raise ValueError("a metric needs at least two coordinates")
        if len(self.eta) != n or len(self.g) != n:
            raise ValueError(
                f"dimension mismatch: {n} coords, {len(self.eta)} signs, {len(self.g)} roots")
        if any(e not in (1, -1) for e in self.eta):
            raise ValueError("signature flags must be +1 or -1")
        names = [s.name for s in self.coords + self.params]
        if len(set(names)) != len(names):
            raise ValueError("duplicate symbol names")

    @classmethod
    def build(cls, coords: Sequence[str], eta: Sequence[int], g: Sequence[str | Expr],
              params: Sequence[str] = (), domain: Mapping[str, tuple[float, float]] | None = None,
              name: str = "") -> "DiagonalMetric":
        """Convenience constructor taking strings for coordinates and roots."""
        cs = tuple(Symbol(c, "coord") for c in coords)
        ps = tuple(Symbol(p, "param") for p in params)
        roots = tuple(parse(x, cs, ps) if isinstance(x, str) else x for x in g)
        dom = tuple((k, float(lo), float(hi)) for k, (lo, hi) in (domain or {}).items())
        return cls(cs, tuple(int(e) for e in eta), roots, ps, dom, name)

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.coords)

    @property
    def sample_domain(self) -> dict[str, tuple[float, float]]:
        return {k: (lo, hi) for k, lo, hi in self.domain_items}

    def index(self, a: Index) -> int:
        if isinstance(a, Symbol):
            a = a.name
        if isinstance(a, str):
            try:
                return self.names.index(a)
            except ValueError:
                raise IndexError(f"no coordinate named {a!r}") from None
        if isinstance(a, (int, np.integer)) and not isinstance(a, bool) and 0 <= a < self.n:
            return int(a)
        raise IndexError(f"coordinate index {a!r} out of range for n={self.n}")

    def coord(self, a: Index) -> Symbol:
        return self.coords[self.index(a)]

    def root(self, a: Index) -> Expr:
        return self.g[self.index(a)]

    def dg(self, a: Index, d: Index) -> Expr:
        """g_{a,d}"""
        return diff(self.root(a), self.coord(d))

    def g_diag(self, a: Index) -> Expr:
        """The diagonal metric entry g_aa = eta_a g_a^2."""
        i = self.index(a)
        return mul(Const(self.eta[i]), power(self.g[i], 2))

    def with_domain(self, domain: Mapping[str, tuple[float, float]]) -> "DiagonalMetric":
        items = tuple((k, float(lo), float(hi)) for k, (lo, hi) in domain.items())
        return DiagonalMetric(self.coords, self.eta, self.g, self.params, items, self.name)

    def with_params(self, values: Mapping[str, float]) -> "DiagonalMetric":
        """Pin parameters to fixed values by collapsing their sampling intervals."""
        dom = self.sample_domain
        for k, v in values.items():
            if k not in {p.name for p in self.params}:
                raise KeyError(k)
            dom[k] = (float(v), float(v))
        return self.with_domain(dom)

    def __str__(self) -> str:
        return dumps(self)


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

_LINE = re.compile(r"^\s*([A-Za-z_]+)\s*(?:\[\s*([^\]]*)\])?\s*=\s*(.*?)\s*$")


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _float(text: str, lineno: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise MetricFormatError(f"not a number: {text!r}", lineno) from None
    if not math.isfinite(v):
        raise MetricFormatError(f"non-finite bound {text!r}", lineno)
    return v


def load(text: str, name: str = "") -> DiagonalMetric:
    """Parse a metric file; see the module docstring for the format."""
    coords: list[str] | None = None
    signature: list[int] | None = None
    params: list[str] = []
    roots: dict[str, tuple[str, int, bool]] = {}
    domains: dict[str, tuple[float, float]] = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise MetricFormatError(f"cannot read {raw.strip()!r}", lineno)
        key, sub, value = m.group(1), m.group(2), m.group(3)
        if key == "coords" and sub is None:
            if coords is not None:
                raise MetricFormatError("coords given twice", lineno)
            coords = _split_list(value)
            for c in coords:
                if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", c):
                    raise MetricFormatError(f"bad coordinate name {c!r}", lineno)
        elif key == "signature" and sub is None:
            if signature is not None:
                raise MetricFormatError("signature given twice", lineno)
            signature = []
            for tok in _split_list(value):
                if tok in ("+", "+1", "1"):
                    signature.append(1)
                elif tok in ("-", "-1"):
                    signature.append(-1)
                else:
                    raise MetricFormatError(f"signature entries must be + or -, got {tok!r}", lineno)
        elif key == "param" and sub is None:
            for p in _split_list(value):
                if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", p):
                    raise MetricFormatError(f"bad parameter name {p!r}", lineno)
                params.append(p)
        elif key == "g" and sub is not None:
            parts = [s.strip() for s in sub.split(",")]
            if len(parts) == 2 and parts[0] == parts[1]:
                target, full = parts[0], True
            elif len(parts) == 1:
                target, full = parts[0], False
            else:
                raise MetricFormatError(f"only diagonal entries are allowed, got g[{sub}]", lineno)
            if target in roots:
                raise MetricFormatError(f"g[{target}] given twice", lineno)
            roots[target] = (value, lineno, full)
        elif key == "domain" and sub is not None:
            target = sub.strip()
            if target in domains:
                raise MetricFormatError(f"domain[{target}] given twice", lineno)
            bounds = _split_list(value)
            if len(bounds) != 2:
                raise MetricFormatError("domain needs two bounds: lo, hi", lineno)
            lo, hi = (_float(b, lineno) for b in bounds)
            if not lo <= hi:
                raise MetricFormatError(f"empty domain [{lo}, {hi}]", lineno)
            domains[target] = (lo, hi)
        else:
            raise MetricFormatError(f"unknown entry {key!r}", lineno)

    if coords is None:
        raise MetricFormatError("missing coords line")
    if signature is None:
        raise MetricFormatError("missing signature line")
    if len(signature) != len(coords):
        raise MetricFormatError(
            f"dimension mismatch: {len(coords)} coords but {len(signature)} signature entries")
    if len(coords) < 2:
        raise MetricFormatError("a metric needs at least two coordinates")
    declared = coords + params
    dup = {x for x in declared if declared.count(x) > 1}
    if dup:
        raise MetricFormatError(f"symbol declared twice: {sorted(dup)[0]}")
    for k in roots:
        if k not in coords:
            raise MetricFormatError(f"g[{k}] does not name a coordinate", roots[k][1], k)
    for c in coords:
        if c not in roots:
            raise MetricFormatError(f"missing g[{c}]")
    for k in domains:
        if k not in declared:
            raise MetricFormatError(f"domain[{k}] does not name a coordinate or parameter", symbol=k)
    for c in declared:
        if c not in domains:
            raise MetricFormatError(f"missing domain[{c}]", symbol=c)

    cs = tuple(Symbol(c, "coord") for c in coords)
    ps = tuple(Symbol(p, "param") for p in params)
    g: list[Expr] = []
    full_entries: list[tuple[int, Expr, int]] = []
    for i, c in enumerate(coords):
        text_value, lineno, full = roots[c]
        try:
            e = parse(text_value, cs, ps)
        except UnknownSymbolError as exc:
            raise MetricFormatError(
                f"g[{c}] uses undeclared symbol {exc.name!r}", lineno, exc.name) from None
        except (ParseError, ValueError) as exc:
            raise MetricFormatError(f"g[{c}]: {exc}", lineno) from None
        if full:
            full_entries.append((i, e, lineno))
            e = power(mul(Const(signature[i]), e), Fraction(1, 2))
        g.append(e)
    m = DiagonalMetric(cs, tuple(signature), tuple(g), ps,
                       tuple((k, *domains[k]) for k in declared), name)
    _check_full_entries(m, full_entries)
    return m


def _check_full_entries(m: DiagonalMetric, entries) -> None:
    if not entries:
        return
    pts = sample_points(m.sample_domain, 64, 0)
    values = compile_exprs([e for _, e, _ in entries])(pts)
    for (i, _, lineno), v in zip(entries, values):
        v = v[np.isfinite(v)]
        if v.size == 0 or np.any(np.sign(v) != m.eta[i]):
            raise MetricFormatError(
                f"g[{m.names[i]},{m.names[i]}] does not have the declared sign "
                f"{'+' if m.eta[i] > 0 else '-'} on the sample domain", lineno)


def load_file(path) -> DiagonalMetric:
    from pathlib import Path
    p = Path(path)
    return load(p.read_text(encoding="utf-8"), name=p.stem)


def _num(v: float) -> str:
    return repr(float(v))


def dumps(m: DiagonalMetric) -> str:
    """Serialize in the file format; ``load(dumps(m)) == m``."""
    lines = [
        "coords = " + ", ".join(m.names),
        "signature = " + ", ".join("+" if e > 0 else "-" for e in m.eta),
    ]
    if m.params:
        lines.append("param = " + ", ".join(p.name for p in m.params))
    for c, e in zip(m.names, m.g):
        lines.append(f"g[{c}] = {to_str(e)}")
    for k, lo, hi in m.domain_items:
        lines.append(f"domain[{k}] = {_num(lo)}, {_num(hi)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class MetricVerdict:
    valid: bool
    problems: list[str]
    point: dict[str, float] | None = None

    def __bool__(self) -> bool:
        return self.valid


def validate(m: DiagonalMetric, seed: int = 0, samples: int = 64) -> MetricVerdict:
    """Check symbols, domain coverage and positivity of every root on samples."""
    problems: list[str] = []
    declared = {s.name for s in m.coords + m.params}
    for c, e in zip(m.names, m.g):
        extra = sorted({s.name for s in free_symbols(e)} - declared)
        if extra:
            problems.append(f"g[{c}] references undeclared symbol {extra[0]!r}")
    dom = m.sample_domain
    missing = sorted(declared - set(dom))
    if missing:
        problems.append(f"no sample domain for {', '.join(missing)}")
    if problems:
        return MetricVerdict(False, problems)
    pts = sample_points(dom, samples, seed)
    values = compile_exprs(list(m.g))(pts)
    for c, v in zip(m.names, values):
        bad = ~np.isfinite(v) | (v <= 0)
        if bad.any():
            j = int(np.argmax(bad))
            where = {k: float(a[j]) for k, a in pts.items()}
            what = "failed to evaluate" if not np.isfinite(v[j]) else f"is {v[j]:.6g} <= 0"
            problems.append(f"g[{c}] {what} at {where}")
            return MetricVerdict(False, problems, where)
    return MetricVerdict(True, [])


def coframe(m: DiagonalMetric):
    """The one-forms omega^a = g_a dx^a, in the coordinate basis."""
    from .cartan import ExteriorForm
    return [ExteriorForm.one_form(m, {i: m.g[i]}, basis="coord") for i in range(m.n)]


def line_element(m: DiagonalMetric, point: Mapping[str, float], v: Sequence[float]) -> float:
    """sum_a eta_a (g_a(p) v_a)^2"""
    from .numeric import evaluate
    return math.fsum(e * (evaluate(g, point) * x) ** 2 for e, g, x in zip(m.eta, m.g, v))
