"""Numerical evaluation of expressions and seeded sampling comparisons."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .expr import Add, Const, Expr, Func, Mul, Pow, Symbol, free_symbols, to_str

__all__ = [
    "DomainError", "SamplingError", "Point", "evaluate", "compile_exprs",
    "sample_points", "residual", "NumericVerdict", "equivalent_numeric",
]

Point = Mapping[str, float]
Domain = Mapping[str, tuple[float, float]]


class DomainError(ArithmeticError):
    """Evaluation left the real domain of some subexpression."""

    def __init__(self, message: str, subexpr: Expr | None = None):
        self.subexpr = subexpr
        where = f" in {to_str(subexpr)}" if subexpr is not None else ""
        super().__init__(message + where)


class SamplingError(RuntimeError):
    pass


_MATH = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "sinh": math.sinh, "cosh": math.cosh, "tanh": math.tanh,
    "exp": math.exp, "abs": abs,
}


def evaluate(e: Expr, point: Point) -> float:
    """Evaluate ``e`` at ``point`` in double precision.

    Raises :class:`DomainError` naming the offending subexpression for
    logarithms of non-positive numbers, even roots of negatives, division by
    zero and overflow.
    """
    missing = {s.name for s in free_symbols(e)} - set(point)
    if missing:
        raise KeyError(f"point does not bind {sorted(missing)}")
    for k, v in point.items():
        if not math.isfinite(v):
            raise DomainError(f"non-finite value for {k}")
    memo: dict[int, float] = {}
    return _eval(e, point, memo)


def _eval(e: Expr, p: Point, memo: dict[int, float]) -> float:
    k = id(e)
    if k in memo:
        return memo[k]
    if isinstance(e, Const):
        v = float(e.value)
    elif isinstance(e, Symbol):
        v = float(p[e.name])
    elif isinstance(e, Add):
        v = math.fsum(_eval(a, p, memo) for a in e.args)
    elif isinstance(e, Mul):
        v = 1.0
        for a in e.args:
            v *= _eval(a, p, memo)
    elif isinstance(e, Pow):
        b = _eval(e.base, p, memo)
        q = e.exp
        if b == 0 and q < 0:
            raise DomainError("division by zero", e)
        if b < 0 and q.denominator != 1:
            raise DomainError("fractional power of a negative number", e)
        try:
            v = b ** q.numerator if q.denominator == 1 else b ** float(q)
        except (OverflowError, ZeroDivisionError) as exc:
            raise DomainError(str(exc), e) from None
    elif isinstance(e, Func):
        u = _eval(e.arg, p, memo)
        if e.name == "ln":
            if u <= 0:
                raise DomainError("logarithm of a non-positive number", e)
            v = math.log(u)
        else:
            try:
                v = _MATH[e.name](u)
            except OverflowError:
                raise DomainError("overflow", e) from None
    else:
        raise TypeError(type(e).__name__)
    if not math.isfinite(v):
        raise DomainError("non-finite result", e)
    memo[k] = v
    return v


# ---------------------------------------------------------------------------
# vectorized evaluation
# ---------------------------------------------------------------------------

def _codegen(exprs: Sequence[Expr]) -> tuple[str, list[str]]:
    lines: list[str] = []
    names: dict[Expr, str] = {}
    symbols: set[str] = set()

    def visit(e: Expr) -> str:
        if e in names:
            return names[e]
        if isinstance(e, Const):
            code = repr(float(e.value))
            names[e] = code
            return code
        if isinstance(e, Symbol):
            symbols.add(e.name)
            code = f"S[{e.name!r}]"
            names[e] = code
            return code
        if isinstance(e, Add):
            code = " + ".join(visit(a) for a in e.args)
        elif isinstance(e, Mul):
            code = " * ".join(visit(a) for a in e.args)
        elif isinstance(e, Pow):
            b = visit(e.base)
            q = e.exp
            if q == -1:
                code = f"1.0 / {b}"
            elif q.denominator == 1 and q > 0:
                code = f"{b} ** {q.numerator}"
            elif q.denominator == 1:
                code = f"1.0 / {b} ** {-q.numerator}"
            elif q == Fraction(1, 2):
                code = f"np.sqrt({b})"
            else:
                code = f"np.power({b}, {float(q)!r})"
        elif isinstance(e, Func):
            a = visit(e.arg)
            fn = {"ln": "log", "abs": "abs"}.get(e.name, e.name)
            code = f"np.{fn}({a})"
        else:
            raise TypeError(type(e).__name__)
        name = f"v{len(lines)}"
        lines.append(f"    {name} = {code}")
        names[e] = name
        return name

    outs = [visit(e) for e in exprs]
    body = "\n".join(lines)
    src = f"def _f(S, _shape):\n{body}\n    return [{', '.join(outs)}]\n"
    return src, sorted(symbols)


def compile_exprs(exprs: Sequence[Expr]) -> Callable[[Mapping[str, np.ndarray]], np.ndarray]:
    """Compile expressions into one vectorized numpy function.

    The returned callable takes a mapping from symbol names to equally shaped
    arrays and returns an array of shape ``(len(exprs), *shape)``; entries
    where a subexpression leaves its domain come out as ``nan``/``inf``.
    Common subexpressions are evaluated once.
    """
    src, _ = _codegen(exprs)
    scope: dict = {"np": np}
    exec(compile(src, "<orthocurv-compiled>", "exec"), scope)
    f = scope["_f"]

    def run(values: Mapping[str, np.ndarray]) -> np.ndarray:
        arrays = {k: np.asarray(v, dtype=float) for k, v in values.items()}
        shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()
        with np.errstate(all="ignore"):
            outs = f(arrays, shape)
        return np.stack([np.broadcast_to(np.asarray(o, dtype=float), shape) for o in outs]) \
            if outs else np.empty((0,) + shape)

    run.source = src
    return run


def sample_points(domain: Domain, n: int, seed: int) -> dict[str, np.ndarray]:
    """Draw ``n`` uniform samples per symbol; symbols are visited in sorted order."""
    rng = np.random.default_rng(seed)
    return {name: rng.uniform(lo, hi, n) for name, (lo, hi) in sorted(domain.items())}


def residual(a, b):
    """Relative difference, falling back to absolute when both are below 1."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return np.abs(a - b) / scale


@dataclass
class NumericVerdict:
    agree: bool
    max_residual: float
    worst_point: dict[str, float] | None
    samples: int
    rejected: int = 0
    note: str = ""

    def __bool__(self) -> bool:
        return self.agree


def equivalent_numeric(a: Expr, b: Expr, domain: Domain, n: int = 32,
                       tol: float = 1e-9, seed: int = 0) -> NumericVerdict:
    """Compare two expressions at ``n`` seeded uniform samples of ``domain``.

    Samples where either side leaves its domain are rejected; more than half
    rejected raises :class:`SamplingError`.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    missing = {s.name for s in free_symbols(a) | free_symbols(b)} - set(domain)
    if missing:
        raise KeyError(f"domain does not cover {sorted(missing)}")
    pts = sample_points(domain, n, seed)
    va, vb = compile_exprs([a, b])(pts)
    ok = np.isfinite(va) & np.isfinite(vb)
    rejected = int(n - ok.sum())
    if rejected * 2 > n:
        raise SamplingError(f"{rejected} of {n} samples fell outside the domain")
    r = np.where(ok, residual(va, vb), -1.0)
    i = int(np.argmax(r))
    worst = float(r[i])
    return NumericVerdict(
        agree=worst <= tol,
        max_residual=worst,
        worst_point={k: float(v[i]) for k, v in pts.items()},
        samples=n,
        rejected=rejected,
    )
