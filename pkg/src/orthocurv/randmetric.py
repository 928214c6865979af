"""Seeded random diagonal metrics and expressions for property tests.

Every root is a product of factors that stay positive and smooth on the
box [0.5, 1.5]^n, so the metrics are valid on their sample domain by
construction.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .expr import ONE, Const, Expr, Symbol, add, func, mul, power
from .metric import DiagonalMetric

__all__ = ["DOMAIN", "random_factor", "random_root", "random_metric", "random_expr"]

DOMAIN = (0.5, 1.5)

_CONSTS = (Fraction(1), Fraction(2), Fraction(1, 2), Fraction(3, 2), Fraction(3))
_RATES = (Fraction(1), Fraction(-1), Fraction(1, 2), Fraction(-1, 2), Fraction(2))


def random_factor(rng: np.random.Generator, xs: tuple[Symbol, ...]) -> Expr:
    x = xs[rng.integers(len(xs))]
    kind = rng.integers(9)
    if kind == 0:
        return Const(_CONSTS[rng.integers(len(_CONSTS))])
    if kind == 1:
        return x
    if kind == 2:
        return add(ONE, power(x, 2))
    if kind == 3:
        y = xs[rng.integers(len(xs))]
        return add(ONE, mul(x, y))
    if kind == 4:
        return add(Const(2), func("sin", x))
    if kind == 5:
        return func("sinh", x)
    if kind == 6:
        return func("cosh", x)
    if kind == 7:
        return func("exp", mul(Const(_RATES[rng.integers(len(_RATES))]), x))
    return power(x, Fraction(1, 2))


def random_root(rng: np.random.Generator, xs: tuple[Symbol, ...], max_factors: int = 3) -> Expr:
    k = int(rng.integers(0, max_factors + 1))
    return mul(*(random_factor(rng, xs) for _ in range(k))) if k else ONE


def random_metric(n: int, seed: int | np.random.Generator, lorentzian: bool | None = None,
                  max_factors: int = 3) -> DiagonalMetric:
    """A random n-dimensional diagonal metric on [0.5, 1.5]^n.

    Signature flags are random unless ``lorentzian`` pins them to (-,+,...,+)
    or makes them all positive.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    xs = tuple(Symbol(f"x{i}", "coord") for i in range(n))
    g = tuple(random_root(rng, xs, max_factors) for _ in range(n))
    if lorentzian is None:
        eta = tuple(int(rng.choice((-1, 1))) for _ in range(n))
    elif lorentzian:
        eta = (-1,) + (1,) * (n - 1)
    else:
        eta = (1,) * n
    dom = tuple((x.name, *DOMAIN) for x in xs)
    return DiagonalMetric(xs, eta, g, (), dom, name=f"random{n}")


def random_expr(rng: np.random.Generator, xs: tuple[Symbol, ...], depth: int = 3) -> Expr:
    """Random expression, smooth and finite on [0.5, 1.5]^n."""
    if depth <= 0 or rng.random() < 0.25:
        return random_factor(rng, xs)
    op = rng.integers(4)
    a = random_expr(rng, xs, depth - 1)
    b = random_expr(rng, xs, depth - 1)
    if op == 0:
        return add(a, b)
    if op == 1:
        return mul(a, b)
    if op == 2:
        return mul(a, power(add(Const(1), power(b, 2)), -1))
    return func(("sin", "cos", "tanh", "exp")[rng.integers(4)],
                mul(Const(Fraction(1, 2)), a))
