"""Rational-function normalization with optional trig/hyperbolic rules.

An expression is rewritten as ``N / (F1^m1 * F2^m2 ...)`` where ``N`` is an
expanded Laurent polynomial over *atoms* (symbols, function applications with
simplified arguments, and roots of non-atomic bases) and each ``Fi`` is a
monic, content-free polynomial that could not be cancelled.  With ``trig``
enabled, ``cos(u)^2`` and ``cosh(u)^2`` are rewritten through
``sin(u)^2 + cos(u)^2 = 1`` and ``cosh(u)^2 - sinh(u)^2 = 1``, which gives a
normal form for polynomials in sin/cos (sinh/cosh) of a common argument.

The procedure is sound but not complete: a nonzero result does not prove the
input is nonzero.  ``numeric.equivalent_numeric`` is the backstop.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from .expr import (
    ONE, ZERO, Add, Const, Expr, Func, Mul, Pow, Symbol, add, func, mul, power,
)

__all__ = ["simplify", "is_zero"]

MAX_TERMS = 4000


class _TooLarge(Exception):
    pass


# A monomial is (pairs, exparg): pairs is a tuple of (atom, exponent) sorted
# by atom key, exparg the argument of the single merged exp() factor.
_EMPTY = ((), ZERO)


def _mono(pairs: dict, exparg: Expr) -> tuple[Fraction, tuple]:
    """Normalize a monomial; returns (coefficient factor, monomial)."""
    coeff = Fraction(1)
    out = []
    for atom, e in pairs.items():
        if e == 0:
            continue
        if isinstance(atom, Const):
            k = math.floor(e)
            coeff *= atom.value ** k
            e -= k
            if e == 0:
                continue
        out.append((atom, e))
    out.sort(key=lambda p: p[0].key)
    return coeff, (tuple(out), exparg)


def _mono_mul(m1, m2) -> tuple[Fraction, tuple]:
    if not m1[0] and m1[1].is_zero:
        return Fraction(1), m2
    if not m2[0] and m2[1].is_zero:
        return Fraction(1), m1
    pairs = dict(m1[0])
    for a, e in m2[0]:
        pairs[a] = pairs.get(a, Fraction(0)) + e
    if m1[1].is_zero:
        ex = m2[1]
    elif m2[1].is_zero:
        ex = m1[1]
    else:
        ex = simplify(add(m1[1], m2[1]))
    return _mono(pairs, ex)


def _poly_add(p: dict, q: dict) -> dict:
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, Fraction(0)) + c
        if v == 0:
            out.pop(m, None)
        else:
            out[m] = v
    return out


def _poly_mul(p: dict, q: dict) -> dict:
    if len(p) * len(q) > MAX_TERMS:
        raise _TooLarge
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            k, m = _mono_mul(m1, m2)
            v = out.get(m, Fraction(0)) + c1 * c2 * k
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
    return out


def _poly_pow(p: dict, k: int) -> dict:
    out = {_EMPTY: Fraction(1)}
    for _ in range(k):
        out = _poly_mul(out, p)
    return out


def _poly_scale(p: dict, c: Fraction, mono=_EMPTY) -> dict:
    out = {}
    for m, v in p.items():
        k, mm = _mono_mul(m, mono)
        out[mm] = out.get(mm, Fraction(0)) + v * c * k
    return {m: v for m, v in out.items() if v != 0}


def _poly_key(p: dict) -> tuple:
    return tuple(sorted((_mono_key(m), c) for m, c in p.items()))


def _mono_key(m) -> tuple:
    return (tuple((a.key, e) for a, e in m[0]), m[1].key)


# ---------------------------------------------------------------------------
# rational functions
# ---------------------------------------------------------------------------

class _Rat:
    """Numerator polynomial plus denominator factors {key: (poly, mult)}."""

    __slots__ = ("num", "den")

    def __init__(self, num: dict, den: dict | None = None):
        self.num = num
        self.den = den or {}


def _rat_const(c: Fraction) -> _Rat:
    return _Rat({_EMPTY: c} if c != 0 else {})


def _rat_mono(atom: Expr, e: Fraction = Fraction(1)) -> _Rat:
    k, m = _mono({atom: e}, ZERO)
    return _Rat({m: k})


def _expand_den(den: dict, skip: dict | None = None) -> dict:
    out = {_EMPTY: Fraction(1)}
    for key, (poly, mult) in den.items():
        m = mult - (skip or {}).get(key, 0)
        if m > 0:
            out = _poly_mul(out, _poly_pow(poly, m))
    return out


def _rat_add(a: _Rat, b: _Rat) -> _Rat:
    if not a.num:
        return b
    if not b.num:
        return a
    den = dict(a.den)
    for k, (p, m) in b.den.items():
        if k not in den or den[k][1] < m:
            den[k] = (p, m)
    na = _poly_mul(a.num, _expand_den(den, {k: m for k, (_, m) in a.den.items()}))
    nb = _poly_mul(b.num, _expand_den(den, {k: m for k, (_, m) in b.den.items()}))
    return _Rat(_poly_add(na, nb), den)


def _rat_mul(a: _Rat, b: _Rat) -> _Rat:
    if not a.num or not b.num:
        return _Rat({})
    den = dict(a.den)
    for k, (p, m) in b.den.items():
        den[k] = (p, den[k][1] + m) if k in den else (p, m)
    return _Rat(_poly_mul(a.num, b.num), den)


def _content(p: dict) -> tuple[dict, dict]:
    """Split off the monomial content; returns (content pairs, cofactor poly)."""
    monos = list(p)
    atoms = set()
    for m in monos:
        atoms.update(a for a, _ in m[0])
    content = {}
    for a in atoms:
        lo = min(dict(m[0]).get(a, Fraction(0)) for m in monos)
        if lo != 0:
            content[a] = lo
    if not content:
        return {}, p
    kinv, inv = _mono({a: -e for a, e in content.items()}, ZERO)
    return content, _poly_scale(p, kinv, inv)


def _reduced_content(p: dict, trig: bool) -> tuple[dict, dict]:
    """Content and cofactor, trig-reducing the cofactor until both are stable.

    Dividing out a negative power of cos/cosh can expose a square that the
    trig rule has to see again.
    """
    total: dict = {}
    for _ in range(16):
        if trig:
            p = _trig_reduce(p)
        content, p = _content(p)
        for a, e in content.items():
            total[a] = total.get(a, Fraction(0)) + e
        if not trig or not content or _trig_reduce(p) == p:
            break
    return {a: e for a, e in total.items() if e != 0}, p


def _normalize_factor(p: dict, trig: bool) -> tuple[Fraction, dict, dict]:
    """Return (scale, content pairs, monic factor) with p = scale*content*factor."""
    content, q = _reduced_content(p, trig)
    lead = max(q, key=_mono_key)
    c = q[lead]
    return c, content, {m: v / c for m, v in q.items()}


def _rat_inv(a: _Rat, trig: bool) -> _Rat:
    if not a.num:
        raise ZeroDivisionError("division by an expression that simplifies to zero")
    numer = _expand_den(a.den)
    if len(a.num) == 1:
        (m, c), = a.num.items()
        k, inv = _mono({x: -e for x, e in m[0]}, _neg(m[1]))
        return _Rat(_poly_scale(numer, k / c, inv))
    c, content, f = _normalize_factor(a.num, trig)
    k, inv = _mono({x: -e for x, e in content.items()}, ZERO)
    key = _poly_key(f)
    return _Rat(_poly_scale(numer, k / c, inv), {key: (f, 1)})


def _neg(e: Expr) -> Expr:
    return ZERO if e.is_zero else mul(Const(-1), e)


def _rat_pow(a: _Rat, k: int, trig: bool) -> _Rat:
    if k < 0:
        a = _rat_inv(a, trig)
        k = -k
    out = _rat_const(Fraction(1))
    for _ in range(k):
        out = _rat_mul(out, a)
    return out


# ---------------------------------------------------------------------------
# conversion
# ---------------------------------------------------------------------------

def _is_atomic_base(b: Expr) -> bool:
    return isinstance(b, Symbol) or (isinstance(b, Func) and b.name != "exp") or \
        (isinstance(b, Const) and b.value > 0)


def _root_orders(e: Expr, out: dict, trig: bool) -> None:
    """Collect, per non-atomic base, the lcm of fractional-power denominators."""
    if isinstance(e, (Add, Mul)):
        for a in e.args:
            _root_orders(a, out, trig)
    elif isinstance(e, Pow):
        if e.exp.denominator == 1:
            _root_orders(e.base, out, trig)
            return
        b = simplify(e.base, trig)
        if not _is_atomic_base(b):
            out[b] = math.lcm(out.get(b, 1), e.exp.denominator)


class _Converter:
    def __init__(self, roots: dict, trig: bool):
        self.roots = roots
        self.trig = trig

    def rat(self, e: Expr) -> _Rat:
        if isinstance(e, Const):
            return _rat_const(e.value)
        if isinstance(e, Symbol):
            return _rat_mono(e)
        if isinstance(e, Add):
            out = _Rat({})
            for a in e.args:
                out = _rat_add(out, self.rat(a))
            return out
        if isinstance(e, Mul):
            out = _rat_const(Fraction(1))
            for a in e.args:
                out = _rat_mul(out, self.rat(a))
            return out
        if isinstance(e, Pow):
            return self.pow(e.base, e.exp)
        if isinstance(e, Func):
            return self.func(e)
        raise TypeError(type(e).__name__)

    def func(self, e: Func) -> _Rat:
        arg = simplify(e.arg, self.trig)
        if self.trig and e.name in ("tan", "tanh"):
            s, c = ("sin", "cos") if e.name == "tan" else ("sinh", "cosh")
            return _rat_mul(self.rat(func(s, arg)),
                            _rat_pow(self.rat(func(c, arg)), -1, self.trig))
        f = func(e.name, arg)
        if isinstance(f, Func) and f.name == "exp":
            return _Rat({((), f.arg): Fraction(1)})
        if isinstance(f, Func):
            return _rat_mono(f)
        return self.rat(f)

    def pow(self, base: Expr, q: Fraction) -> _Rat:
        if q.denominator == 1:
            return _rat_pow(self.rat(base), q.numerator, self.trig)
        b = simplify(base, self.trig)
        if isinstance(b, Func) and b.name == "exp":
            return self.rat(func("exp", mul(Const(q), b.arg)))
        if _is_atomic_base(b):
            return _rat_mono(b, q)
        d = self.roots.get(b, q.denominator)
        atom = Pow(b, Fraction(1, d))
        return _rat_mono(atom, q * d)

    def lift_roots(self, r: _Rat) -> _Rat:
        """Move whole powers of root atoms, e.g. sqrt(B)^3 -> B*sqrt(B)."""
        for _ in range(64):
            extract = None
            for m in r.num:
                for a, e in m[0]:
                    if isinstance(a, Pow) and not (0 <= e < a.exp.denominator):
                        extract = a
                        break
                if extract is not None:
                    break
            if extract is None:
                return r
            d = extract.exp.denominator
            base_rat = self.rat(extract.base)
            total = _Rat({}, r.den)
            for m, c in r.num.items():
                pairs = dict(m[0])
                e = pairs.get(extract, Fraction(0))
                k = math.floor(e / d)
                if k == 0:
                    total = _rat_add(total, _Rat({m: c}, r.den))
                    continue
                pairs[extract] = e - k * d
                kk, mm = _mono(pairs, m[1])
                term = _rat_mul(_Rat({mm: c * kk}, r.den), _rat_pow(base_rat, k, self.trig))
                total = _rat_add(total, term)
            r = total
        return r


# ---------------------------------------------------------------------------
# trig reduction and exact division
# ---------------------------------------------------------------------------

_PARTNER = {"cos": ("sin", -1), "cosh": ("sinh", 1)}


def _trig_reduce(p: dict) -> dict:
    out: dict = {}
    for m, c in p.items():
        part = {m: c}
        for a, e in m[0]:
            if isinstance(a, Func) and a.name in _PARTNER and e >= 2:
                j = math.floor(e / 2)
                name, sign = _PARTNER[a.name]
                s = func(name, a.arg)
                # (1 + sign*s^2)^j, then lower the cos/cosh exponent by 2j
                rep = _poly_pow({_EMPTY: Fraction(1), _mono({s: Fraction(2)}, ZERO)[1]: Fraction(sign)}, j)
                _, lower = _mono({a: Fraction(-2 * j)}, ZERO)
                part = _poly_mul(part, _poly_scale(rep, Fraction(1), lower))
        out = _poly_add(out, part)
    return out


def _divide(n: dict, f: dict) -> dict | None:
    """Exact quotient n / f, or None when f does not divide n."""
    if any(not m[1].is_zero for m in n) or any(not m[1].is_zero for m in f):
        return None
    atoms = sorted({a for m in list(n) + list(f) for a, _ in m[0]}, key=lambda a: a.key)
    index = {a: i for i, a in enumerate(atoms)}

    def order(m):
        v = [Fraction(0)] * len(atoms)
        for a, e in m[0]:
            v[index[a]] = e
        return (sum(v), tuple(v))

    lt_f = max(f, key=order)
    lt_pairs = dict(lt_f[0])
    rem = dict(n)
    quot: dict = {}
    for _ in range(10 * MAX_TERMS):
        if not rem:
            return quot
        lt = max(rem, key=order)
        pairs = dict(lt[0])
        if any(pairs.get(a, 0) < e for a, e in lt_pairs.items()):
            return None
        for a, e in lt_pairs.items():
            pairs[a] = pairs.get(a, Fraction(0)) - e
        k, q_mono = _mono(pairs, ZERO)
        coeff = rem[lt] / f[lt_f] * k
        quot = _poly_add(quot, {q_mono: coeff})
        rem = _poly_add(rem, _poly_scale(f, -coeff, q_mono))
        if len(rem) > MAX_TERMS:
            return None
    return None


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def _rebuild_poly(p: dict) -> Expr:
    terms = []
    for (pairs, ex), c in sorted(p.items(), key=lambda t: _mono_key(t[0])):
        factors = [power(a, e) for a, e in pairs]
        if not ex.is_zero:
            factors.append(func("exp", ex))
        terms.append(mul(Const(c), *factors))
    return add(*terms)


def _finalize(r: _Rat, trig: bool) -> Expr:
    if not r.num:
        return ZERO
    content, rest = _reduced_content(r.num, trig)
    if not rest:
        return ZERO
    den = dict(r.den)
    for key in sorted(den, key=repr):
        f, m = den[key]
        while m > 0:
            q = _divide(rest, f)
            if q is None:
                break
            rest, m = q, m - 1
        if m:
            den[key] = (f, m)
        else:
            del den[key]
    if content:
        kc, cm = _mono(content, ZERO)
        rest = _poly_scale(rest, kc, cm)
    numer = _rebuild_poly(rest)
    dens = [power(_rebuild_poly(f), -m) for _, (f, m) in sorted(den.items(), key=lambda kv: repr(kv[0]))]
    return mul(numer, *dens)


@lru_cache(maxsize=1 << 14)
def simplify(e: Expr, trig: bool = True) -> Expr:
    """Return the normal form of ``e`` (idempotent, pointwise equal on its domain).

    Expressions whose expansion exceeds an internal size budget are returned
    unchanged (they are already canonical).
    """
    if isinstance(e, (Const, Symbol)):
        return e
    roots: dict = {}
    _root_orders(e, roots, trig)
    conv = _Converter(roots, trig)
    try:
        r = conv.lift_roots(conv.rat(e))
        return _finalize(r, trig)
    except _TooLarge:
        return e


def is_zero(e: Expr, trig: bool = True) -> bool:
    """True when ``e`` simplifies to the constant 0 (sound, not complete)."""
    return simplify(e, trig).is_zero
