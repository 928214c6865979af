"""Immutable symbolic expression trees over chart coordinates and parameters.

Every node is built through the canonicalizing constructors (:func:`add`,
:func:`mul`, :func:`power`, :func:`func`), so two trees that compare equal
always describe the same function.  Sums and products are flattened and
sorted by a fixed total order, constants are exact :class:`fractions.Fraction`
values, and like terms / like bases are merged on construction.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Union

__all__ = [
    "Expr", "Const", "Symbol", "Add", "Mul", "Pow", "Func",
    "FUNCTIONS", "ZERO", "ONE",
    "const", "coord", "param", "add", "mul", "power", "func", "neg", "sub", "div",
    "diff", "to_str", "free_symbols", "size",
]

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "ln", "abs")

_ODD = {"sin", "tan", "sinh", "tanh"}
_EVEN = {"cos", "cosh", "abs"}

# node-kind rank for the canonical order
_CONST, _SYM, _FUNC, _POW, _MUL, _ADD = range(6)

Number = Union[int, Fraction]


class Expr:
    """Base class of all expression nodes.  Never instantiate directly."""

    __slots__ = ("_key", "_hash")

    def _make_key(self) -> tuple:
        raise NotImplementedError

    @property
    def key(self) -> tuple:
        try:
            return self._key
        except AttributeError:
            k = self._make_key()
            object.__setattr__(self, "_key", k)
            return k

    def __hash__(self) -> int:
        try:
            return self._hash
        except AttributeError:
            h = hash(self.key)
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return hash(self) == hash(other) and self.key == other.key

    def __lt__(self, other: Expr) -> bool:
        return self.key < other.key

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    # arithmetic sugar
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, q):
        if isinstance(q, Const):
            q = q.value
        if not isinstance(q, (int, Fraction)):
            raise TypeError("exponents must be rational constants")
        return power(self, Fraction(q))

    def __str__(self) -> str:
        return to_str(self)

    def __repr__(self) -> str:
        return f"Expr({to_str(self)!r})"

    @property
    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Number):
        object.__setattr__(self, "value", Fraction(value))

    def _make_key(self):
        return (_CONST, self.value)


class Symbol(Expr):
    """A named coordinate (``role='coord'``) or parameter (``role='param'``)."""

    __slots__ = ("name", "role")

    def __init__(self, name: str, role: str = "coord"):
        if role not in ("coord", "param"):
            raise ValueError(f"unknown symbol role {role!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "role", role)

    def _make_key(self):
        return (_SYM, self.name, self.role)


class Add(Expr):
    __slots__ = ("args",)

    def __init__(self, args: tuple):
        object.__setattr__(self, "args", args)

    def _make_key(self):
        return (_ADD, tuple(a.key for a in self.args))


class Mul(Expr):
    __slots__ = ("args",)

    def __init__(self, args: tuple):
        object.__setattr__(self, "args", args)

    def _make_key(self):
        return (_MUL, tuple(a.key for a in self.args))


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: Fraction):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exp", exp)

    def _make_key(self):
        return (_POW, self.base.key, self.exp)


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "arg", arg)

    def _make_key(self):
        return (_FUNC, self.name, self.arg.key)


ZERO = Const(0)
ONE = Const(1)
_MINUS_ONE = Const(-1)


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(x)
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


def const(value: Number) -> Const:
    return Const(value)


def coord(name: str) -> Symbol:
    return Symbol(name, "coord")


def param(name: str) -> Symbol:
    return Symbol(name, "param")


# ---------------------------------------------------------------------------
# canonicalizing constructors
# ---------------------------------------------------------------------------

def _split_coeff(e: Expr) -> tuple[Fraction, Expr]:
    """Split ``e`` into (rational coefficient, remaining factor)."""
    if isinstance(e, Mul) and isinstance(e.args[0], Const):
        rest = e.args[1:]
        return e.args[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), e


def _with_coeff(c: Fraction, rest: Expr) -> Expr:
    if c == 1:
        return rest
    if isinstance(rest, Mul):
        return Mul((Const(c),) + rest.args)
    return Mul((Const(c), rest))


def add(*args: Expr) -> Expr:
    constant = Fraction(0)
    terms: dict[Expr, Fraction] = {}
    stack = list(args)
    while stack:
        a = stack.pop()
        if isinstance(a, Add):
            stack.extend(a.args)
        elif isinstance(a, Const):
            constant += a.value
        else:
            c, rest = _split_coeff(a)
            if isinstance(rest, Add):
                # c*(u + v) inside a sum is spread over its terms
                stack.extend(mul(Const(c), t) for t in rest.args)
                continue
            terms[rest] = terms.get(rest, Fraction(0)) + c
    items = sorted(((r.key, c, r) for r, c in terms.items() if c != 0),
                   key=lambda t: (t[0], t[1]))
    out = [_with_coeff(c, r) for _, c, r in items]
    if constant != 0:
        out.insert(0, Const(constant))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def _base_exp(e: Expr) -> tuple[Expr, Fraction]:
    if isinstance(e, Pow):
        return e.base, e.exp
    return e, Fraction(1)


def mul(*args: Expr) -> Expr:
    coeff = Fraction(1)
    powers: dict[Expr, Fraction] = {}
    stack = list(args)
    while stack:
        a = stack.pop()
        if isinstance(a, Mul):
            stack.extend(a.args)
        elif isinstance(a, Const):
            coeff *= a.value
        else:
            b, q = _base_exp(a)
            powers[b] = powers.get(b, Fraction(0)) + q
    if coeff == 0:
        return ZERO

    exp_bases = [b for b, q in powers.items()
                 if isinstance(b, Func) and b.name == "exp" and q != 0]
    if len(exp_bases) > 1 or (exp_bases and powers[exp_bases[0]] != 1):
        merged = add(*(mul(Const(powers.pop(b)), b.arg) for b in exp_bases))
        return mul(Const(coeff), *(power(b, q) for b, q in powers.items()),
                   func("exp", merged))

    built = [power(b, q) for b, q in powers.items() if q != 0]
    if any(isinstance(f, Mul) for f in built):
        # a merged exponent became integral on a product base
        return mul(Const(coeff), *built)
    factors = []
    for f in built:
        if isinstance(f, Const):
            coeff *= f.value
        else:
            factors.append(f)
    if coeff == 0:
        return ZERO
    if not factors:
        return Const(coeff)
    if coeff == 1:
        if len(factors) == 1:
            return factors[0]
    factors.sort(key=lambda e: e.key)
    if coeff == 1:
        return Mul(tuple(factors))
    return Mul((Const(coeff),) + tuple(factors))


def _exact_root(v: Fraction, q: Fraction) -> Fraction | None:
    """Return v**q exactly when it is rational, else None."""
    if v < 0:
        return None
    num, den = v.numerator, v.denominator
    root = q.denominator

    def iroot(k: int) -> int | None:
        r = round(k ** (1.0 / root))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand ** root == k:
                return cand
        return None

    rn, rd = iroot(num), iroot(den)
    if rn is None or rd is None:
        return None
    return Fraction(rn, rd) ** q.numerator


def power(base: Expr, q: Number) -> Expr:
    q = Fraction(q)
    if q == 0:
        return ONE
    if q == 1:
        return base
    if isinstance(base, Const):
        v = base.value
        if v == 0:
            if q < 0:
                raise ZeroDivisionError("0 raised to a negative power")
            return ZERO
        if v == 1:
            return ONE
        if q.denominator == 1:
            return Const(v ** q.numerator)
        r = _exact_root(v, q)
        if r is not None:
            return Const(r)
        return Pow(base, q)
    if isinstance(base, Pow):
        if q.denominator == 1 or base.exp.denominator != 1:
            return power(base.base, base.exp * q)
        return Pow(base, q)
    if isinstance(base, Mul) and q.denominator == 1:
        return mul(*(power(f, q) for f in base.args))
    if isinstance(base, Func) and base.name == "exp":
        return func("exp", mul(Const(q), base.arg))
    return Pow(base, q)


def _leading_negative(e: Expr) -> bool:
    if isinstance(e, Const):
        return e.value < 0
    if isinstance(e, Mul):
        return isinstance(e.args[0], Const) and e.args[0].value < 0
    if isinstance(e, Add):
        # terms are ordered by their coefficient-free part, so this choice
        # flips exactly when the whole sum is negated
        return _leading_negative(e.args[0])
    return False


def func(name: str, arg: Expr) -> Expr:
    if name == "sqrt":
        return power(arg, Fraction(1, 2))
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    if isinstance(arg, Const):
        v = arg.value
        if v == 0:
            if name in ("sin", "tan", "sinh", "tanh", "abs"):
                return ZERO
            if name in ("cos", "cosh", "exp"):
                return ONE
        if name == "ln" and v == 1:
            return ZERO
        if name == "abs":
            return Const(abs(v))
    if name in (_ODD | _EVEN) and _leading_negative(arg):
        # add() spreads the sign over a sum, so the flipped argument is a plain sum again
        flipped = add(neg(arg)) if isinstance(arg, Add) else neg(arg)
        inner = func(name, flipped)
        return neg(inner) if name in _ODD else inner
    if name == "exp":
        if isinstance(arg, Func) and arg.name == "ln":
            return arg.arg
        terms = arg.args if isinstance(arg, Add) else (arg,)
        logs, rest = [], []
        for t in terms:
            c, r = _split_coeff(t)
            if isinstance(r, Func) and r.name == "ln":
                logs.append(power(r.arg, c))
            else:
                rest.append(t)
        if logs:
            return mul(*logs, func("exp", add(*rest)))
    if name == "ln" and isinstance(arg, Func) and arg.name == "exp":
        return arg.arg
    return Func(name, arg)


def neg(e: Expr) -> Expr:
    return mul(_MINUS_ONE, e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def div(a: Expr, b: Expr) -> Expr:
    return mul(a, power(b, -1))


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1 << 16)
def diff(e: Expr, x: Symbol) -> Expr:
    """Partial derivative of ``e`` with respect to the coordinate ``x``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Symbol):
        return ONE if e == x else ZERO
    if not _depends_on(e, x):
        return ZERO
    if isinstance(e, Add):
        return add(*(diff(a, x) for a in e.args))
    if isinstance(e, Mul):
        terms = []
        for i, f in enumerate(e.args):
            df = diff(f, x)
            if not df.is_zero:
                terms.append(mul(df, *e.args[:i], *e.args[i + 1:]))
        return add(*terms)
    if isinstance(e, Pow):
        db = diff(e.base, x)
        return mul(Const(e.exp), power(e.base, e.exp - 1), db)
    if isinstance(e, Func):
        u = e.arg
        du = diff(u, x)
        return mul(_dfunc(e.name, u), du)
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def _dfunc(name: str, u: Expr) -> Expr:
    if name == "sin":
        return func("cos", u)
    if name == "cos":
        return neg(func("sin", u))
    if name == "tan":
        return power(func("cos", u), -2)
    if name == "sinh":
        return func("cosh", u)
    if name == "cosh":
        return func("sinh", u)
    if name == "tanh":
        return power(func("cosh", u), -2)
    if name == "exp":
        return func("exp", u)
    if name == "ln":
        return power(u, -1)
    if name == "abs":
        # sign(u); undefined at u = 0
        return div(func("abs", u), u)
    raise TypeError(f"unsupported function {name!r}")


@lru_cache(maxsize=1 << 16)
def _free(e: Expr) -> frozenset:
    if isinstance(e, Symbol):
        return frozenset((e,))
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, (Add, Mul)):
        out = frozenset()
        for a in e.args:
            out |= _free(a)
        return out
    if isinstance(e, Pow):
        return _free(e.base)
    return _free(e.arg)


def _depends_on(e: Expr, x: Symbol) -> bool:
    return x in _free(e)


def free_symbols(e: Expr) -> frozenset:
    return _free(e)


def size(e: Expr) -> int:
    """Number of nodes in the tree (shared subtrees counted each time)."""
    if isinstance(e, (Add, Mul)):
        return 1 + sum(size(a) for a in e.args)
    if isinstance(e, Pow):
        return 1 + size(e.base)
    if isinstance(e, Func):
        return 1 + size(e.arg)
    return 1


# ---------------------------------------------------------------------------
# printing (output re-parses to the same canonical tree)
# ---------------------------------------------------------------------------

def _frac_str(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _atom_str(e: Expr) -> str:
    """Render ``e`` so it can sit as a base of ``^`` or a factor."""
    s = to_str(e)
    if isinstance(e, (Add, Mul, Pow)) or (isinstance(e, Const) and
                                           (e.value < 0 or e.value.denominator != 1)):
        return f"({s})"
    return s


def _power_str(base: Expr, q: Fraction) -> str:
    if q == Fraction(1, 2):
        return f"sqrt({to_str(base)})"
    b = _atom_str(base)
    if q.denominator == 1 and q > 0:
        return f"{b}^{q.numerator}"
    return f"{b}^({_frac_str(q)})"


def _factor_str(e: Expr) -> str:
    if isinstance(e, Pow):
        return _power_str(e.base, e.exp)
    if isinstance(e, Add):
        return f"({to_str(e)})"
    return to_str(e)


def _mul_str(e: Expr) -> str:
    coeff, rest = _split_coeff(e)
    factors = rest.args if isinstance(rest, Mul) else (rest,)
    num, den = [], []
    lone_sum = False
    for f in factors:
        b, q = _base_exp(f)
        if q < 0:
            lone_sum = isinstance(b, Add) and q == -1
            den.append(_factor_str(power(b, -q)))
        else:
            num.append(_factor_str(f))
    sign = "-" if coeff < 0 else ""
    c = abs(coeff)
    if c.denominator != 1 and len(den) == 1 and lone_sum:
        # keep the constant out of a grouped denominator: 4*(1 + x) would
        # re-parse as the distributed sum 4 + 4*x
        num.insert(0, _frac_str(c))
    else:
        if c.numerator != 1 or not num:
            num.insert(0, str(c.numerator))
        if c.denominator != 1:
            den.insert(0, str(c.denominator))
    s = "*".join(num)
    if den:
        s += "/" + (den[0] if len(den) == 1 else "(" + "*".join(den) + ")")
    return sign + s


def to_str(e: Expr) -> str:
    """Deterministic infix rendering in the parser's grammar."""
    if isinstance(e, Const):
        return _frac_str(e.value)
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_str(e.arg)})"
    if isinstance(e, Pow):
        if e.exp < 0:
            return _mul_str(e)
        return _power_str(e.base, e.exp)
    if isinstance(e, Mul):
        return _mul_str(e)
    if isinstance(e, Add):
        parts = []
        for i, t in enumerate(e.args):
            if _leading_negative(t) and not isinstance(t, Add):
                s = _factor_str(neg(t)) if isinstance(neg(t), Add) else to_str(neg(t))
                parts.append(("-" if i == 0 else " - ") + s)
            else:
                parts.append(("" if i == 0 else " + ") + to_str(t))
        return "".join(parts)
    raise TypeError(type(e).__name__)


def sum_of(items: Iterable[Expr]) -> Expr:
    return add(*items)
