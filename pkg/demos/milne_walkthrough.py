"""Milne spacetime by hand: the Gauss and coupling pieces cancel pair by pair."""
import itertools

from orthocurv.curvature import gauss_K, intermediary_I, rtc_offdiag_AD, rtc_offdiag_BD
from orthocurv.expr import to_str
from orthocurv.fixtures import load_fixture
from orthocurv.simplify import simplify


def show(label, e):
    print(f"  {label:<22} {to_str(simplify(e))}")


def main():
    m = load_fixture("milne")
    print("g:", ", ".join(f"g[{c}] = {to_str(g)}" for c, g in zip(m.names, m.g)))
    for a, b in itertools.combinations(m.names, 2):
        K, I = gauss_K(m, a, b), intermediary_I(m, a, b)
        print(f"({a},{b})")
        show("K", K)
        show("I", I)
        show("K + I", K + I)
    bad = [(a, b, d) for a, b, d in itertools.permutations(range(4), 3)
           if not (simplify(rtc_offdiag_AD(m, a, b, d)).is_zero
                   and simplify(rtc_offdiag_BD(m, a, b, d)).is_zero)]
    print("off-diagonal components that survive:", bad or "none")


if __name__ == "__main__":
    main()
