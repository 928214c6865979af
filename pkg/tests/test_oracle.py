import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orthocurv.cartan import cartan_table
from orthocurv.curvature import RtcTable, closed_form_table
from orthocurv.expr import ONE, ZERO, Const, neg, power, sub, to_str
from orthocurv.fixtures import load_fixture
from orthocurv.metric import DiagonalMetric
from orthocurv.numeric import SamplingError, compile_exprs, evaluate, residual, sample_points
from orthocurv.oracle import (
    ProximityError, christoffels, compare, finite_diff_riemann, ll_applicable, ll_rtc,
    ll_table, mathpages_rtc, mathpages_table, riemann_frame, riemann_lowered, to_frame,
)
from orthocurv.parse import parse
from orthocurv.randmetric import random_metric
from orthocurv.simplify import simplify


def values(exprs, m, n=32, seed=0):
    return compile_exprs(list(exprs))(sample_points(m.sample_domain, n, seed))


@pytest.fixture(scope="module")
def polar2():
    return DiagonalMetric.build(["r", "theta"], [1, 1], ["1", "r"],
                                domain={"r": (0.5, 2), "theta": (0.1, 3)})


class TestChristoffels:
    def test_identity(self):
        assert christoffels(load_fixture("euclid_4")).nonzero() == []

    def test_polar_plane(self, polar2):
        G = christoffels(polar2)
        r = polar2.coords[0]
        assert G(0, 1, 1) == neg(r)
        assert G(1, 0, 1) == power(r, -1) == G(1, 1, 0)
        assert G(0, 0, 0) == ZERO

    @given(st.integers(2, 5), st.integers(0, 10_000))
    def test_diagonal_index_patterns(self, n, seed):
        m = random_metric(n, seed)
        for r, a, b in christoffels(m).nonzero():
            assert r == a or r == b or a == b

    def test_finite_difference_spot_check(self, polar2):
        # Gamma^r_thetatheta = -1/2 d_r g_thth, by central differences
        p, h = 1.3, 1e-5
        fd = -0.5 * ((p + h) ** 2 - (p - h) ** 2) / (2 * h)
        assert evaluate(christoffels(polar2)(0, 1, 1), {"r": p, "theta": 1.0}) == pytest.approx(fd, rel=1e-9)


class TestRiemannFrame:
    def test_milne_flat(self, milne):
        t = riemann_frame(milne)
        assert all(simplify(v).is_zero for v in t.entries.values())

    def test_sphere(self, sphere):
        assert to_str(simplify(riemann_frame(sphere).get(0, 1, 0, 1))) == "1/a^2"

    def test_schwarzschild(self, schwarzschild):
        t = riemann_frame(schwarzschild)
        e = sub(t.get(0, 1, 0, 1), parse("2*M/r^3", schwarzschild.coords + schwarzschild.params))
        assert np.max(np.abs(values([e], schwarzschild))) < 1e-12

    def test_to_frame_signs(self, schwarzschild):
        # time-space pairs pick up eta_t eta_r = -1
        low = riemann_lowered(schwarzschild, 0, 1, 0, 1)
        fr = to_frame(schwarzschild, 0, 1, 0, 1, low)
        v = values([low, fr, schwarzschild.g_diag(0), schwarzschild.g_diag(1)], schwarzschild, 8)
        assert np.allclose(v[1], v[0] / (v[2] * v[3]))

    @pytest.mark.parametrize("n", [3, 4])
    def test_identities(self, n):
        for seed in range(4):
            m = random_metric(n, 40 + seed)
            t = riemann_frame(m)
            # lowered frame components R_ABCD = eta_A eta_B R^{AB}_{CD}
            def low(a, b, c, d):
                return Const(m.eta[a] * m.eta[b]) * t.get(a, b, c, d)
            quads = list(itertools.product(range(n), repeat=4))
            anti = [low(a, b, c, d) + low(a, b, d, c) for a, b, c, d in quads]
            pair = [sub(low(a, b, c, d), low(c, d, a, b)) for a, b, c, d in quads]
            bianchi = [low(a, b, c, d) + low(a, c, d, b) + low(a, d, b, c) for a, b, c, d in quads]
            assert np.max(np.abs(values(anti + pair + bianchi, m, 8))) < 1e-9


class TestAppendixFormulas:
    def test_ll_examples(self, milne, sphere):
        assert simplify(ll_rtc(milne, "r", "t")).is_zero
        assert ll_rtc(load_fixture("euclid_3"), 0, 1).is_zero
        assert to_str(simplify(ll_table(sphere).get(0, 1, 0, 1))) == "1/a^2"

    def test_mathpages_examples(self, polar4d, schwarzschild):
        assert all(simplify(v).is_zero for v in mathpages_table(polar4d).entries.values())
        assert mathpages_rtc(load_fixture("euclid_4"), 0, 1).is_zero
        assert compare(mathpages_table(schwarzschild), riemann_frame(schwarzschild), schwarzschild)

    def test_tables_cover_abab_only(self, sphere):
        assert ll_table(sphere).patterns == frozenset({"ABAB"})
        assert mathpages_table(sphere).patterns == frozenset({"ABAB"})

    def test_ll_applicability(self, milne):
        assert ll_applicable(milne)
        bad = DiagonalMetric.build(["x", "y"], [1, 1], ["1", "x"], domain={"x": (-1, 1), "y": (0, 1)})
        assert not ll_applicable(bad)

    @given(st.integers(2, 5), st.integers(0, 10_000))
    def test_match_oracle_random(self, n, seed):
        m = random_metric(n, seed)
        o = riemann_frame(m)
        assert compare(ll_table(m), o, m)
        assert compare(mathpages_table(m), o, m)


class TestCompare:
    def test_milne_closed_form(self, milne):
        r = compare(closed_form_table(milne), riemann_frame(milne), milne)
        assert r.agree and r.max_residual < 1e-12
        assert r.patterns == ("ABAB", "ABAD")

    def test_cartan_vs_closed_form_random(self):
        m = random_metric(4, 2024)
        r = compare(cartan_table(m), closed_form_table(m), m, tol=1e-10)
        assert r and r.sign_convention is not None

    def test_sign_flip_detected(self, sphere, schwarzschild):
        for m in (sphere, schwarzschild):
            o = riemann_frame(m)
            flipped = RtcTable(o.n, {k: neg(v) for k, v in o.entries.items()}, "oracle",
                               None, o.names, o.patterns)
            r = compare(flipped, o, m)
            assert not r.agree and r.sign_flip == -1
            assert r.mismatches() and r.worst_point is not None

    def test_partial_mismatch_is_not_a_flip(self, schwarzschild):
        o = riemann_frame(schwarzschild)
        ent = dict(o.entries)
        ent[(0, 1, 0, 1)] = neg(ent[(0, 1, 0, 1)])
        ent[(0, 2, 0, 2)] = ent[(0, 2, 0, 2)] * Const(2)
        r = compare(RtcTable(4, ent, "oracle", None, o.names, o.patterns), o, schwarzschild)
        assert not r.agree and r.sign_flip is None
        assert {c.label for c in r.mismatches()} == {"t r,t r", "t theta,t theta"}

    def test_agree_needs_every_sample(self, sphere):
        # differs only near theta = 1.4
        o = riemann_frame(sphere)
        bump = parse("1/a^2 + exp(-1000*(theta-1.4)^2)", sphere.coords + sphere.params)
        t = RtcTable(2, {(0, 1, 0, 1): bump}, "closed_form")
        r = compare(t, o, sphere, samples=256)
        assert not r.agree

    def test_rejects_dimension_mismatch(self, sphere, milne):
        with pytest.raises(ValueError):
            compare(riemann_frame(sphere), riemann_frame(milne), milne)

    def test_rejections(self):
        m = DiagonalMetric.build(["x", "y"], [1, 1], ["1", "1"], domain={"x": (-0.2, 1), "y": (0, 1)})
        x = m.coords[0]
        lnx = parse("ln(x)", m.coords)
        t = RtcTable(2, {(0, 1, 0, 1): lnx}, "closed_form")
        r = compare(t, RtcTable(2, {(0, 1, 0, 1): lnx * ONE}, "oracle"), m)
        assert r.agree
        bad = DiagonalMetric.build(["x", "y"], [1, 1], ["1", "1"], domain={"x": (-1, 0.1), "y": (0, 1)})
        with pytest.raises(SamplingError):
            compare(RtcTable(2, {(0, 1, 0, 1): lnx}, "closed_form"),
                    RtcTable(2, {(0, 1, 0, 1): ZERO}, "oracle"), bad)


class TestFiniteDifferences:
    def test_identity(self):
        m = load_fixture("euclid_3")
        p = {n: 0.1 for n in m.names}
        assert max(abs(v) for v in finite_diff_riemann(m, p, 1e-3).values()) < 1e-10

    def test_sphere(self, sphere):
        p = {"theta": 1.0, "phi": 1.0, "a": 2.0}
        v = finite_diff_riemann(sphere, p, 1e-4)[(0, 1, 0, 1)]
        assert v == pytest.approx(0.25, rel=1e-6)

    def test_milne(self, milne):
        p = dict(t=1.3, r=0.7, theta=1.1, phi=0.5)
        assert max(abs(v) for v in finite_diff_riemann(milne, p, 1e-4).values()) < 1e-6

    def test_proximity(self, sphere):
        with pytest.raises(ProximityError):
            finite_diff_riemann(sphere, {"theta": 0.2 + 1e-4, "phi": 1.0, "a": 1.0}, 1e-3)

    @pytest.mark.parametrize("name,p", [
        ("sphere2", {"theta": 1.0, "phi": 1.0, "a": 1.5}),
        ("schwarzschild", {"t": 1.0, "r": 4.0, "theta": 1.2, "phi": 1.0, "M": 0.8}),
    ])
    def test_second_order(self, name, p):
        m = load_fixture(name)
        exact = riemann_frame(m)
        keys = exact.keys()
        ref = np.array([evaluate(exact.get(*k), p) for k in keys])
        errs = []
        for h in (1e-3, 5e-4):
            fd = finite_diff_riemann(m, p, h)
            errs.append(np.max(np.abs(np.array([fd[k] for k in keys]) - ref)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
