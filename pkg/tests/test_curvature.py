import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orthocurv.curvature import (
    LITERAL, RESOLVED, WEIGHTS, RtcTable, SignConvention, calibrate, canonical_key,
    christoffel_DAA, closed_form_table, flatness_check, four_distinct_experiment,
    gauss_K, gauss_K_oneill, intermediary_I, pattern, rtc_diag, rtc_offdiag_AD,
    rtc_offdiag_BD, sqrt_connection,
)
from orthocurv.expr import ONE, ZERO, Const, Symbol, power, sub, to_str
from orthocurv.fixtures import load_fixture
from orthocurv.metric import DiagonalMetric
from orthocurv.numeric import compile_exprs, residual, sample_points
from orthocurv.oracle import christoffels, riemann_frame
from orthocurv.parse import parse
from orthocurv.randmetric import random_metric
from orthocurv.simplify import simplify


def values(exprs, m, n=32, seed=0):
    return compile_exprs(list(exprs))(sample_points(m.sample_domain, n, seed))


def simp(e):
    return to_str(simplify(e))


@pytest.fixture(scope="module")
def polar2():
    return DiagonalMetric.build(["r", "theta"], [1, 1], ["1", "r"],
                                domain={"r": (0.5, 2), "theta": (0.1, 3)})


class TestTable:
    def test_canonical_key(self):
        assert canonical_key(1, 0, 2, 3) == (-1, (0, 1, 2, 3))
        assert canonical_key(1, 0, 3, 2) == (1, (0, 1, 2, 3))
        assert canonical_key(0, 0, 1, 2) is None

    def test_patterns(self):
        assert pattern((0, 1, 0, 1)) == "ABAB"
        assert pattern((0, 1, 1, 2)) == "ABAD"
        assert pattern((0, 1, 2, 3)) == "ABCD"

    def test_rejects_non_canonical_keys(self):
        with pytest.raises(ValueError):
            RtcTable(3, {(1, 0, 0, 1): ONE}, "oracle")
        with pytest.raises(ValueError):
            RtcTable(4, {(0, 1, 2, 3): ONE}, "closed_form")
        with pytest.raises(ValueError):
            RtcTable(2, {}, "made_up")

    def test_get_applies_antisymmetry(self):
        t = RtcTable(2, {(0, 1, 0, 1): Const(5)}, "closed_form")
        assert t.get(1, 0, 0, 1) == Const(-5)
        assert t.get(1, 0, 1, 0) == Const(5)
        assert t.get(0, 0, 0, 1) == ZERO

    def test_uncovered_pattern_raises(self):
        t = closed_form_table(load_fixture("euclid_4"))
        with pytest.raises(KeyError):
            t.get(0, 1, 2, 3)

    def test_key_counts(self):
        t = closed_form_table(load_fixture("euclid_4"))
        assert len(t.keys({"ABAB"})) == 6
        assert len(t.keys()) == 6 + 24
        assert len(riemann_frame(load_fixture("euclid_4")).keys()) == 36

    def test_sign_convention_label_roundtrip(self):
        assert SignConvention.from_label(RESOLVED.label) == RESOLVED
        assert RESOLVED.label == "diag=+eAeB;ad=+eB;bd=-eB;product=-1"
        with pytest.raises(ValueError):
            SignConvention("+2", "+1", "+1", 1)


class TestConnection:
    def test_sqrt_connection(self, milne, polar2):
        # g_{r,t} / g_t with g_t = 1
        assert sqrt_connection(milne, "r", "t") == ONE
        assert sqrt_connection(milne, "t", "r").is_zero
        assert sqrt_connection(polar2, "theta", "r") == ONE

    def test_christoffel_examples(self, milne, polar2):
        r = polar2.coords[0]
        assert christoffel_DAA(polar2, "theta", "r") == -r
        assert christoffel_DAA(polar2, "r", "theta").is_zero
        t = milne.coords[0]
        assert christoffel_DAA(milne, "r", "t") == t
        assert christoffels(milne)(0, 1, 1) == t

    def test_index_errors(self, milne):
        with pytest.raises(IndexError):
            sqrt_connection(milne, "r", "r")
        with pytest.raises(IndexError):
            gauss_K(milne, "t", "psi")
        with pytest.raises(IndexError):
            rtc_offdiag_AD(milne, "t", "r", "t")

    @given(st.integers(2, 5), st.integers(0, 10_000))
    def test_two_forms_agree_with_oracle(self, n, seed):
        m = random_metric(n, seed)
        G = christoffels(m)
        exprs = []
        for a, d in itertools.permutations(range(n), 2):
            exprs += [christoffel_DAA(m, a, d), christoffel_DAA(m, a, d, "metric"), G(d, a, a)]
        v = values(exprs, m, 16, seed)
        assert np.max(residual(v[0::3], v[1::3])) < 1e-10
        assert np.max(residual(v[0::3], v[2::3])) < 1e-10


class TestGauss:
    def test_milne_tr(self, milne):
        assert gauss_K(milne, "t", "r").is_zero

    def test_polar_plane(self, polar2):
        assert simplify(gauss_K(polar2, "r", "theta")).is_zero

    def test_sphere(self, sphere):
        assert simp(gauss_K(sphere, "theta", "phi")) == "1/a^2"

    def test_hyperbolic(self, hyperbolic):
        assert simp(gauss_K(hyperbolic, 0, 1)) == "-1"

    def test_oneill_examples(self):
        u, v, a = Symbol("u", "coord"), Symbol("v", "coord"), Symbol("a", "param")
        pu = lambda s: parse(s, (u, v, a))
        assert simplify(gauss_K_oneill(ONE, pu("u^2"), 1, 1, u, v)).is_zero
        assert simp(gauss_K_oneill(pu("a^2"), pu("a^2*sin(u)^2"), 1, 1, u, v)) == "1/a^2"
        assert simp(gauss_K_oneill(ONE, pu("sinh(u)^2"), 1, 1, u, v)) == "-1"


class TestIntermediary:
    def test_two_dimensional_is_empty(self, sphere):
        assert intermediary_I(sphere, 0, 1) == ZERO

    def test_polar_r_phi(self, polar4d):
        assert intermediary_I(polar4d, "r", "phi").is_zero

    def test_milne_cancels_gauss(self, milne):
        K = gauss_K(milne, "r", "phi")
        I = intermediary_I(milne, "r", "phi")
        assert simp(K) == "1/t^2"
        assert simp(I) == "-1/t^2"
        assert simplify(K + I).is_zero

    @given(st.integers(3, 5), st.integers(0, 10_000))
    def test_vanishing_law(self, n, seed):
        m = random_metric(n, seed)
        for a, b in itertools.combinations(range(n), 2):
            others = [d for d in range(n) if d not in (a, b)]
            if all(m.dg(a, d).is_zero or m.dg(b, d).is_zero for d in others):
                assert intermediary_I(m, a, b) == ZERO


class TestDiagonal:
    @pytest.mark.parametrize("name", ["milne", "polar4d"])
    def test_flat_fixtures(self, name):
        m = load_fixture(name)
        for a, b in itertools.combinations(range(4), 2):
            assert simplify(rtc_diag(m, a, b)).is_zero

    def test_sphere(self, sphere):
        assert simp(rtc_diag(sphere, "theta", "phi")) == "1/a^2"

    def test_identity(self):
        m = load_fixture("euclid_5")
        assert all(rtc_diag(m, a, b).is_zero for a, b in itertools.combinations(range(5), 2))

    def test_schwarzschild_values(self, schwarzschild):
        M, r = Symbol("M", "param"), schwarzschild.coords[1]
        ctx = schwarzschild.coords + schwarzschild.params
        two = parse("2*M/r^3", ctx)
        one = parse("-M/r^3", ctx)
        want = {("t", "r"): two, ("theta", "phi"): two}
        for a, b in itertools.combinations(schwarzschild.names, 2):
            e = rtc_diag(schwarzschild, a, b)
            target = want.get((a, b), one)
            assert np.max(np.abs(values([sub(e, target)], schwarzschild))) < 1e-12

    @given(st.integers(2, 5), st.integers(0, 10_000))
    def test_symmetry(self, n, seed):
        m = random_metric(n, seed)
        pairs = list(itertools.combinations(range(n), 2))
        v = values([rtc_diag(m, a, b) for a, b in pairs] + [rtc_diag(m, b, a) for a, b in pairs], m, 16, seed)
        k = len(pairs)
        assert np.max(residual(v[:k], v[k:])) < 1e-10

    @given(st.integers(2, 5), st.integers(0, 10_000))
    def test_decomposition(self, n, seed):
        m = random_metric(n, seed)
        exprs = [sub(rtc_diag(m, a, b), gauss_K(m, a, b) + intermediary_I(m, a, b))
                 for a, b in itertools.permutations(range(n), 2)]
        assert np.max(np.abs(values(exprs, m, 8, seed))) < 1e-10

    @given(st.integers(0, 10_000))
    def test_two_dimensional_reduction(self, seed):
        m = random_metric(2, seed)
        assert rtc_diag(m, 0, 1) == gauss_K(m, 0, 1)
        x, y = m.coords
        E, G = m.g_diag(0), m.g_diag(1)
        k2 = gauss_K_oneill(E, G, m.eta[0], m.eta[1], x, y)
        v = values([gauss_K(m, 0, 1), k2], m, 16, seed)
        assert np.max(np.abs(v[0] - v[1])) < 1e-10


class TestOffDiagonal:
    def test_identity(self):
        m = load_fixture("euclid_3")
        for a, b, d in itertools.permutations(range(3)):
            assert rtc_offdiag_AD(m, a, b, d).is_zero
            assert rtc_offdiag_BD(m, a, b, d).is_zero

    def test_milne_trtheta(self, milne):
        assert simplify(rtc_offdiag_AD(milne, "t", "r", "theta")).is_zero

    def test_polar(self, polar4d):
        assert simplify(rtc_offdiag_BD(polar4d, "r", "theta", "phi")).is_zero
        for a, b, d in itertools.permutations(range(4), 3):
            assert simplify(rtc_offdiag_AD(polar4d, a, b, d)).is_zero

    @pytest.mark.parametrize("seed", range(10))
    def test_random_3d_match_oracle(self, seed):
        m = random_metric(3, 500 + seed)
        o = riemann_frame(m)
        left, right = [], []
        for a, b, d in itertools.permutations(range(3)):
            left += [rtc_offdiag_AD(m, a, b, d), rtc_offdiag_BD(m, a, b, d)]
            right += [o.get(a, b, a, d), o.get(a, b, b, d)]
        v = values(left + right, m)
        assert np.max(residual(v[:len(left)], v[len(left):])) < 1e-9

    def test_literal_convention_breaks_milne(self, milne):
        t = closed_form_table(milne, LITERAL)
        assert any(not simplify(v).is_zero for v in t.entries.values())
        assert t.sign_convention == LITERAL.label


class TestFlatness:
    @pytest.mark.parametrize("name", ["milne", "polar4d", "euclid_2", "euclid_5"])
    def test_flat(self, name):
        v = flatness_check(load_fixture(name))
        assert v.flat and v.witness is None
        assert set(v.methods.values()) == {"symbolic"}

    def test_numeric_mode(self, milne):
        v = flatness_check(milne, "numeric")
        assert v.flat and set(v.methods.values()) == {"numeric"}
        assert v.max_abs < 1e-10

    def test_sphere_witness(self, sphere):
        v = flatness_check(sphere)
        assert not v.flat
        assert v.witness == (0, 1, 0, 1) and v.witness_expr == "1/a^2"

    def test_schwarzschild_lists_components(self, schwarzschild):
        v = flatness_check(schwarzschild)
        assert not v and len(v.nonzero) == 6

    def test_bad_mode(self, milne):
        with pytest.raises(ValueError):
            flatness_check(milne, "guess")


def test_calibration_selects_resolved():
    res = calibrate()
    assert res.convention == RESOLVED
    assert res.candidates_passing == 1
    assert res.residual < 1e-12 and res.runner_up > 1e-3


def test_calibration_candidate_space():
    assert len(WEIGHTS) == 8


@pytest.mark.parametrize("n", [4, 5])
def test_four_distinct_components_vanish(n):
    for seed in range(5):
        assert four_distinct_experiment(random_metric(n, 900 + seed)) < 1e-10
    assert four_distinct_experiment(load_fixture("anisotropic4d")) < 1e-10
    assert four_distinct_experiment(random_metric(3, 0)) == 0.0
