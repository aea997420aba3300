"""Special-function constants against independent oracles (scipy, quadrature)."""

import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from frachardy.errors import DomainValidationError
from frachardy.specfun import (
    ModelParams,
    SpectralConstants,
    beta_of_c,
    coupling_F,
    critical_point_check,
    digamma_fn,
    form_constant,
    gamma_fn,
    hardy_best_constant,
    hardy_best_constant_naive,
    riesz_constant_std,
)

DIM_PAIRS = [(1, 0.5), (2, 1.0), (2, 1.5), (3, 1.0), (3, 1.5)]


class TestGamma:
    def test_exact_points(self):
        assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)
        assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
        assert gamma_fn(5.0) == pytest.approx(24.0, rel=1e-14)

    def test_against_scipy_on_range(self):
        xs = np.linspace(0.05, 50.0, 1711)
        ours = np.array([gamma_fn(float(x)) for x in xs])
        ref = sp.gamma(xs)
        assert np.max(np.abs(ours / ref - 1.0)) <= 1e-13

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_nonpositive(self, bad):
        with pytest.raises(DomainValidationError):
            gamma_fn(bad)


class TestDigamma:
    def test_euler_gamma(self):
        assert digamma_fn(1.0) == pytest.approx(-0.5772156649015329, abs=1e-12)

    def test_recurrence_value(self):
        assert digamma_fn(2.0) == pytest.approx(-0.5772156649015329 + 1.0, abs=1e-12)

    def test_half_against_integral_formula(self):
        # independent oracle: Phi(x) = -gamma + int_0^inf (e^-t - e^-tx)/(1-e^-t) dt
        x = 0.5
        val, _ = quad(
            lambda t: (math.exp(-t) - math.exp(-t * x)) / (1.0 - math.exp(-t)),
            0.0,
            60.0,
            limit=200,
        )
        oracle = -0.5772156649015329 + val
        assert digamma_fn(x) == pytest.approx(oracle, abs=1e-9)
        assert digamma_fn(x) == pytest.approx(-1.9635100260214235, abs=1e-10)

    def test_recurrence_property(self):
        xs = np.linspace(0.1, 20.0, 400)
        err = max(abs(digamma_fn(x + 1.0) - digamma_fn(x) - 1.0 / x) for x in xs)
        assert err <= 1e-10

    def test_against_scipy(self):
        xs = np.linspace(0.05, 40.0, 999)
        err = max(abs(digamma_fn(float(x)) - sp.digamma(x)) for x in xs)
        assert err <= 1e-10

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainValidationError):
            digamma_fn(0.0)


class TestFormConstant:
    def test_2d(self):
        assert form_constant(2, 1.0) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-13)

    def test_1d_cancellation(self):
        # (d + a)/2 = 1 - a/2 at d=1, a=0.5: the Gamma factors cancel
        assert form_constant(1, 0.5) == pytest.approx(
            1.0 / (2.0 * math.sqrt(2.0 * math.pi)), rel=1e-13
        )

    def test_3d(self):
        # pi^(3/2) * Gamma(1/2) = pi^2 in the denominator
        assert form_constant(3, 1.0) == pytest.approx(1.0 / math.pi**2, rel=1e-13)

    def test_scipy_cross_check(self):
        for d, a in DIM_PAIRS:
            ref = a * sp.gamma((d + a) / 2) / (2 ** (1 - a) * math.pi ** (d / 2) * sp.gamma(1 - a / 2))
            assert form_constant(d, a) == pytest.approx(ref, rel=1e-13)


class TestRieszConstant:
    @pytest.mark.parametrize(
        "d,a,expected",
        [
            (3, 1.0, 1.0 / (2.0 * math.pi**2)),
            (2, 1.0, 1.0 / (2.0 * math.pi)),
            (1, 0.5, 1.0 / math.sqrt(2.0 * math.pi)),
        ],
    )
    def test_values(self, d, a, expected):
        assert riesz_constant_std(d, a) == pytest.approx(expected, rel=1e-13)


class TestCouplingF:
    def test_known_values(self):
        assert coupling_F(3, 1.0, 1.0) == pytest.approx(2.0 / math.pi, rel=1e-13)
        # Gamma(5/4) = Gamma(1/4)/4 makes this exactly 1/2
        assert coupling_F(3, 1.0, 0.5) == pytest.approx(0.5, rel=1e-13)

    def test_endpoints_are_zero(self):
        for d, a in DIM_PAIRS:
            assert coupling_F(d, a, 0.0) == 0.0
            assert coupling_F(d, a, d - a) == 0.0

    def test_outside_range_rejected(self):
        with pytest.raises(DomainValidationError):
            coupling_F(2, 1.0, 1.5)
        with pytest.raises(DomainValidationError):
            coupling_F(2, 1.0, -0.1)

    def test_symmetry_dense(self):
        for d, a in DIM_PAIRS:
            width = d - a
            bs = np.linspace(0.0, width, 1000)
            worst = max(
                abs(coupling_F(d, a, b) - coupling_F(d, a, width - b))
                / max(1.0, coupling_F(d, a, b))
                for b in bs
            )
            assert worst <= 1e-12

    def test_strict_monotonicity(self):
        for d, a in DIM_PAIRS:
            bc = (d - a) / 2.0
            bs = np.linspace(1e-6, bc - 1e-6, 500)
            vals = [coupling_F(d, a, b) for b in bs]
            assert all(y > x for x, y in zip(vals, vals[1:]))

    @settings(max_examples=60, deadline=None)
    @given(st.floats(min_value=1e-3, max_value=0.999))
    def test_symmetry_property(self, frac):
        d, a = 2, 1.0
        width = d - a
        b = frac * width
        lhs = coupling_F(d, a, b)
        rhs = coupling_F(d, a, width - b)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, lhs)


class TestHardyConstant:
    def test_values(self):
        assert hardy_best_constant(3, 1.0) == pytest.approx(2.0 / math.pi, rel=1e-13)
        # frozen from a 30-digit evaluation of the Gamma formula
        assert hardy_best_constant(2, 1.0) == pytest.approx(0.2284732905222318, rel=1e-13)
        assert hardy_best_constant(1, 0.5) == pytest.approx(0.1399996774524826, rel=1e-13)

    def test_equals_F_at_beta_c(self):
        for d, a in DIM_PAIRS:
            bc = (d - a) / 2.0
            assert abs(hardy_best_constant(d, a) - coupling_F(d, a, bc)) <= 1e-12

    def test_naive_differs(self):
        for d, a in DIM_PAIRS:
            naive = hardy_best_constant_naive(d, a)
            assert abs(naive / hardy_best_constant(d, a) - 1.0) > 0.01


class TestBetaOfC:
    def test_inverse_of_exact_value(self):
        assert beta_of_c(3, 1.0, 0.5) == pytest.approx(0.5, abs=1e-12)

    def test_critical_coupling_maps_to_beta_c(self):
        for d, a in DIM_PAIRS:
            assert beta_of_c(d, a, hardy_best_constant(d, a)) == pytest.approx(
                (d - a) / 2.0, abs=1e-9
            )

    def test_small_coupling_small_beta(self):
        assert beta_of_c(2, 1.0, 1e-10) < 1e-4

    def test_rejects_out_of_range(self):
        cs = hardy_best_constant(2, 1.0)
        with pytest.raises(DomainValidationError):
            beta_of_c(2, 1.0, 0.0)
        with pytest.raises(DomainValidationError):
            beta_of_c(2, 1.0, cs * 1.001)

    def test_roundtrip_dense(self):
        d, a = 1, 0.5
        bc = (d - a) / 2.0
        for b in np.linspace(1e-3, bc, 60):
            c = coupling_F(d, a, b)
            assert beta_of_c(d, a, c) == pytest.approx(b, abs=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=1e-3, max_value=0.999))
    def test_roundtrip_property(self, frac):
        # capped at 0.999*beta_c: at the flat maximum F(b) ~ c* - k (b - beta_c)^2
        # the inversion is sqrt(eps)-limited (~4e-9) in double precision
        d, a = 2, 1.0
        b = frac * (d - a) / 2.0
        c = coupling_F(d, a, b)
        assert beta_of_c(d, a, c) == pytest.approx(b, abs=1e-10)


class TestCriticalPoint:
    @pytest.mark.parametrize("d,a", DIM_PAIRS)
    def test_root_at_beta_c(self, d, a):
        assert abs(critical_point_check(d, a) - (d - a) / 2.0) <= 1e-8


class TestParams:
    def test_validation(self):
        with pytest.raises(DomainValidationError):
            ModelParams(d=4, alpha=1.0)
        with pytest.raises(DomainValidationError):
            ModelParams(d=1, alpha=1.2)
        with pytest.raises(DomainValidationError):
            ModelParams(d=2, alpha=1.0, c=1.0)

    def test_derived_quantities(self):
        p = ModelParams(d=2, alpha=1.0, c=0.5 * hardy_best_constant(2, 1.0))
        assert p.beta_c == 0.5
        assert 0.0 < p.beta < p.beta_c
        assert not p.is_critical
        assert ModelParams(d=2, alpha=1.0, c=p.c_star).is_critical

    def test_spectral_constants_consistency(self):
        sc = SpectralConstants(d=3, alpha=1.0)
        assert sc.c_star == pytest.approx(coupling_F(3, 1.0, sc.beta_c), abs=1e-12)
        assert sc.beta_c == 1.0
