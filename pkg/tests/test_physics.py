import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from fcsim import default_config
from fcsim.config import AnalyzerEfficiencies
from fcsim.errors import InfeasibleFitError
from fcsim.physics import (
    classical_coincidence_ratio,
    collapse_amplitude,
    collapse_constant,
    collapse_expected_ratio,
    local_realistic_expected_ratio,
    matched_f2,
    qm_amplitude,
    qm_coincidence_ratio,
    qm_constant,
    sigma_star,
    smeared_expected_ratio,
    transmission_probability,
)

CFG = default_config()
EFF = AnalyzerEfficiencies(0.97, 0.038)


class TestTransmissionProbability:
    def test_parallel(self):
        assert transmission_probability(0.0, EFF) == pytest.approx(0.97, abs=1e-12)

    def test_perpendicular(self):
        assert transmission_probability(math.pi / 2, EFF) == pytest.approx(0.038, abs=1e-12)

    def test_diagonal_is_midpoint(self):
        assert transmission_probability(math.pi / 4, EFF) == pytest.approx(0.504, abs=1e-9)

    def test_pi_periodic(self):
        rng = np.random.default_rng(5)
        for phi in rng.uniform(-10, 10, 1000):
            assert abs(
                transmission_probability(phi, EFF) - transmission_probability(phi + math.pi, EFF)
            ) < 5e-15

    @given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
    def test_bounded_by_efficiencies(self, phi):
        p = transmission_probability(phi, EFF)
        assert EFF.e_perp - 5e-16 <= p <= EFF.e_par + 5e-16


class TestQmCurve:
    def test_displayed_constants(self):
        # The default config must reproduce the published composite curve
        # 0.2512 + 0.2124*cos(2 phi) within 5e-4 on both coefficients.
        constant = qm_coincidence_ratio(math.pi / 4, CFG)
        amplitude = 0.5 * (qm_coincidence_ratio(0.0, CFG) - qm_coincidence_ratio(math.pi / 2, CFG))
        assert abs(constant - 0.2512) < 5e-4
        assert abs(amplitude - 0.2124) < 5e-4

    def test_reference_values(self):
        assert qm_coincidence_ratio(0.0, CFG) == pytest.approx(0.4636, abs=5e-4)
        assert qm_coincidence_ratio(math.pi / 4, CFG) == pytest.approx(0.2512, abs=3e-4)
        assert qm_coincidence_ratio(math.pi / 2, CFG) == pytest.approx(0.0388, abs=5e-4)

    def test_matches_direct_formula_on_grid(self):
        for phi in CFG.angles:
            assert qm_coincidence_ratio(phi, CFG) == pytest.approx(
                0.2512 + 0.2124 * math.cos(2 * phi), abs=5e-4
            )


class TestClassicalCurve:
    def test_reference_values(self):
        assert classical_coincidence_ratio(math.pi / 4, CFG) == pytest.approx(0.25124, abs=1e-5)
        assert classical_coincidence_ratio(0.0, CFG) == pytest.approx(0.35877, abs=1e-5)
        assert classical_coincidence_ratio(math.pi / 2, CFG) == pytest.approx(0.14371, abs=1e-5)

    def test_shares_constant_with_qm(self):
        # At phi=pi/4 both curves reduce to the same constant term.
        diff = classical_coincidence_ratio(math.pi / 4, CFG) - qm_coincidence_ratio(math.pi / 4, CFG)
        assert abs(diff) < 1e-15


class TestCollapseOracle:
    def test_unit_normalization_values(self):
        cfg = CFG.replace(normalization="unit")
        assert collapse_expected_ratio(0.0, cfg) == pytest.approx(0.48384, abs=1e-5)
        assert collapse_expected_ratio(math.pi / 4, cfg) == pytest.approx(0.25124, abs=1e-5)
        assert collapse_expected_ratio(math.pi / 2, cfg) == pytest.approx(0.01864, abs=1e-5)

    @pytest.mark.parametrize("normalization", ["max-probability", "unit"])
    def test_quadrature_oracle(self, normalization):
        cfg = CFG.replace(normalization=normalization)
        for phi in cfg.angles:
            assert collapse_expected_ratio(phi, cfg) == pytest.approx(
                oracles.collapse_mc_expectation(phi, cfg), abs=1e-6
            )


class TestLocalRealisticOracle:
    @pytest.mark.parametrize("normalization", ["max-probability", "unit"])
    def test_quadrature_oracle(self, normalization):
        cfg = CFG.replace(normalization=normalization)
        for phi in cfg.angles:
            assert local_realistic_expected_ratio(phi, cfg) == pytest.approx(
                oracles.local_mc_expectation(phi, cfg), abs=1e-6
            )

    def test_equals_classical_curve_over_normalization(self):
        cfg = CFG.replace(normalization="unit")
        for phi in cfg.angles:
            assert local_realistic_expected_ratio(phi, cfg) == pytest.approx(
                classical_coincidence_ratio(phi, cfg), abs=1e-15
            )


class TestSmearedOracle:
    def test_zero_sigma_equals_collapse_exactly(self):
        for phi in CFG.angles:
            assert smeared_expected_ratio(phi, 0.0, CFG) == collapse_expected_ratio(phi, CFG)

    def test_large_sigma_suppresses_modulation(self):
        constant = collapse_constant(CFG)
        for phi in (0.0, 0.3, math.pi / 2):
            assert smeared_expected_ratio(phi, 10.0, CFG) == pytest.approx(constant, rel=1e-3)

    def test_reference_value(self):
        cfg = CFG.replace(normalization="unit")
        assert smeared_expected_ratio(math.pi / 2, 0.2131, cfg) == pytest.approx(0.03884, abs=5e-5)

    def test_monotone_in_sigma(self):
        sigmas = np.linspace(0.0, 1.0, 21)
        for phi in (0.1, 0.3, 0.7):  # cos(2 phi) > 0: decreasing
            vals = [smeared_expected_ratio(phi, s, CFG) for s in sigmas]
            assert all(b < a for a, b in zip(vals, vals[1:]))
        for phi in (0.9, 1.2, math.pi / 2):  # cos(2 phi) < 0: increasing
            vals = [smeared_expected_ratio(phi, s, CFG) for s in sigmas]
            assert all(b > a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("sigma", [0.05, 0.2131, 0.6])
    def test_quadrature_oracle(self, sigma):
        for phi in CFG.angles:
            assert smeared_expected_ratio(phi, sigma, CFG) == pytest.approx(
                oracles.smeared_mc_expectation(phi, sigma, CFG), abs=1e-6
            )

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            smeared_expected_ratio(0.3, -0.1, CFG)


class TestSigmaStar:
    def test_replication_value(self):
        assert sigma_star(0.93111, CFG) == pytest.approx(0.2131, abs=1e-3)

    def test_reported_f2_value(self):
        assert sigma_star(0.9222, CFG) == pytest.approx(0.2015, abs=5e-4)

    def test_unity_ratio_gives_zero(self):
        f2_exact = qm_amplitude(CFG) / collapse_amplitude(CFG)
        assert sigma_star(f2_exact, CFG) == 0.0

    def test_amplitude_matching_identity(self):
        for f2 in (0.9222, 0.93111, matched_f2(CFG)):
            s = sigma_star(f2, CFG)
            lhs = f2 * collapse_amplitude(CFG) * math.exp(-2 * s * s)
            assert lhs == pytest.approx(qm_amplitude(CFG), rel=1e-12)

    def test_infeasible_ratio_above_one(self):
        # f2 small enough that even undamped modulation cannot reach the QM amplitude
        with pytest.raises(InfeasibleFitError):
            sigma_star(0.5, CFG)

    def test_infeasible_nonpositive_f2(self):
        with pytest.raises(InfeasibleFitError):
            sigma_star(0.0, CFG)

    def test_matched_f2_matches_constant(self):
        assert matched_f2(CFG) * collapse_constant(CFG) == pytest.approx(qm_constant(CFG), rel=1e-12)
        # under max-probability normalization this is exactly e1_par*e2_par
        assert matched_f2(CFG) == pytest.approx(0.97 * 0.96, rel=1e-12)
