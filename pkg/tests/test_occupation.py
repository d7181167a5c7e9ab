import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refracted_risk import (
    OccupationQuery,
    RefractedModel,
    bankruptcy_lt_ruin_finite,
    exit_down_U,
    exit_up_U,
    mean_per_unit_time,
    occ_lt_exit_down,
    occ_lt_exit_up,
    occ_lt_reach_up,
    occupation_atom,
    occupation_density,
    prob_bankruptcy,
    prob_parisian,
    refract,
    right_inverse_phi,
    ruin_prob_U,
    ruin_prob_X,
    scale_roots,
    survival_lt,
    total_occupation_lt,
)
from refracted_risk.errors import ModelError, NetProfitError, OrderingError
from refracted_risk.mc_oracle import (
    SimConfig,
    estimate_bankruptcy,
    estimate_occupation_joint,
    estimate_parisian,
    estimate_reach_up,
    estimate_survival_split,
    estimate_total_occupation,
)
from refracted_risk.occupation import (
    large_c_identity_residuals,
    occupation_density_with_error,
    occupation_mass_check,
    total_occupation_lt_direct,
    _TransformParts,
    z_minus_alpha_w_residual,
)

from .conftest import ALL_REFRACTED, BROWNIAN_REFRACTED, CL, CL_REFRACTED, JD_REFRACTED

# 30-digit values from tests/oracles/cl_reference_mpmath.py
ORACLE = {
    "occ_up(0.2,0.5;1.2,0,3)": 0.430554783458186,
    "occ_down(0.2,0.5;1.2,0,3)": 0.2565716227191348,
    "occ_down_plus(0.2,0.5;1.2,0,3)": 3.6266786849920033,
    "survival(0.4,0.8)": 0.28908725664440007,
    "survival(0.2,0.5)": 0.26317504493611678,
    "survival(0.8,1.5)": 0.37429038310070545,
    "total_occ(0.5,1.2)": 0.42912525967742074,
    "parisian(0.2,0.5)": 0.53516419173824859,
    "parisian(0.8,1.5)": 0.5842764676358476,
    "reach_up(0.5;1.2,4)": 0.63676828079123008,
}

MC = SimConfig(n_paths=40_000, horizon=500.0, seed=2024)


def query(rm=CL_REFRACTED, x=1.2, a=0.0, c=3.0, p=0.2, q=0.5):
    return OccupationQuery(rm, x, a, c, p, q)


class TestQuery:
    def test_levels_checked(self):
        with pytest.raises(OrderingError):
            query(x=4.0)
        with pytest.raises(OrderingError):
            query(c=0.5, x=0.3)

    def test_rates_nonnegative(self):
        with pytest.raises(ValueError):
            query(q=-0.1)


class TestTwoSided:
    def test_oracle_values(self):
        assert occ_lt_exit_up(query()) == pytest.approx(ORACLE["occ_up(0.2,0.5;1.2,0,3)"], rel=1e-10)
        assert occ_lt_exit_down(query()) == pytest.approx(ORACLE["occ_down(0.2,0.5;1.2,0,3)"], rel=1e-10)

    def test_rejected_sign_variant(self):
        plus = occ_lt_exit_down(query(), ratio_sign=+1)
        assert plus == pytest.approx(ORACLE["occ_down_plus(0.2,0.5;1.2,0,3)"], rel=1e-10)
        assert plus > 1.0

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_reduces_without_occupation_rate(self, rm):
        c = 3.0 * rm.b
        for p in (0.0, 0.3):
            for x in (0.4 * rm.b, 1.3 * rm.b, 2.5 * rm.b):
                qr = query(rm, x, 0.0, c, p, 0.0)
                assert occ_lt_exit_up(qr) == pytest.approx(exit_up_U(rm, p, x, 0.0, c), abs=1e-10)
                assert occ_lt_exit_down(qr) == pytest.approx(exit_down_U(rm, p, x, 0.0, c), abs=1e-10)

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_boundary_values(self, rm):
        qr = query(rm, 3.0 * rm.b, 0.0, 3.0 * rm.b, 0.2, 0.5)
        assert occ_lt_exit_up(qr) == pytest.approx(1.0, abs=1e-12)
        assert occ_lt_exit_down(qr) == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_occupation_equal_to_killing_below_b(self, rm):
        # with b = c every instant before exit is spent below b: q acts like p
        rm_top = rm.with_threshold(3.0)
        a = occ_lt_exit_up(OccupationQuery(rm_top, 1.0, 0.0, 3.0, 0.1, 0.4))
        b = exit_up_U(rm_top, 0.5, 1.0, 0.0, 3.0)
        assert a == pytest.approx(b, abs=1e-10)

    @given(st.sampled_from(ALL_REFRACTED), st.floats(0.0, 1.5), st.floats(0.0, 2.0), st.floats(0.0, 1.0))
    @settings(max_examples=30, deadline=None)
    def test_bounds_and_monotone_in_q(self, rm, p, q, xf):
        c = 3.0 * rm.b
        x = xf * c
        lo = query(rm, x, 0.0, c, p, q)
        hi = query(rm, x, 0.0, c, p, q + 0.25)
        for f in (occ_lt_exit_up, occ_lt_exit_down):
            v_lo, v_hi = f(lo), f(hi)
            assert -1e-10 <= v_hi <= v_lo + 1e-10 <= 1 + 2e-10

    def test_monte_carlo(self):
        est = estimate_occupation_joint(CL_REFRACTED, 0.2, 0.5, 1.2, 0.0, 3.0, MC)
        assert est["up"].agrees_with(occ_lt_exit_up(query()))
        assert est["down"].agrees_with(occ_lt_exit_down(query()))
        assert not est["down"].agrees_with(occ_lt_exit_down(query(), ratio_sign=+1), n_se=10)


class TestBankruptcy:
    def test_oracle_values(self):
        for (q, x), key in (((0.4, 0.8), "survival(0.4,0.8)"), ((0.2, 0.5), "survival(0.2,0.5)"),
                            ((0.8, 1.5), "survival(0.8,1.5)")):
            assert survival_lt(CL_REFRACTED, x, q) == pytest.approx(ORACLE[key], rel=1e-10)

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_zero_rate(self, rm):
        for x in (0.3 * rm.b, 1.0 * rm.b, 2.0 * rm.b):
            ruin = ruin_prob_U(rm, x)
            assert bankruptcy_lt_ruin_finite(rm, x, 0.0) == pytest.approx(ruin, abs=1e-9)
            assert survival_lt(rm, x, 0.0) == pytest.approx(1 - ruin, abs=1e-9)
            assert prob_bankruptcy(rm, x, 0.0) == pytest.approx(ruin, abs=1e-9)

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_decomposition(self, rm):
        for q in (0.2, 0.8):
            x = 0.6 * rm.b
            finite = bankruptcy_lt_ruin_finite(rm, x, q)
            surv = survival_lt(rm, x, q)
            assert prob_bankruptcy(rm, x, q) == pytest.approx((1 - finite - surv) + finite, abs=1e-12)
            assert 0 <= finite <= 1 and 0 <= surv <= 1 and finite + surv <= 1 + 1e-12

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_far_above_threshold_bounded(self, rm):
        for x in (40.0, 181.0, 400.0):
            surv = survival_lt(rm, x, 0.5)
            finite = bankruptcy_lt_ruin_finite(rm, x, 0.5)
            assert -1e-12 <= finite <= 1e-3
            assert surv == pytest.approx(1.0, abs=1e-3) and surv <= 1 + 1e-12

    def test_ruin_vanishes_far_away(self):
        theta2 = scale_roots(CL, 0.0).roots[1]
        x = CL_REFRACTED.b + 60 / abs(theta2)
        assert bankruptcy_lt_ruin_finite(CL_REFRACTED, x, 0.5) <= 1e-6

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_survival_monotone_in_x(self, rm):
        xs = np.linspace(0, 6 * rm.b, 13)
        vals = [survival_lt(rm, x, 0.5) for x in xs]
        assert np.all(np.diff(vals) >= -1e-12)
        assert vals[-1] <= 1.0

    def test_bankruptcy_exceeds_ruin(self):
        for q in (0.2, 0.8):
            assert prob_bankruptcy(CL_REFRACTED, 1.5, q) >= ruin_prob_U(CL_REFRACTED, 1.5)

    def test_net_profit_required(self):
        with pytest.raises(NetProfitError):
            survival_lt(RefractedModel(CL, 0.6, 1.0), 1.0, 0.3)

    def test_monte_carlo(self):
        x, q = 0.8, 0.4
        split = estimate_survival_split(CL_REFRACTED, x, q, MC)
        assert split["ruin"].agrees_with(bankruptcy_lt_ruin_finite(CL_REFRACTED, x, q))
        assert split["survival"].agrees_with(survival_lt(CL_REFRACTED, x, q))
        assert estimate_bankruptcy(CL_REFRACTED, x, q, MC).agrees_with(prob_bankruptcy(CL_REFRACTED, x, q))


class TestParisian:
    def test_oracle_values(self):
        assert total_occupation_lt(CL_REFRACTED, 1.2, 0.5) == pytest.approx(ORACLE["total_occ(0.5,1.2)"], rel=1e-12)
        assert prob_parisian(CL_REFRACTED, 0.5, 0.2) == pytest.approx(ORACLE["parisian(0.2,0.5)"], rel=1e-12)
        assert prob_parisian(CL_REFRACTED, 1.5, 0.8) == pytest.approx(ORACLE["parisian(0.8,1.5)"], rel=1e-12)
        assert occ_lt_reach_up(CL_REFRACTED, 1.2, 4.0, 0.5) == pytest.approx(ORACLE["reach_up(0.5;1.2,4)"], rel=1e-12)

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_small_rate_limits(self, rm):
        for x in (0.5 * rm.b, 2.0 * rm.b):
            assert occ_lt_reach_up(rm, x, 3 * rm.b, 0.0) == 1.0
            assert total_occupation_lt(rm, x, 1e-12) == pytest.approx(1.0, abs=1e-9)
            assert prob_parisian(rm, x, 1e-12) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_below_threshold_closed_form(self, rm):
        q = 0.7
        phi = right_inverse_phi(rm.x_model, q)
        drift = mean_per_unit_time(rm.x_model) - rm.alpha
        xs = np.linspace(0.0, rm.b, 6)
        vals = [total_occupation_lt(rm, x, q) for x in xs]
        for x, v in zip(xs, vals):
            assert v == pytest.approx(drift * phi / (q - rm.alpha * phi) * math.exp(phi * (x - rm.b)), rel=1e-13)
        assert np.all(np.diff(vals) > 0)

    def test_continuity_at_small_rate(self):
        v1 = total_occupation_lt(CL_REFRACTED, 1.5, 1e-11)
        v2 = total_occupation_lt(CL_REFRACTED, 1.5, 1e-8)
        assert abs(v1 - v2) < 1e-6

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_termwise_form_matches_direct(self, rm):
        for q in (0.2, 1.0):
            for x in (0.3 * rm.b, 1.2 * rm.b, 3.0 * rm.b):
                assert total_occupation_lt(rm, x, q) == pytest.approx(
                    total_occupation_lt_direct(rm, x, q), rel=1e-9, abs=1e-12
                )

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_far_above_threshold(self, rm):
        for x in (40.0, 400.0):
            assert total_occupation_lt(rm, x, 0.5) == pytest.approx(1.0, abs=1e-3)
            assert occ_lt_reach_up(rm, x, x + 3.0, 0.5) == pytest.approx(1.0, abs=1e-3)
        assert total_occupation_lt(rm, 400.0, 0.5) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_monotonicity(self, rm):
        qs = np.linspace(0.05, 4.0, 15)
        by_q = [prob_parisian(rm, 1.2 * rm.b, q) for q in qs]
        assert np.all(np.diff(by_q) >= -1e-12)
        xs = np.linspace(0.0, 5 * rm.b, 15)
        by_x = [prob_parisian(rm, x, 0.5) for x in xs]
        assert np.all(np.diff(by_x) <= 1e-12)
        assert all(0 <= v <= 1 for v in by_q + by_x)

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_no_refraction_reduction(self, rm):
        flat = rm.unrefracted()
        m = rm.x_model
        for q in (0.3, 1.0):
            phi = right_inverse_phi(m, q)
            for x in (0.2, 0.9 * rm.b):
                target = mean_per_unit_time(m) * phi / q * math.exp(phi * (x - rm.b))
                assert total_occupation_lt(flat, x, q) == pytest.approx(target, rel=1e-10)

    def test_reach_up_levels(self):
        with pytest.raises(OrderingError):
            occ_lt_reach_up(CL_REFRACTED, 2.0, 1.5, 0.5)
        assert occ_lt_reach_up(CL_REFRACTED, 4.0, 4.0, 0.5) == pytest.approx(1.0)

    def test_monte_carlo(self):
        x, q = 1.2, 0.5
        par = estimate_parisian(CL_REFRACTED, x, q, MC)
        occ = estimate_total_occupation(CL_REFRACTED, x, q, MC)
        assert par.agrees_with(prob_parisian(CL_REFRACTED, x, q))
        assert occ.agrees_with(total_occupation_lt(CL_REFRACTED, x, q))
        combined = math.hypot(par.std_error, occ.std_error)
        assert abs(par.mean - (1 - occ.mean)) <= 3 * combined
        reach = estimate_reach_up(CL_REFRACTED, x, 4.0, q, MC)
        assert reach.agrees_with(occ_lt_reach_up(CL_REFRACTED, x, 4.0, q))


class TestOccupationLaw:
    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_atom(self, rm):
        assert occupation_atom(rm, 0.5 * rm.b) == 0.0
        assert occupation_atom(rm, 200.0) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_atom_is_survival_of_refracted_drift_process(self, rm):
        y = refract(rm)
        for x in (rm.b, 1.5 * rm.b, 3.0 * rm.b):
            assert occupation_atom(rm, x) == pytest.approx(1 - ruin_prob_X(y, x - rm.b), abs=1e-10)

    def test_brownian_mass(self):
        assert occupation_mass_check(BROWNIAN_REFRACTED, 2.0) == pytest.approx(1.0, abs=1e-6)
        assert occupation_mass_check(BROWNIAN_REFRACTED, 0.4) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("q", [0.5, 1.0])
    @pytest.mark.parametrize("x", [0.4, 2.0])
    def test_brownian_transform(self, q, x):
        assert occupation_mass_check(BROWNIAN_REFRACTED, x, q) == pytest.approx(
            total_occupation_lt(BROWNIAN_REFRACTED, x, q), abs=1e-4)

    def test_density_positive_and_decaying(self):
        rs = [0.1, 1.0, 5.0, 20.0, 60.0]
        dens = [occupation_density(BROWNIAN_REFRACTED, 2.0, r) for r in rs]
        assert all(d >= 0 for d in dens)
        assert dens[-1] < 1e-6

    def test_jump_model_sampled(self):
        d, se = occupation_density_with_error(JD_REFRACTED, 2.5, 1.0, n_samples=50_000, seed=1)
        assert d > 0 and 0 < se < 0.1 * d

    def test_bounded_variation_below_threshold_unsupported(self):
        with pytest.raises(ModelError):
            occupation_density(CL_REFRACTED, 0.5, 1.0)


class TestDiagnostics:
    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_z_minus_alpha_w(self, rm):
        for q in (0.3, 1.5):
            for x in (0.5, 2.0, 4.0):
                assert z_minus_alpha_w_residual(rm, q, x) <= 1e-8

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_expansions_above_threshold(self, rm):
        for q in (0.3, 1.0):
            g, h = large_c_identity_residuals(rm, q, 2.5 * rm.b)
            assert g <= 1e-8 and h <= 1e-8

    @pytest.mark.parametrize("rm", ALL_REFRACTED)
    def test_closed_form_above_threshold_matches_quadrature(self, rm):
        for p, q, a in ((0.0, 0.5, 0.0), (0.2, 0.5, 0.0), (0.0, 2.0, -0.3), (1.0, 0.1, 0.5 * rm.b)):
            parts = _TransformParts(rm, p, q, a)
            for y in (rm.b, rm.b + 0.3, rm.b + 1.5, rm.b + 4.0):
                assert parts._expansion(0, y) == pytest.approx(parts.G_quadrature(y), rel=1e-9)
                assert parts._expansion(1, y) == pytest.approx(parts.H_quadrature(y), rel=1e-9)

    def test_closed_form_without_refraction(self):
        parts = _TransformParts(CL_REFRACTED.unrefracted(), 0.3, 0.6, 0.0)
        for y in (1.0, 2.5, 5.0):
            assert parts._expansion(0, y) == pytest.approx(parts.G_quadrature(y), rel=1e-9)
            assert parts._expansion(1, y) == pytest.approx(parts.H_quadrature(y), rel=1e-9)
