"""Esscher martingales: closed forms, unit mean, filtered projections, dynamics."""

import numpy as np
import pytest

from randmix.errors import AdmissibilityError, DomainError
from randmix.esscher import (
    MarketState,
    MartingaleSpec,
    filtered_dynamics_coefficients,
    filtered_m_matrix,
    filtered_m_tu,
    m_tu,
)
from randmix.filtering import BrownianLinearInfo, posterior_brownian_linear
from randmix.mixers import (
    BinaryExpDecay,
    DiscretePrior,
    ExpDecay,
    GaussBump,
    UniformPrior,
)
from randmix.processes import (
    BrownianParams,
    CompoundPoissonParams,
    GammaCPParams,
    GammaParams,
    VGParams,
)
from randmix.rng import RngStream
from randmix.simulation import sample_states

BROWNIAN_M_EXAMPLE = 1.4549914146182013  # exp(0.5*1 - 0.125)

INFO = BrownianLinearInfo(sigma=0.1)
FOUR_POINT = DiscretePrior(np.array([2.0, 5.0, 10.0, 20.0]), np.array([0.2, 0.35, 0.35, 0.1]))

SPEC_BROWNIAN = MartingaleSpec(BrownianParams(), ExpDecay(0.5), UniformPrior(0.0, 0.1), INFO)
SPEC_GAMMA = MartingaleSpec(GammaParams(0.5, 0.5), BinaryExpDecay(-2.0, 0.03), DiscretePrior.binary(0.65), INFO)
SPEC_PAIR = MartingaleSpec(
    GammaCPParams(GammaParams(0.5, 0.5), CompoundPoissonParams(2.0, 0.1, 0.2)),
    BinaryExpDecay(-2.0, 0.03),
    DiscretePrior.binary(0.5),
    INFO,
    mixer2=BinaryExpDecay(0.5, 0.05),
)
SPEC_VG = MartingaleSpec(VGParams(-1.5, 2.0, 0.25), GaussBump(0.5, 0.015), FOUR_POINT, INFO)
ALL_SPECS = [SPEC_BROWNIAN, SPEC_GAMMA, SPEC_PAIR, SPEC_VG]


def binary_gamma_mhat_closed_form(m, kappa, c, b, p1, sigma, gamma_t, i_t, t, u):
    """Independent oracle: two-state gamma model via explicit posterior and powers."""
    w1 = p1 * np.exp(sigma * i_t - 0.5 * sigma**2 * t)
    f1 = w1 / ((1.0 - p1) + w1)
    h0 = c * np.exp(-b * u)
    m0 = (1.0 - kappa * h0) ** (m * t) * np.exp(h0 * gamma_t)
    m1 = (1.0 - kappa * c) ** (m * t) * np.exp(c * gamma_t)
    return (1.0 - f1) * m0 + f1 * m1


class TestMtu:
    def test_identity_at_time_zero(self):
        for driver, h, dv in [
            (BrownianParams(), 0.7, 0.0),
            (GammaParams(0.5, 0.5), -2.0, 0.0),
            (VGParams(-1.5, 2.0, 0.25), 0.3, 0.0),
        ]:
            assert m_tu(driver, h, dv, 0.0) == 1.0

    def test_h_zero_gives_one(self):
        assert m_tu(GammaParams(0.5, 0.5), 0.0, 1.7, 3.0) == 1.0

    def test_brownian_example(self):
        assert abs(m_tu(BrownianParams(), 0.5, 1.0, 1.0) - BROWNIAN_M_EXAMPLE) < 1e-12

    def test_gamma_closed_form(self):
        # (1 - kappa h)^{m t} exp(h gamma_t)
        got = m_tu(GammaParams(0.5, 0.5), -2.0, 0.8, 2.0)
        assert abs(got - 2.0 ** (0.5 * 2.0) * np.exp(-1.6)) < 1e-12

    def test_pair_is_product_of_components(self):
        pair = GammaCPParams(GammaParams(0.5, 0.5), CompoundPoissonParams(2.0, 0.1, 0.2))
        got = m_tu(pair, (-1.0, 0.5), (0.7, 0.3), 2.0)
        want = m_tu(pair.gamma, -1.0, 0.7, 2.0) * m_tu(pair.cp, 0.5, 0.3, 2.0)
        assert abs(got - want) < 1e-12

    def test_positive(self):
        vals = m_tu(BrownianParams(), np.linspace(-2, 2, 41), -3.0, 5.0)
        assert np.all(vals > 0)

    def test_unit_mean_mc(self):
        # E[m_tu] = 1 per driver at fixed h, using exact one-step marginals
        from randmix.simulation import _driver_increment

        cases = [
            (BrownianParams(), 0.5),
            (GammaParams(0.5, 0.5), -2.0),
            (CompoundPoissonParams(2.0, 0.1, 0.2), 0.8),
            (VGParams(-1.5, 2.0, 0.25), 0.3),
        ]
        for i, (driver, h) in enumerate(cases):
            g = RngStream(300 + i).generator()
            l_t = _driver_increment(driver, 3.0, 100_000, g)
            vals = m_tu(driver, h, l_t, 3.0)
            se = vals.std(ddof=1) / np.sqrt(vals.size)
            assert abs(vals.mean() - 1.0) <= 3 * se, f"{type(driver).__name__}: {vals.mean()} +- {se}"


class TestMartingaleSpec:
    def test_rejects_inadmissible(self):
        with pytest.raises(AdmissibilityError) as err:
            MartingaleSpec(GammaParams(0.5, 0.5), BinaryExpDecay(2.0, 0.03), DiscretePrior.binary(0.5), INFO)
        assert err.value.witness is not None

    def test_pair_needs_second_mixer(self):
        pair = GammaCPParams(GammaParams(0.5, 0.5), CompoundPoissonParams(2.0))
        with pytest.raises(DomainError):
            MartingaleSpec(pair, BinaryExpDecay(-2.0, 0.03), DiscretePrior.binary(0.5), INFO)

    def test_gamma_info_needs_positive_support(self):
        from randmix.filtering import GammaNoiseInfo

        with pytest.raises(DomainError, match="support"):
            MartingaleSpec(BrownianParams(), ExpDecay(0.5), DiscretePrior.binary(0.5), GammaNoiseInfo(1.0, 1.0))


class TestFilteredMtu:
    def test_one_at_time_zero(self):
        for spec in ALL_SPECS:
            state = spec.initial_state()
            for u in (0.0, 1.0, 7.5, 30.0):
                assert abs(filtered_m_tu(spec, state, u) - 1.0) < 1e-12

    def test_binary_gamma_closed_form_agreement(self):
        m, kappa, c, b, p1, sigma = 0.5, 0.5, -2.0, 0.03, 0.65, 0.1
        gamma_t, i_t, t = 0.9, 0.4, 2.0
        f = posterior_brownian_linear(DiscretePrior.binary(p1), sigma, i_t, t)
        state = MarketState(t, gamma_t, i_t, f)
        for u in (2.0, 5.0, 17.0, 60.0):
            got = filtered_m_tu(SPEC_GAMMA, state, u)
            want = binary_gamma_mhat_closed_form(m, kappa, c, b, p1, sigma, gamma_t, i_t, t, u)
            assert abs(got - want) < 1e-12 * max(1.0, abs(want))

    def test_positive_and_vectorised(self):
        batch = sample_states(SPEC_VG, 2.0, 50, RngStream(40))
        u = np.linspace(2.0, 40.0, 39)
        m_mat = filtered_m_matrix(SPEC_VG, batch.t, batch.driver, batch.weights, u)
        assert m_mat.shape == (50, 39)
        assert np.all(m_mat > 0)

    @pytest.mark.parametrize("spec_i", range(len(ALL_SPECS)))
    def test_unit_mean_filtered(self, spec_i):
        # E[M_hat_tu] = 1 within 3 SE at (t, u) = (1, 5) and (4, 5), 1e4 paths
        spec = ALL_SPECS[spec_i]
        u = 5.0
        for t in (1.0, 4.0):
            batch = sample_states(spec, t, 10_000, RngStream(50 + spec_i))
            vals = filtered_m_matrix(spec, t, batch.driver, batch.weights, np.array([u]))[:, 0]
            se = vals.std(ddof=1) / np.sqrt(len(vals))
            assert abs(vals.mean() - 1.0) <= 3 * se, f"spec {spec_i} t={t}: {vals.mean()} +- {se}"


class TestDynamicsCoefficients:
    spec = MartingaleSpec(BrownianParams(), ExpDecay(0.5), DiscretePrior.binary(0.5), BrownianLinearInfo(0.4))

    def test_zero_mixer_kills_both(self):
        spec0 = MartingaleSpec(BrownianParams(), ExpDecay(0.0), DiscretePrior.binary(0.5), BrownianLinearInfo(0.4))
        state = sample_states(spec0, 1.0, 1, RngStream(60)).state(0)
        cw, cz = filtered_dynamics_coefficients(spec0, state, 5.0)
        assert cw == 0.0 and abs(cz) < 1e-15

    def test_time_zero_values(self):
        state = self.spec.initial_state()
        cw, cz = filtered_dynamics_coefficients(self.spec, state, 5.0)
        h = 0.5 * np.exp(-5.0 * np.array([0.0, 1.0]))
        assert abs(cw - h.mean()) < 1e-14  # m = 1 at t = 0, equal weights
        v = 0.4 * (np.array([0.0, 1.0]) - 0.5)
        assert abs(cz - v.mean()) < 1e-14  # = 0 by centring

    def test_requires_brownian_driver(self):
        state = sample_states(SPEC_GAMMA, 1.0, 1, RngStream(61)).state(0)
        with pytest.raises(DomainError):
            filtered_dynamics_coefficients(SPEC_GAMMA, state, 5.0)

    def test_regression_recovers_coefficients(self):
        # one-step finite difference of M_hat regressed on (dW, dZ)
        spec = self.spec
        u, t, dt, n = 5.0, 1.0, 1.0 / 500, 40_000
        base = sample_states(spec, t, 1, RngStream(62))
        state = base.state(0)
        cw, cz = filtered_dynamics_coefficients(spec, state, u)
        g = RngStream(63).generator()
        x_bar = float(state.filter.points @ state.filter.weights)
        x_draw = np.where(g.random(n) < state.filter.weights[1], 1.0, 0.0)
        dw = np.sqrt(dt) * g.standard_normal(n)
        db = np.sqrt(dt) * g.standard_normal(n)
        di = 0.4 * x_draw * dt + db
        dz = di - 0.4 * x_bar * dt
        w_new = np.full(n, state.driver_value) + dw
        i_new = state.info_value + di
        from randmix.simulation import _log_prior_weights, _markov_weights

        x_pts, logw0 = _log_prior_weights(spec.prior)
        weights_new = _markov_weights(spec.info, x_pts, logw0, i_new, t + dt)
        m0 = filtered_m_tu(spec, state, u)
        m1 = filtered_m_matrix(spec, t + dt, w_new, weights_new, np.array([u]))[:, 0]
        design = np.column_stack([dw, dz])
        coef, *_ = np.linalg.lstsq(design, m1 - m0, rcond=None)
        assert abs(coef[0] - cw) < 0.1 * abs(cw), f"dW loading {coef[0]} vs {cw}"
        assert abs(coef[1] - cz) < 0.1 * abs(cz), f"dZ loading {coef[1]} vs {cz}"
