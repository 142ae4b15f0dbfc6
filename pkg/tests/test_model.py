"""Oracle tests for model primitives.

Expected values are frozen from closed forms derived by hand, never from the
code under test: midpoint-rule moments of Unif(-h, h), the two-point skewed
rule's moments, and the piecewise antiderivative of the clamped competition
CDF that underlies the auction reward.
"""
from __future__ import annotations

import numpy as np
import pytest

from jumplimit.errors import ConfigurationError
from jumplimit.model import (
    AuctionParams,
    ControlGrid,
    Domain,
    aggregate_drift,
    aggregate_third_moment,
    aggregate_volatility,
    auction_reward,
    make_auction_model,
    make_bump_model,
    make_coefficient,
    make_control_grid,
    make_reward,
    make_two_point_quadrature,
    make_uniform_quadrature,
    validate_model,
)


# ---------------------------------------------------------------------------
# quadratures


def test_uniform_quadrature_two_nodes_exact():
    q = make_uniform_quadrature(0.1, 2)
    assert q.nodes.tolist() == [-0.05, 0.05]
    assert q.weights.tolist() == [0.5, 0.5]


def test_uniform_quadrature_first_moment_is_exactly_zero():
    for n in (2, 3, 7, 40, 41, 100):
        q = make_uniform_quadrature(0.1, n)
        assert q.moment(1) == 0.0


def test_uniform_quadrature_second_moment_closed_form():
    # midpoint rule on Unif(-h, h): sum w e^2 = h^2 (1 - 1/n^2) / 3
    q = make_uniform_quadrature(0.1, 40)
    exact = 0.01 * (1.0 - 1.0 / 1600.0) / 3.0
    assert q.moment(2) == pytest.approx(exact, rel=1e-12)
    assert q.moment(2) == pytest.approx(0.01 / 3.0, abs=1e-4)


def test_uniform_quadrature_weights_sum_to_one():
    rng = np.random.default_rng(7)
    for _ in range(50):
        h = float(rng.uniform(0.01, 2.0))
        n = int(rng.integers(1, 200))
        q = make_uniform_quadrature(h, n)
        assert abs(q.weights.sum() - 1.0) <= 1e-12
        assert np.all(np.diff(q.nodes) > 0) or n == 1
        assert q.moment(1) == 0.0


def test_two_point_quadrature_moments():
    q = make_two_point_quadrature(0.1)
    assert q.nodes.tolist() == [-0.1, 0.2]
    assert q.moment(1) == 0.0
    assert q.moment(2) == pytest.approx(0.02, rel=1e-12)
    # third moment 2 c^3, the skew that drives the first-order correction
    assert q.moment(3) == pytest.approx(2e-3, rel=1e-12)


def test_quadrature_rejects_bad_inputs():
    with pytest.raises(ConfigurationError):
        make_uniform_quadrature(-0.1, 4)
    with pytest.raises(ConfigurationError):
        make_uniform_quadrature(0.1, 0)
    with pytest.raises(ConfigurationError):
        make_two_point_quadrature(0.0)


# ---------------------------------------------------------------------------
# auction reward
#
# With competition ~ Unif(lo, hi), F(b) clamped to [0, 1] and 0 below lo, the
# running integral H(y) = int_lo^y F is
#   H(y) = 0                        y <= lo
#        = (y - lo)^2 / (2 (hi-lo)) lo <= y <= hi
#        = (hi - lo)/2 + (y - hi)   y >= hi
# and r(x, a) = 1_{a >= x} [ (v - a) F(a) + H(a) - H(x) ].


PARAMS = AuctionParams()


def test_reward_zero_when_bidding_below_state():
    assert auction_reward(PARAMS, 0.4, 0.2) == 0.0
    assert auction_reward(PARAMS, 1.0, 0.0) == 0.0


def test_reward_frozen_values():
    # (v - 0.3)*1 + H(0.3) - H(0) = 0.2 + 0.15
    assert auction_reward(PARAMS, 0.0, 0.3) == pytest.approx(0.35, rel=1e-12)
    # constant in a above the competition support when x <= 0
    assert auction_reward(PARAMS, 0.0, 0.5) == pytest.approx(0.35, rel=1e-12)
    assert auction_reward(PARAMS, 0.0, 3.0) == pytest.approx(0.35, rel=1e-12)
    # H(0.15) = 0.15^2 / 0.6 = 0.0375
    assert auction_reward(PARAMS, 0.15, 0.3) == pytest.approx(0.3125, rel=1e-12)
    # interior bid below hi: (0.5-0.2)*(2/3) + (0.2^2 - 0.15^2)/0.6
    expected = 0.3 * (0.2 / 0.3) + (0.04 - 0.0225) / 0.6
    assert auction_reward(PARAMS, 0.15, 0.2) == pytest.approx(expected, rel=1e-12)
    # above the item value the payoff goes negative: 0.5 - a + (a - 0.3) - H(0.7)
    assert auction_reward(PARAMS, 0.7, 0.8) == pytest.approx(-0.2, rel=1e-12)


def test_reward_monotone_in_bid_below_competition_ceiling():
    a = np.linspace(0.0, PARAMS.comp_hi, 31)
    r = auction_reward(PARAMS, 0.0, a)
    assert np.all(np.diff(r) >= -1e-15)


def test_reward_vectorized_matches_scalar():
    x = np.linspace(-0.5, 3.0, 23)
    a = np.linspace(0.0, 3.0, 17)
    grid = auction_reward(PARAMS, x[:, None], a[None, :])
    for i in range(x.size):
        for j in range(a.size):
            assert grid[i, j] == auction_reward(PARAMS, float(x[i]), float(a[j]))


# ---------------------------------------------------------------------------
# aggregated coefficients


def test_aggregate_drift_auction_frozen():
    model = make_auction_model()
    # kappa a + (1-kappa) r0 - x with kappa = 0.5, r0 = 0.15
    assert aggregate_drift(model, 0.15, 0.15) == 0.0
    assert aggregate_drift(model, 0.0, 0.3) == pytest.approx(0.225, rel=1e-12)


def test_aggregate_drift_zero_fixture():
    model = make_auction_model(dynamics_scale=0.0)
    x = np.linspace(-0.5, 3.0, 11)
    assert np.all(aggregate_drift(model, x, 0.7) == 0.0)


def test_aggregate_volatility_auction():
    model = make_auction_model()
    exact = np.sqrt(0.01 * (1.0 - 1.0 / 41**2) / 3.0)
    got = aggregate_volatility(model, 0.3, 1.2)
    assert got == pytest.approx(exact, rel=1e-12)
    assert got == pytest.approx(np.sqrt(0.01 / 3.0), abs=1e-3)
    # noise coefficient ignores (x, a): volatility is flat across the grid
    x = np.linspace(-0.5, 3.0, 9)
    a = np.linspace(0.0, 3.0, 9)
    vol = aggregate_volatility(model, x[:, None], a[None, :])
    assert float(vol.max() - vol.min()) == 0.0


def test_aggregate_volatility_single_pair_is_exact():
    model = make_auction_model(noise_half_width=0.1, noise_nodes=2)
    # two nodes at +-0.05: sqrt(mean of squares) == 0.05 bit-exactly
    assert aggregate_volatility(model, 0.0, 0.0) == 0.05


def test_two_point_model_third_moment():
    model = make_bump_model(skew=0.2)
    assert aggregate_third_moment(model, 0.0, 0.5) == pytest.approx(
        2 * 0.2**3, rel=1e-12
    )


def test_symmetric_model_third_moment_exactly_zero():
    model = make_auction_model()
    assert aggregate_third_moment(model, 0.4, 1.0) == 0.0


# ---------------------------------------------------------------------------
# control grid, domain, model assembly


def test_auction_control_grid():
    model = make_auction_model()
    vals = model.controls.values
    assert vals.size == 301
    assert vals[0] == 0.0
    assert vals[-1] == pytest.approx(3.0, abs=1e-12)
    assert np.all(np.diff(vals) > 0)


def test_control_grid_rejects_nonincreasing():
    with pytest.raises(ConfigurationError):
        ControlGrid(np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ConfigurationError):
        make_control_grid(0.0, -0.1, 5)


def test_domain_validation():
    with pytest.raises(ConfigurationError):
        Domain(1.0, -1.0, 1.0)
    with pytest.raises(ConfigurationError):
        Domain(-1.0, 1.0, 0.0)


def test_auction_model_coefficients():
    model = make_auction_model()
    e = model.quadrature.nodes
    assert np.all(model.noise.fn(0.3, 1.0, e) == e)
    assert np.all(model.drift.fn(0.15, 0.15, e) == 0.0)
    assert model.domain.x_lo == -0.5 and model.domain.x_hi == 3.0
    assert model.domain.horizon == 1.0


# ---------------------------------------------------------------------------
# validation report


def test_validate_auction_model_clean():
    report = validate_model(make_auction_model())
    assert report.ok
    assert report.violations == []
    assert report.centering_defect == 0.0
    assert report.ellipticity == pytest.approx(
        0.01 * (1.0 - 1.0 / 41**2) / 3.0, rel=1e-12
    )
    assert report.sigma_control_independent
    # |r| peaks when bidding the top control at reserve >= comp_hi: |v - 3.0|
    assert report.sup_reward == pytest.approx(2.5, rel=1e-10)


def test_validate_flags_centering_violation():
    model = make_auction_model()
    shifted = make_coefficient("shifted_noise", offset=0.01)
    bad = model.replace(noise=shifted)
    report = validate_model(bad)
    assert not report.ok
    assert any("centering" in v for v in report.violations)
    assert report.centering_defect == pytest.approx(0.01, rel=1e-12)


def test_validate_flags_degenerate_noise():
    model = make_auction_model(dynamics_scale=0.0)
    report = validate_model(model)
    assert any("ellipticity" in v for v in report.violations)
    assert report.ellipticity == 0.0


def test_validate_reports_finite_violation():
    model = make_auction_model()
    bad_reward = make_reward(
        "custom", fn=lambda x, a: np.where(np.asarray(a) > 2.0, np.inf, 0.1)
    )
    report = validate_model(model.replace(reward=bad_reward))
    assert any("finite" in v for v in report.violations)


def test_bump_model_is_clean_and_control_dependent_reward():
    model = make_bump_model()
    report = validate_model(model)
    assert report.ok
    r_mid = model.reward.fn(0.0, 0.5)
    r_off = model.reward.fn(0.0, 0.0)
    assert r_mid > r_off
