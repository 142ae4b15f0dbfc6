"""Model primitives for controlled pure-jump processes.

A model bundles the two jump-increment coefficients (a drift-scale part and a
noise-scale part, both functions of state, control, and a noise variable), a
running reward, the discrete quadrature standing in for the noise law, the
admissible control grid, and the space-time domain.

Aggregated coefficients are the quadrature moments of the raw ones: the
effective drift is the weighted mean of the drift coefficient, the effective
volatility the root weighted mean square of the noise coefficient.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError

# standing-assumption thresholds used by validate_model
CENTERING_TOL = 1e-10
ELLIPTICITY_FLOOR = 1e-12


def _int_power(values: np.ndarray, power: int) -> np.ndarray:
    """values**power by repeated multiplication.

    np.power is not sign-antisymmetric in the last ulp for negative bases,
    which would leak 1e-22 residues into odd moments of exactly mirrored node
    sets; plain products negate exactly.
    """
    out = np.ones_like(np.asarray(values, dtype=float))
    for _ in range(power):
        out = out * values
    return out


def _paired_sum(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Sum along `axis` in mirror-paired order.

    Mathematically identical to a plain sum; for integrands that are exact
    floating-point negations under node mirroring (every odd power on the
    symmetric uniform rule) each pair cancels exactly, so odd moments come out
    as exact zeros rather than 1e-19 residues.
    """
    flipped = np.flip(values, axis=axis)
    return 0.5 * np.sum(values + flipped, axis=axis)


@dataclass(frozen=True)
class NoiseQuadrature:
    """Discrete stand-in for the noise law: nodes and probability weights."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise ConfigurationError("quadrature nodes/weights must be matching 1-d arrays")
        if nodes.size > 1 and not np.all(np.diff(nodes) > 0):
            raise ConfigurationError("quadrature nodes must be strictly increasing")
        if np.any(weights < 0):
            raise ConfigurationError("quadrature weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigurationError("quadrature weights must sum to 1 within 1e-12")

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray, axis: int = -1) -> np.ndarray:
        """Weighted sum of `values` along the node axis (paired order)."""
        w_shape = [1] * np.ndim(values)
        w_shape[axis] = self.n_nodes
        return _paired_sum(np.asarray(values) * self.weights.reshape(w_shape), axis=axis)

    def moment(self, power: int) -> float:
        return float(self.integrate(_int_power(self.nodes, power)))


def make_uniform_quadrature(half_width: float, n_nodes: int) -> NoiseQuadrature:
    """Midpoint rule for Unif(-half_width, half_width).

    Nodes are built as (2k + 1 - n) * (half_width / n) so the grid is an exact
    floating-point mirror image of itself and the first moment vanishes
    exactly. Second moment is half_width^2 (1 - n^-2) / 3.
    """
    if not half_width > 0:
        raise ConfigurationError(f"half_width must be positive, got {half_width}")
    if n_nodes < 1:
        raise ConfigurationError(f"n_nodes must be >= 1, got {n_nodes}")
    nodes = (2 * np.arange(n_nodes) + 1 - n_nodes) * (half_width / n_nodes)
    weights = np.full(n_nodes, 1.0 / n_nodes)
    return NoiseQuadrature(nodes, weights)


def make_two_point_quadrature(skew: float) -> NoiseQuadrature:
    """Two-point rule {-c w/ mass 2/3, +2c w/ mass 1/3}.

    Centered (exactly, in float64) with second moment 2c^2 and third moment
    2c^3; the nonzero third moment is what exercises the first-order
    correction machinery.
    """
    if not skew > 0:
        raise ConfigurationError(f"skew must be positive, got {skew}")
    nodes = np.array([-skew, 2.0 * skew])
    weights = np.array([2.0 / 3.0, 1.0 / 3.0])
    return NoiseQuadrature(nodes, weights)


@dataclass(frozen=True)
class ControlGrid:
    """Finite, strictly increasing set of admissible control values."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise ConfigurationError("control grid must be a nonempty 1-d array")
        if values.size > 1 and not np.all(np.diff(values) > 0):
            raise ConfigurationError("control values must be strictly increasing")

    @property
    def n_controls(self) -> int:
        return self.values.size


def make_control_grid(lo: float, step: float, count: int) -> ControlGrid:
    if count < 1:
        raise ConfigurationError(f"control count must be >= 1, got {count}")
    if count > 1 and not step > 0:
        raise ConfigurationError(f"control step must be positive, got {step}")
    return ControlGrid(lo + step * np.arange(count))


def nearest_control_indices(grid: ControlGrid, a_vals) -> np.ndarray:
    """Index of the closest control value; ties go to the smaller control."""
    vals = grid.values
    a = np.asarray(a_vals, dtype=float)
    if vals.size == 1:
        return np.zeros(a.shape, dtype=np.int64)
    hi = np.clip(np.searchsorted(vals, a), 1, vals.size - 1)
    lo = hi - 1
    pick_hi = (a - vals[lo]) > (vals[hi] - a)
    return np.where(pick_hi, hi, lo).astype(np.int64)


@dataclass(frozen=True)
class Domain:
    """Open spatial interval and time horizon."""

    x_lo: float
    x_hi: float
    horizon: float

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ConfigurationError(f"need x_lo < x_hi, got [{self.x_lo}, {self.x_hi}]")
        if not self.horizon > 0:
            raise ConfigurationError(f"horizon must be positive, got {self.horizon}")

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo


@dataclass(frozen=True)
class Coefficient:
    """Jump-increment coefficient: callable of (state, control, noise).

    The callable must broadcast over numpy arrays. `family`/`params` keep the
    construction serializable for the named families.
    """

    family: str
    params: dict
    fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def make_coefficient(family: str, fn: Callable | None = None, **params) -> Coefficient:
    if family == "mean_reverting_bid":
        weight = params.setdefault("weight", 0.5)
        anchor = params.setdefault("anchor", 0.15)
        scale = params.setdefault("scale", 1.0)

        def fn(x, a, e, _w=weight, _r=anchor, _s=scale):
            x, a, e = np.broadcast_arrays(x, a, e)
            return _s * (_w * np.asarray(a) + (1.0 - _w) * _r - np.asarray(x))

    elif family == "noise":
        scale = params.setdefault("scale", 1.0)

        def fn(x, a, e, _s=scale):
            x, a, e = np.broadcast_arrays(x, a, e)
            return _s * np.asarray(e, dtype=float)

    elif family == "shifted_noise":
        offset = params.setdefault("offset", 0.0)

        def fn(x, a, e, _o=offset):
            x, a, e = np.broadcast_arrays(x, a, e)
            return np.asarray(e, dtype=float) + _o

    elif family == "constant":
        value = params.setdefault("value", 0.0)

        def fn(x, a, e, _v=value):
            x, a, e = np.broadcast_arrays(x, a, e)
            return np.full(np.shape(x), _v, dtype=float)

    elif family == "zero":

        def fn(x, a, e):
            x, a, e = np.broadcast_arrays(x, a, e)
            return np.zeros(np.shape(x))

    elif family == "custom":
        if fn is None:
            raise ConfigurationError("custom coefficient needs fn")
    else:
        raise ConfigurationError(f"unknown coefficient family {family!r}")
    return Coefficient(family, dict(params), fn)


@dataclass(frozen=True)
class Reward:
    """Running reward r(state, control), broadcastable."""

    family: str
    params: dict
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AuctionParams:
    """Display-auction model parameters.

    The bidder earns `item_value` on winning; the competing bid is uniform on
    (comp_lo, comp_hi). The state is a moving reserve that relaxes toward a
    convex mix of the bid and `anchor`. `dynamics_scale` multiplies both jump
    coefficients (0 freezes the state, handy as a degenerate fixture).
    """

    item_value: float = 0.5
    comp_lo: float = 0.0
    comp_hi: float = 0.3
    anchor: float = 0.15
    weight: float = 0.5
    dynamics_scale: float = 1.0
    noise_half_width: float = 0.1
    noise_nodes: int = 41


def auction_reward(params: AuctionParams, x, a):
    """Expected payoff of bidding `a` at reserve `x`.

    r(x, a) = 1_{a >= x} [ (v - a) F(a) + H(a) - H(x) ] where F is the
    competition CDF clamped to [0, 1] (zero below comp_lo) and H its running
    integral from comp_lo.
    """
    lo, hi, v = params.comp_lo, params.comp_hi, params.item_value
    span = hi - lo
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)

    def cdf(b):
        return np.clip((b - lo) / span, 0.0, 1.0)

    def running_integral(y):
        mid = np.clip(y, lo, hi)
        return (mid - lo) ** 2 / (2.0 * span) + np.maximum(y - hi, 0.0)

    win = (v - a) * cdf(a) + running_integral(a) - running_integral(x)
    out = np.where(a >= x, win, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def make_reward(family: str, fn: Callable | None = None, **params) -> Reward:
    if family == "auction":
        auction = params.get("auction") or AuctionParams(**params)

        def fn(x, a, _p=auction):
            return auction_reward(_p, x, a)

        params = {"auction": auction}
    elif family == "constant":
        value = params.setdefault("value", 0.0)

        def fn(x, a, _v=value):
            x, a = np.broadcast_arrays(x, a)
            return np.full(np.shape(x), _v, dtype=float)

    elif family == "zero":

        def fn(x, a):
            x, a = np.broadcast_arrays(x, a)
            return np.zeros(np.shape(x))

    elif family == "bump":
        height = params.setdefault("height", 0.35)
        width = params.setdefault("width", 0.4)
        penalty = params.setdefault("penalty", 0.35)
        center_control = params.setdefault("center_control", 0.5)

        def fn(x, a, _h=height, _w=width, _p=penalty, _c=center_control):
            x, a = np.broadcast_arrays(x, a)
            x = np.asarray(x, dtype=float)
            a = np.asarray(a, dtype=float)
            return _h * np.exp(-(x**2) / (2.0 * _w**2)) - _p * (a - _c) ** 2

    elif family == "custom":
        if fn is None:
            raise ConfigurationError("custom reward needs fn")
    else:
        raise ConfigurationError(f"unknown reward family {family!r}")
    return Reward(family, dict(params), fn)


@dataclass(frozen=True)
class ModelSpec:
    """Complete problem statement for both solvers and the simulator."""

    name: str
    drift: Coefficient
    noise: Coefficient
    reward: Reward
    quadrature: NoiseQuadrature
    controls: ControlGrid
    domain: Domain

    def replace(self, **changes) -> "ModelSpec":
        return dataclasses.replace(self, **changes)


def make_auction_model(
    domain: Domain | None = None,
    controls: ControlGrid | None = None,
    **param_overrides,
) -> ModelSpec:
    """The display-auction model with its standard grids."""
    params = AuctionParams(**param_overrides)
    drift = make_coefficient(
        "mean_reverting_bid",
        weight=params.weight,
        anchor=params.anchor,
        scale=params.dynamics_scale,
    )
    noise = make_coefficient("noise", scale=params.dynamics_scale)
    reward = make_reward("auction", auction=params)
    quadrature = make_uniform_quadrature(params.noise_half_width, params.noise_nodes)
    if controls is None:
        controls = make_control_grid(0.0, 0.01, 301)
    if domain is None:
        domain = Domain(-0.5, 3.0, 1.0)
    return ModelSpec("auction", drift, noise, reward, quadrature, controls, domain)


def make_bump_model(
    skew: float = 0.2,
    revert_rate: float = 1.0,
    domain: Domain | None = None,
    controls: ControlGrid | None = None,
) -> ModelSpec:
    """Smooth fixture with skewed two-point noise.

    Gaussian-bump reward with a quadratic control penalty (so one interior
    control is strictly optimal everywhere), drift reverting the state to the
    control offset, noise with a genuinely asymmetric law. Everything is
    smooth, which makes it the workhorse for the first-order correction
    studies.
    """

    def drift_fn(x, a, e, _k=revert_rate):
        x, a, e = np.broadcast_arrays(x, a, e)
        return (np.asarray(a) - 0.5) - _k * np.asarray(x)

    drift = Coefficient("custom", {"revert_rate": revert_rate}, drift_fn)
    noise = make_coefficient("noise")
    reward = make_reward("bump")
    quadrature = make_two_point_quadrature(skew)
    if controls is None:
        controls = make_control_grid(0.0, 0.25, 5)
    if domain is None:
        domain = Domain(-1.5, 1.5, 1.0)
    return ModelSpec("bump", drift, noise, reward, quadrature, controls, domain)


# ---------------------------------------------------------------------------
# aggregated coefficients


def reward_on_grid(model: "ModelSpec", space) -> np.ndarray:
    """Reward r(x_i, a_m) tabulated on mesh nodes x control grid."""
    vals = np.asarray(
        model.reward.fn(space.nodes[:, None], model.controls.values[None, :]),
        dtype=float,
    )
    full = (space.n, model.controls.n_controls)
    return np.ascontiguousarray(np.broadcast_to(vals, full))


def _eval_on_nodes(coef: Coefficient, quadrature: NoiseQuadrature, x, a) -> np.ndarray:
    """Evaluate coef(x, a, e_k) with a trailing node axis."""
    x = np.asarray(x, dtype=float)[..., None]
    a = np.asarray(a, dtype=float)[..., None]
    return np.asarray(coef.fn(x, a, quadrature.nodes))


def aggregate_drift(model: ModelSpec, x, a):
    """Quadrature mean of the drift coefficient."""
    vals = _eval_on_nodes(model.drift, model.quadrature, x, a)
    out = model.quadrature.integrate(vals)
    return float(out) if out.ndim == 0 else out


def aggregate_volatility(model: ModelSpec, x, a):
    """Root quadrature mean square of the noise coefficient."""
    vals = _eval_on_nodes(model.noise, model.quadrature, x, a)
    out = np.sqrt(model.quadrature.integrate(vals * vals))
    return float(out) if out.ndim == 0 else out


def aggregate_third_moment(model: ModelSpec, x, a):
    """Signed quadrature third moment of the noise coefficient.

    Signed by design: the absolute-moment variant would not vanish for
    symmetric noise laws, but the correction term it feeds must.
    """
    vals = _eval_on_nodes(model.noise, model.quadrature, x, a)
    out = model.quadrature.integrate(vals * vals * vals)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidationReport:
    """Standing-assumption diagnostics. Violations are reported, never raised."""

    centering_defect: float
    ellipticity: float
    sup_drift: float
    sup_noise: float
    sup_reward: float
    lipschitz_drift: float
    lipschitz_volatility: float
    lipschitz_reward: float
    sigma_control_independent: bool
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_model(model: ModelSpec, n_x_sample: int = 201) -> ValidationReport:
    """Check centering, ellipticity, and finiteness on a sample grid.

    The noise centering must hold at every (x, a) within CENTERING_TOL and the
    squared-noise mass must stay above ELLIPTICITY_FLOOR. All quantities are
    grid estimates over n_x_sample states x the full control grid x all
    quadrature nodes.
    """
    dom = model.domain
    xs = np.linspace(dom.x_lo, dom.x_hi, n_x_sample)
    a = model.controls.values
    dx = xs[1] - xs[0]

    full = (xs.size, a.size, model.quadrature.n_nodes)
    drift_vals = np.broadcast_to(
        _eval_on_nodes(model.drift, model.quadrature, xs[:, None], a[None, :]), full
    )
    noise_vals = np.broadcast_to(
        _eval_on_nodes(model.noise, model.quadrature, xs[:, None], a[None, :]), full
    )
    reward_vals = np.broadcast_to(
        np.asarray(model.reward.fn(xs[:, None], a[None, :])), full[:2]
    )

    violations: list[str] = []
    finite = (
        np.all(np.isfinite(drift_vals))
        and np.all(np.isfinite(noise_vals))
        and np.all(np.isfinite(reward_vals))
    )
    if not finite:
        violations.append("coefficients or reward are not finite on the sample grid")
        drift_vals = np.nan_to_num(drift_vals)
        noise_vals = np.nan_to_num(noise_vals)
        reward_vals = np.nan_to_num(reward_vals)

    quad = model.quadrature
    centering = np.abs(quad.integrate(drift_vals * 0.0 + noise_vals))
    centering_defect = float(centering.max())
    if centering_defect > CENTERING_TOL:
        violations.append(
            f"noise centering defect {centering_defect:.3e} exceeds {CENTERING_TOL:.0e}"
        )

    second = quad.integrate(noise_vals * noise_vals)
    ellipticity = float(second.min())
    if ellipticity < ELLIPTICITY_FLOOR:
        violations.append(
            f"ellipticity {ellipticity:.3e} below floor {ELLIPTICITY_FLOOR:.0e}"
        )

    mu = quad.integrate(drift_vals)
    sigma = np.sqrt(np.maximum(second, 0.0))
    sigma_spread = float((sigma.max(axis=1) - sigma.min(axis=1)).max())
    scale = max(1.0, float(np.abs(sigma).max()))

    def lip(fx):
        return float(np.abs(np.diff(fx, axis=0)).max() / dx)

    return ValidationReport(
        centering_defect=centering_defect,
        ellipticity=ellipticity,
        sup_drift=float(np.abs(drift_vals).max()),
        sup_noise=float(np.abs(noise_vals).max()),
        sup_reward=float(np.abs(reward_vals).max()),
        lipschitz_drift=lip(mu),
        lipschitz_volatility=lip(sigma),
        lipschitz_reward=lip(reward_vals),
        sigma_control_independent=sigma_spread <= 1e-12 * scale,
        violations=violations,
    )
