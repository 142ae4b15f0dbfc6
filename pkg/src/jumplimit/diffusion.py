"""Limit equation of the small-jump control problem, plus its correction.

One jitted backward step serves three jobs: the nonlinear solve (max over
the full control grid), policy re-extraction (a zero-length step), and the
linear correction equation (max restricted to the near-argmax mask, reward
swapped for the skewness source). Sharing the step keeps the three exactly
consistent, which the tests pin down to bit equality.

Scheme: explicit Euler in time, upwind first difference picked by the sign
of the drift, centered second difference, value pinned to 0 on both edges
and at the horizon. Monotone iff dt (sig2/dx^2 + |mu|/dx) <= 1; the driver
refuses to run otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigurationError, NumericalError, StabilityError
from .meshes import DiffusionMeshes, SpaceMesh, TimeMesh, default_diffusion_meshes
from .model import (
    ControlGrid,
    ModelSpec,
    aggregate_drift,
    aggregate_volatility,
    reward_on_grid,
)
from .surfaces import PolicySurface, ValueSurface

# rows evaluated per coefficient call when tabulating jump data
_CHUNK_ROWS = 512


@njit(cache=True)
def _hjb_step(v, mu, r, src, half_sig2, mask, dt, dx, out_v, out_m):
    """One backward step of the upwind scheme.

    Maximization runs over the controls with mask[i, m] != 0. The source
    column enters the hamiltonian after the reward, left associated, so a
    run with r = 0 and src = r-column reproduces a run with the reward in
    its usual slot bit for bit. dt = 0 leaves values alone but still
    records the argmax row.
    """
    n_x, n_a = r.shape
    for i in range(n_x):
        fwd = 0.0
        bwd = 0.0
        interior = 0 < i < n_x - 1
        if interior:
            fwd = (v[i + 1] - v[i]) / dx
            bwd = (v[i] - v[i - 1]) / dx
        best = -np.inf
        best_m = 0
        for m in range(n_a):
            if mask[i, m] == 0:
                continue
            if interior:
                if mu[i, m] >= 0.0:
                    d = fwd
                else:
                    d = bwd
                ham = mu[i, m] * d + r[i, m] + src[i]
            else:
                ham = r[i, m] + src[i]
            if ham > best:
                best = ham
                best_m = m
        out_m[i] = best_m
        if interior:
            lap = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dx * dx)
            out_v[i] = v[i] + dt * (best + half_sig2[i] * lap)
        else:
            out_v[i] = 0.0


@njit(cache=True)
def _argmax_mask(v, mu, r, dx, tol, out):
    """Flag every control within tol of the row-best hamiltonian on v.

    Same hamiltonian arithmetic as _hjb_step with a zero source, so the
    strict argmax the solver recorded is always flagged.
    """
    n_x, n_a = r.shape
    row = np.empty(n_a)
    for i in range(n_x):
        fwd = 0.0
        bwd = 0.0
        interior = 0 < i < n_x - 1
        if interior:
            fwd = (v[i + 1] - v[i]) / dx
            bwd = (v[i] - v[i - 1]) / dx
        top = -np.inf
        for m in range(n_a):
            if interior:
                if mu[i, m] >= 0.0:
                    d = fwd
                else:
                    d = bwd
                ham = mu[i, m] * d + r[i, m]
            else:
                ham = r[i, m]
            row[m] = ham
            if ham > top:
                top = ham
        hi = abs(top)
        if hi < 1.0:
            hi = 1.0
        cut = top - tol * hi
        for m in range(n_a):
            out[i, m] = 1 if row[m] >= cut else 0


def _drift_grid(model: ModelSpec, space: SpaceMesh) -> np.ndarray:
    shape = (space.n, model.controls.n_controls)
    mu = np.asarray(
        aggregate_drift(model, space.nodes[:, None], model.controls.values[None, :]),
        dtype=float,
    )
    return np.ascontiguousarray(np.broadcast_to(mu, shape))


def _diffusion_grids(model: ModelSpec, space: SpaceMesh):
    """Drift grid and half the diffusion coefficient column.

    The limit equation only makes sense when the noise second moment does
    not depend on the control; anything else is a configuration error, not
    a numerical issue.
    """
    shape = (space.n, model.controls.n_controls)
    mu = _drift_grid(model, space)
    vol = np.asarray(
        aggregate_volatility(model, space.nodes[:, None], model.controls.values[None, :]),
        dtype=float,
    )
    sig2 = np.broadcast_to(vol, shape) ** 2
    top = float(sig2.max())
    if float(np.ptp(sig2, axis=1).max()) > 1e-9 * max(1.0, top):
        raise ConfigurationError(
            "noise second moment varies with the control; the limit equation "
            "needs sigma^2 to depend on the state only"
        )
    half_sig2 = np.ascontiguousarray(0.5 * sig2[:, 0])
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(half_sig2))):
        raise NumericalError("drift or volatility is not finite on the space grid")
    return mu, half_sig2


def _backward(space, times, mu, half_sig2, r_of, src_of, mask_of):
    """Run the scheme from the horizon down to t = 0.

    r_of/src_of/mask_of take the index of the slice being written; the data
    they return belongs to the slice one step later (explicit scheme), and
    the terminal call reuses the terminal slice itself.
    """
    steps = np.diff(times)
    dx = space.dx
    rate = 2.0 * float(half_sig2.max()) / (dx * dx) + float(np.abs(mu).max()) / dx
    if steps.size and float(steps.max()) * rate > 1.0 + 1e-12:
        raise StabilityError(
            "explicit scheme unstable: dt (sig2/dx^2 + |mu|/dx) = "
            f"{float(steps.max()) * rate:.6g} exceeds 1; shrink dt or coarsen dx"
        )
    n_t = steps.size
    values = np.zeros((n_t + 1, space.n))
    indices = np.zeros((n_t + 1, space.n), dtype=np.int64)
    scratch = np.empty(space.n)
    # dt = 0: terminal values stay zero, terminal argmax row gets recorded
    _hjb_step(values[n_t], mu, r_of(n_t), src_of(n_t), half_sig2, mask_of(n_t),
              0.0, dx, scratch, indices[n_t])
    v = values[n_t]
    for n in range(n_t - 1, -1, -1):
        _hjb_step(v, mu, r_of(n), src_of(n), half_sig2, mask_of(n),
                  float(steps[n]), dx, values[n], indices[n])
        v = values[n]
        if not np.all(np.isfinite(v)):
            raise NumericalError(f"value blew up at time index {n}")
    return values, indices


def solve_diffusion_hjb(
    model: ModelSpec,
    meshes: DiffusionMeshes | tuple[SpaceMesh, TimeMesh] | None = None,
    dx: float = 1e-2,
    dt: float | None = None,
):
    """Value and argmax policy of the limit equation.

    Returns (ValueSurface, PolicySurface) on the diffusion meshes (dx with
    dt = dx^2 unless overridden). Ties in the maximization resolve to the
    smallest control, matching the chain solver.
    """
    if meshes is None:
        meshes = default_diffusion_meshes(model.domain, dx=dx, dt=dt)
    space, time = meshes
    mu, half_sig2 = _diffusion_grids(model, space)
    r = reward_on_grid(model, space)
    if not np.all(np.isfinite(r)):
        raise NumericalError("reward is not finite on the space grid")
    mask = np.ones(r.shape, dtype=np.uint8)
    src = np.zeros(space.n)
    values, indices = _backward(
        space, time.times, mu, half_sig2,
        lambda n: r, lambda n: src, lambda n: mask,
    )
    surface = ValueSurface(time.times, space, values, kind="diffusion")
    policy = PolicySurface(time.times, space, indices, model.controls)
    return surface, policy


def extract_limit_policy(model: ModelSpec, surface: ValueSurface) -> PolicySurface:
    """Re-derive the argmax policy from a stored value surface.

    Zero-length steps through the shared kernel, so the result is
    bit-identical to the policy the solve itself recorded.
    """
    space = surface.mesh
    mu, half_sig2 = _diffusion_grids(model, space)
    r = reward_on_grid(model, space)
    mask = np.ones(r.shape, dtype=np.uint8)
    src = np.zeros(space.n)
    n_slices = surface.n_slices
    indices = np.empty((n_slices, space.n), dtype=np.int64)
    scratch = np.empty(space.n)
    for k in range(n_slices):
        v = surface.values[min(k + 1, n_slices - 1)]
        _hjb_step(v, mu, r, src, half_sig2, mask, 0.0, space.dx, scratch, indices[k])
    return PolicySurface(surface.times, space, indices, model.controls)


def stable_time_step(model: ModelSpec, space: SpaceMesh, safety: float = 0.9) -> float:
    """Largest explicit step within `safety` of the stability limit."""
    if not 0.0 < safety <= 1.0:
        raise ConfigurationError(f"safety factor must lie in (0, 1], got {safety}")
    mu, half_sig2 = _diffusion_grids(model, space)
    dx = space.dx
    rate = 2.0 * float(half_sig2.max()) / (dx * dx) + float(np.abs(mu).max()) / dx
    if rate <= 0.0:
        return safety * model.domain.horizon
    return safety / rate


def hamiltonian_feedback(model: ModelSpec, surface: ValueSurface):
    """Feedback rule (t, x) -> control from the limit hamiltonian argmax.

    Unlike the on-grid policy surface, the rule can be queried at any state:
    reward and drift are evaluated exactly at the query point and only the
    value slope comes from the stored surface (centered difference of the
    linear interpolant). Reward structure such as win/lose thresholds in a
    bid therefore stays aligned with the query point instead of snapping to
    the nearest surface node. The volatility term cannot break ties because
    the solver enforces a control-independent noise second moment. Ties go
    to the smallest control.
    """
    times = surface.times
    dx = surface.mesh.dx
    a = model.controls.values

    def _argmax_at(k: int, xq: np.ndarray) -> np.ndarray:
        slope = (surface.interp_x(k, xq + dx) - surface.interp_x(k, xq - dx)) / (2.0 * dx)
        shape = (xq.size, a.size)
        mu = np.broadcast_to(
            np.asarray(aggregate_drift(model, xq[:, None], a[None, :]), dtype=float), shape)
        r = np.broadcast_to(
            np.asarray(model.reward.fn(xq[:, None], a[None, :]), dtype=float), shape)
        return a[np.argmax(mu * slope[:, None] + r, axis=1)]

    def rule(t, x):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        scalar = x.ndim == 0 and t.ndim == 0
        xq, tq = np.broadcast_arrays(np.atleast_1d(x), np.atleast_1d(t))
        ks = np.clip(np.searchsorted(times, tq, side="right") - 1, 0, times.size - 1)
        best = np.empty(xq.size)
        for k in np.unique(ks):
            sel = ks == k
            best[sel] = _argmax_at(int(k), xq[sel])
        return float(best[0]) if scalar else best

    return rule


@dataclass(frozen=True)
class ArgmaxSet:
    """Near-maximizing controls of the limit hamiltonian, slice by slice."""

    surface: ValueSurface
    mu: np.ndarray
    reward: np.ndarray
    tol: float

    def mask(self, k: int) -> np.ndarray:
        """uint8 grid over (node, control); 1 marks a near-maximizer."""
        out = np.empty(self.reward.shape, dtype=np.uint8)
        _argmax_mask(self.surface.values[k], self.mu, self.reward,
                     self.surface.mesh.dx, self.tol, out)
        return out


def extract_argmax_set(model: ModelSpec, surface: ValueSurface, tol: float = 1e-9) -> ArgmaxSet:
    return ArgmaxSet(surface, _drift_grid(model, surface.mesh),
                     reward_on_grid(model, surface.mesh), float(tol))


# ---------------------------------------------------------------------------
# difference stencils, shared by the correction source and the diagnostics


def second_difference(values: np.ndarray, dx: float) -> np.ndarray:
    """Second difference, centered inside, 3-point one-sided at the edges.

    Exact on quadratics everywhere (the one-sided stencil is the centered
    one evaluated off-center, and the second derivative of a quadratic is
    constant).
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 3:
        raise ConfigurationError("second differences need a 1-d slice of >= 3 nodes")
    out = np.empty(v.size)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (dx * dx)
    out[0] = (v[0] - 2.0 * v[1] + v[2]) / (dx * dx)
    out[-1] = (v[-1] - 2.0 * v[-2] + v[-3]) / (dx * dx)
    return out


def third_difference(values: np.ndarray, dx: float) -> np.ndarray:
    """Third difference, exact on cubics (edge rows included).

    Interior: five-point centered. First and last two rows: plain forward
    and backward third differences, whose leading error carries the fourth
    derivative, hence also exact on cubics.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 6:
        raise ConfigurationError("third differences need a 1-d slice of >= 6 nodes")
    h3 = dx * dx * dx
    out = np.empty(v.size)
    out[2:-2] = (v[4:] - 2.0 * v[3:-1] + 2.0 * v[1:-3] - v[:-4]) / (2.0 * h3)
    out[0] = (v[3] - 3.0 * v[2] + 3.0 * v[1] - v[0]) / h3
    out[1] = (v[4] - 3.0 * v[3] + 3.0 * v[2] - v[1]) / h3
    out[-2] = (v[-2] - 3.0 * v[-3] + 3.0 * v[-4] - v[-5]) / h3
    out[-1] = (v[-1] - 3.0 * v[-2] + 3.0 * v[-3] - v[-4]) / h3
    return out


# ---------------------------------------------------------------------------
# first-order correction


@dataclass(frozen=True)
class CorrectionSource:
    """Driving term of the correction equation along the maximizers.

    row(k) = cross * D2 V + (third / 6) * D3 V evaluated on slice k with
    the controls the base policy picked there. `cross` is the noise-law
    integral of drift times noise coefficient, `third` the signed third
    moment of the noise coefficient; both vanish identically (as exact
    zeros) for noise laws symmetric around 0.
    """

    surface: ValueSurface
    policy: PolicySurface
    cross: np.ndarray
    third: np.ndarray
    convention: str = "signed third moment"

    def row(self, k: int) -> np.ndarray:
        v = self.surface.values[k]
        dx = self.surface.mesh.dx
        sel = self.policy.indices[k]
        lanes = np.arange(v.size)
        return (self.cross[lanes, sel] * second_difference(v, dx)
                + self.third[lanes, sel] / 6.0 * third_difference(v, dx))


def correction_source(model: ModelSpec, surface: ValueSurface,
                      policy: PolicySurface) -> CorrectionSource:
    if policy.indices.shape != surface.values.shape:
        raise ConfigurationError("surface and policy grids do not match")
    nodes = surface.mesh.nodes
    a = model.controls.values
    quad = model.quadrature
    n_x, n_a, n_k = nodes.size, a.size, quad.n_nodes
    cross = np.empty((n_x, n_a))
    third = np.empty((n_x, n_a))
    for lo in range(0, n_x, _CHUNK_ROWS):
        hi = min(lo + _CHUNK_ROWS, n_x)
        x = nodes[lo:hi, None, None]
        aa = a[None, :, None]
        full = (hi - lo, n_a, n_k)
        b1 = np.broadcast_to(np.asarray(model.drift.fn(x, aa, quad.nodes), dtype=float), full)
        b2 = np.broadcast_to(np.asarray(model.noise.fn(x, aa, quad.nodes), dtype=float), full)
        cross[lo:hi] = quad.integrate(b1 * b2)
        third[lo:hi] = quad.integrate(b2 * b2 * b2)
    return CorrectionSource(surface, policy, cross, third)


def solve_correction_pde(
    model: ModelSpec,
    base_surface: ValueSurface,
    base_policy: PolicySurface,
    argmax_tol: float = 1e-9,
    source=None,
):
    """First-order correction on the grids of a solved base surface.

    Linear equation: same drift and diffusion, maximization restricted to
    the base hamiltonian's near-argmax set, reward replaced by the
    skewness-driven source (or a caller-supplied one: a callable of the
    slice index or a full (n_times, n_x) array). Returns the correction
    surface and the masked argmax rows it used.
    """
    space = base_surface.mesh
    mu, half_sig2 = _diffusion_grids(model, space)
    amax = extract_argmax_set(model, base_surface, tol=argmax_tol)
    if source is None:
        source = correction_source(model, base_surface, base_policy).row
    elif not callable(source):
        table = np.asarray(source, dtype=float)
        if table.shape != base_surface.values.shape:
            raise ConfigurationError("source table must match the surface grid")
        source = lambda k: table[k]  # noqa: E731

    last = base_surface.n_slices - 1
    zeros_r = np.zeros((space.n, model.controls.n_controls))

    def src_of(n):
        col = np.ascontiguousarray(np.asarray(source(min(n + 1, last)), dtype=float))
        if col.shape != (space.n,):
            raise ConfigurationError("source rows must have one value per node")
        return col

    values, indices = _backward(
        space, base_surface.times, mu, half_sig2,
        lambda n: zeros_r, src_of, lambda n: amax.mask(min(n + 1, last)),
    )
    surface = ValueSurface(base_surface.times, space, values, kind="correction")
    policy = PolicySurface(base_surface.times, space, indices, model.controls)
    return surface, policy


def corrected_value(base: ValueSurface, correction: ValueSurface,
                    epsilon: float, beta: float = 1.0) -> ValueSurface:
    """base + eps^(beta/2) * correction on their common grid."""
    if base.mesh != correction.mesh or not np.array_equal(base.times, correction.times):
        raise ConfigurationError("base and correction surfaces live on different grids")
    bump = epsilon ** (0.5 * beta)
    return ValueSurface(base.times, base.mesh, base.values + bump * correction.values,
                        kind="corrected", epsilon=epsilon)


# ---------------------------------------------------------------------------
# diagnostics: generator mismatch, curvature regularity, rate bound


def taylor_residual(model: ModelSpec, epsilon: float, surface: ValueSurface,
                    time_indices=None) -> np.ndarray:
    """Jump generator minus limit generator, applied to stored slices.

    For each requested slice: (1/eps) * noise-law mean of
    V(x + eps b1 + sqrt(eps) b2) - V(x), with V linearly interpolated and 0
    outside the mesh, minus drift times the centered first difference,
    minus half sig2 times the centered second difference. Edge rows are
    zeroed (no centered stencil there). Shape (n_slices, n_x, n_controls).
    """
    if time_indices is None:
        time_indices = [0]
    space = surface.mesh
    nodes = space.nodes
    a = model.controls.values
    quad = model.quadrature
    n_x, n_a, n_k = space.n, a.size, quad.n_nodes
    shape = (n_x, n_a)

    mu = np.broadcast_to(
        np.asarray(aggregate_drift(model, nodes[:, None], a[None, :]), dtype=float), shape)
    vol = np.broadcast_to(
        np.asarray(aggregate_volatility(model, nodes[:, None], a[None, :]), dtype=float), shape)
    half_sig2 = 0.5 * vol * vol
    root = np.sqrt(epsilon)

    out = np.empty((len(time_indices), n_x, n_a))
    for s, k in enumerate(time_indices):
        v = surface.values[k]
        d1 = np.zeros(n_x)
        d1[1:-1] = (v[2:] - v[:-2]) / (2.0 * space.dx)
        d2 = np.zeros(n_x)
        d2[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (space.dx * space.dx)
        for lo in range(0, n_x, _CHUNK_ROWS):
            hi = min(lo + _CHUNK_ROWS, n_x)
            x = nodes[lo:hi, None, None]
            aa = a[None, :, None]
            full = (hi - lo, n_a, n_k)
            b1 = np.broadcast_to(np.asarray(model.drift.fn(x, aa, quad.nodes), dtype=float), full)
            b2 = np.broadcast_to(np.asarray(model.noise.fn(x, aa, quad.nodes), dtype=float), full)
            y = x + epsilon * b1 + root * b2
            moved = np.interp(y.ravel(), nodes, v, left=0.0, right=0.0).reshape(full)
            jump_part = quad.integrate(moved - v[lo:hi, None, None]) / epsilon
            out[s, lo:hi] = (jump_part - mu[lo:hi] * d1[lo:hi, None]
                             - half_sig2[lo:hi] * d2[lo:hi, None])
        out[s, 0] = 0.0
        out[s, -1] = 0.0
    return out


def estimate_holder_constant(values_slice: np.ndarray, dx: float, beta: float,
                             margin: int = 3) -> float:
    """Empirical Holder-beta modulus of the second difference of a slice.

    Adjacent-node quotient |d2(x_{i+1}) - d2(x_i)| / dx^beta, maximized
    after trimming `margin` nodes from each end: the edge stencils are only
    quadratic-exact and would pollute the quotients.
    """
    v = np.asarray(values_slice, dtype=float)
    if v.ndim != 1 or v.size < 2 * margin + 3:
        raise ConfigurationError(
            f"need at least {2 * margin + 3} nodes to trim {margin} per side")
    d2 = second_difference(v, dx)
    core = d2[margin:v.size - margin]
    return float(np.abs(np.diff(core)).max() / dx**beta)


@dataclass(frozen=True)
class HolderEstimate:
    """Space-regularity data of a solved surface's curvature."""

    beta: float
    constant: float
    curvature_norm: float


def estimate_surface_holder(surface: ValueSurface, beta: float,
                            margin: int = 3) -> HolderEstimate:
    """Holder modulus and sup norm of the second difference, all slices.

    Same adjacent-node quotient as `estimate_holder_constant`, scanned in
    blocks over every stored time slice.
    """
    if not 0.0 < beta <= 1.0:
        raise ConfigurationError(f"beta must lie in (0, 1], got {beta}")
    n = surface.mesh.n
    if n < 2 * margin + 3:
        raise ConfigurationError(
            f"need at least {2 * margin + 3} nodes to trim {margin} per side")
    dx = surface.mesh.dx
    values = surface.values
    worst_gap = worst_m2 = 0.0
    for lo in range(0, values.shape[0], 1024):
        block = values[lo : lo + 1024]
        d2 = (block[:, 2:] - 2.0 * block[:, 1:-1] + block[:, :-2]) / (dx * dx)
        core = d2[:, margin - 1 : n - 1 - margin]
        worst_m2 = max(worst_m2, float(np.abs(core).max()))
        worst_gap = max(worst_gap, float(np.abs(np.diff(core, axis=1)).max()))
    return HolderEstimate(float(beta), worst_gap / dx**beta, worst_m2)


@dataclass(frozen=True)
class ResidualField:
    """Noise-law mean of the generator mismatch on selected slices."""

    times: np.ndarray
    time_indices: np.ndarray
    mesh: SpaceMesh
    controls: ControlGrid
    values: np.ndarray
    epsilon: float


def compute_residual_field(model: ModelSpec, surface: ValueSurface, epsilon: float,
                           time_indices=None) -> ResidualField:
    """`taylor_residual` packaged with its grids for serialization."""
    if time_indices is None:
        time_indices = [0]
    idx = np.asarray(time_indices, dtype=np.int64)
    vals = taylor_residual(model, epsilon, surface, time_indices=list(idx))
    return ResidualField(
        surface.times[idx], idx, surface.mesh, model.controls, vals, float(epsilon)
    )


def _coefficient_sups(model: ModelSpec, nodes: np.ndarray):
    """Sup norms of b1, b2 and of the noise-law integral of b1 b2."""
    a = model.controls.values
    quad = model.quadrature
    n_a, n_k = a.size, quad.n_nodes
    sup_b1 = sup_b2 = sup_cross = 0.0
    for lo in range(0, nodes.size, _CHUNK_ROWS):
        hi = min(lo + _CHUNK_ROWS, nodes.size)
        x = nodes[lo:hi, None, None]
        aa = a[None, :, None]
        full = (hi - lo, n_a, n_k)
        b1 = np.broadcast_to(np.asarray(model.drift.fn(x, aa, quad.nodes), dtype=float), full)
        b2 = np.broadcast_to(np.asarray(model.noise.fn(x, aa, quad.nodes), dtype=float), full)
        sup_b1 = max(sup_b1, float(np.abs(b1).max()))
        sup_b2 = max(sup_b2, float(np.abs(b2).max()))
        sup_cross = max(sup_cross, float(np.abs(quad.integrate(b1 * b2)).max()))
    return sup_b1, sup_b2, sup_cross


@dataclass(frozen=True)
class RateBound:
    """A priori mismatch bound between the chain value and the limit value.

    `constant` multiplies eps^(beta/2) in the per-unit-time generator
    mismatch; `rate` is that product, `value_bound` integrates it over the
    horizon, and `asymptotic` is the vanishing-eps limit of
    value_bound / eps^(beta/2).
    """

    epsilon: float
    beta: float
    holder_constant: float
    curvature_norm: float
    sup_drift: float
    sup_noise: float
    sup_cross: float
    constant: float
    rate: float
    value_bound: float
    asymptotic: float


def compute_rate_bound(
    model: ModelSpec,
    epsilon: float,
    beta: float,
    surface: ValueSurface,
    t: float = 0.0,
    holder_constant: float | None = None,
    margin: int = 3,
) -> RateBound:
    """Assemble the eps^(beta/2) bound from a solved limit surface.

    Curvature and Holder data scan every stored slice (margin nodes
    trimmed); coefficient sups are taken over the surface mesh and the full
    control and noise grids. The integrated bounds scale with the time left
    between `t` and the horizon.
    """
    if not 0.0 < beta <= 1.0:
        raise ConfigurationError(f"beta must lie in (0, 1], got {beta}")
    if not epsilon > 0.0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    horizon = model.domain.horizon
    if not 0.0 <= t <= horizon:
        raise ConfigurationError(f"t must lie in [0, {horizon}], got {t}")
    est = estimate_surface_holder(surface, beta, margin=margin)
    curvature = est.curvature_norm
    if holder_constant is None:
        holder_constant = est.constant
    sup_b1, sup_b2, sup_cross = _coefficient_sups(model, surface.mesh.nodes)

    root = np.sqrt(epsilon)
    step_size = epsilon * sup_b1 + root * sup_b2
    drive = (epsilon ** (1.0 - 0.5 * beta) * sup_b1 * sup_b1
             + 2.0 * epsilon ** (0.5 * (1.0 - beta)) * sup_cross)
    constant = (0.5 * drive * (curvature + holder_constant * step_size**beta)
                + 0.5 * holder_constant * (root * sup_b1 + sup_b2) ** (2.0 + beta))
    rate = constant * epsilon ** (0.5 * beta)
    remaining = horizon - t
    asymptotic = remaining * (0.5 * holder_constant * sup_b2 ** (2.0 + beta)
                              + (sup_cross * curvature if beta == 1.0 else 0.0))
    return RateBound(
        epsilon=epsilon,
        beta=beta,
        holder_constant=float(holder_constant),
        curvature_norm=curvature,
        sup_drift=sup_b1,
        sup_noise=sup_b2,
        sup_cross=sup_cross,
        constant=float(constant),
        rate=float(rate),
        value_bound=float(remaining * rate),
        asymptotic=float(asymptotic),
    )
