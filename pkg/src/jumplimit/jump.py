"""Backward dynamic program for the controlled jump chain.

The chain jumps at rate 1/eps; a jump from x under control a lands at
x + eps*b1(x,a,e) + sqrt(eps)*b2(x,a,e) with e drawn from the model's noise
quadrature, collecting eps*r(x,a) per jump. One explicit backward step of
size dt is

    V_n(x_i) = V_{n+1}(x_i)
             + (dt/eps) max_a [ sum_j p_ij(a) V_{n+1}(x_j) - V_{n+1}(x_i)
                                + eps r(x_i, a) ]

where p_ij(a) splits each jump destination linearly between its two
bracketing mesh nodes. Destinations outside the mesh are absorbed at value
zero and the two edge nodes are pinned to zero, matching the Dirichlet
condition of the limit equation. The update is monotone (hence stable) iff
dt <= eps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigurationError, NumericalError, StabilityError
from .meshes import DEFAULT_NODE_CAP, SpaceMesh, TimeMesh, default_jump_meshes
from .model import ControlGrid, ModelSpec, nearest_control_indices, reward_on_grid
from .surfaces import PolicySurface, ValueSurface

# rows of destination positions evaluated per coefficient call
_CHUNK_ROWS = 512


@dataclass(frozen=True)
class JumpKernel:
    """One-jump transition data on a space mesh.

    positions[i, m, k] is the landing point of a jump from node i under
    control index m with noise node k, measured in grid units
    ((y - x_lo) / dx). Whole numbers sit exactly on nodes; the fractional
    part is the linear weight given to the right bracketing node.
    """

    space: SpaceMesh
    controls: ControlGrid
    weights: np.ndarray
    positions: np.ndarray
    epsilon: float

    def row(self, i: int, m: int):
        """Transition row (node indices, probabilities, absorbed mass)."""
        n = self.space.n
        dense = np.zeros(n)
        absorbed = 0.0
        top = float(n - 1)
        for k in range(self.weights.size):
            p = self.positions[i, m, k]
            wk = self.weights[k]
            if 0.0 <= p <= top:
                j = min(int(p), n - 2)
                th = p - j
                dense[j] += wk * (1.0 - th)
                dense[j + 1] += wk * th
            else:
                absorbed += wk
        idx = np.flatnonzero(dense)
        return idx, dense[idx], float(absorbed)

    def stochasticity_defect(self) -> float:
        """max_{i,m} |row mass + absorbed mass - 1|, computed chunked."""
        pos = self.positions
        n_x, n_a, n_k = pos.shape
        top = float(n_x - 1)
        w = self.weights[None, None, :]
        worst = 0.0
        chunk = max(1, 4_000_000 // max(n_a * n_k, 1))
        for start in range(0, n_x, chunk):
            p = pos[start : start + chunk]
            inside = (p >= 0.0) & (p <= top)
            pc = np.clip(p, 0.0, top)
            j = np.minimum(pc.astype(np.int64), n_x - 2)
            th = pc - j
            mass = np.where(inside, w * (1.0 - th) + w * th, w)
            worst = max(worst, float(np.abs(mass.sum(axis=2) - 1.0).max()))
        return worst


def build_jump_kernel(
    model: ModelSpec,
    epsilon: float,
    space: SpaceMesh,
    chunk_rows: int = _CHUNK_ROWS,
) -> JumpKernel:
    """Tabulate jump destinations for every (node, control, noise node)."""
    if not epsilon > 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    a = model.controls.values
    e = model.quadrature.nodes
    n_x, n_a, n_k = space.n, a.size, e.size
    positions = np.empty((n_x, n_a, n_k))
    root = np.sqrt(epsilon)
    a_bc = a[None, :, None]
    e_bc = e[None, None, :]
    for start in range(0, n_x, chunk_rows):
        stop = min(start + chunk_rows, n_x)
        x_bc = space.nodes[start:stop, None, None]
        shape = (stop - start, n_a, n_k)
        b1 = np.broadcast_to(np.asarray(model.drift.fn(x_bc, a_bc, e_bc), dtype=float), shape)
        b2 = np.broadcast_to(np.asarray(model.noise.fn(x_bc, a_bc, e_bc), dtype=float), shape)
        y = x_bc + epsilon * b1 + root * b2
        positions[start:stop] = (y - space.x_lo) / space.dx
    if not np.all(np.isfinite(positions)):
        raise NumericalError("jump destinations are not finite; check the coefficients")
    return JumpKernel(
        space, model.controls, model.quadrature.weights.copy(), positions, float(epsilon)
    )


@njit(cache=True)
def _chain_step(pos, w, eps_r, q, v, out_v, out_m):  # pragma: no cover - jitted
    n_x, n_a, n_k = pos.shape
    top = float(n_x - 1)
    for i in range(n_x):
        best = -np.inf
        best_m = 0
        for m in range(n_a):
            acc = 0.0
            for k in range(n_k):
                p = pos[i, m, k]
                if p >= 0.0 and p <= top:
                    j = int(p)
                    if j > n_x - 2:
                        j = n_x - 2
                    th = p - j
                    acc += w[k] * ((1.0 - th) * v[j] + th * v[j + 1])
            gain = acc - v[i] + eps_r[i, m]
            if gain > best:
                best = gain
                best_m = m
        out_v[i] = v[i] + q * best
        out_m[i] = best_m


@njit(cache=True)
def _chain_step_fixed(pos, w, eps_r, q, v, m_row, out_v):  # pragma: no cover - jitted
    n_x, n_a, n_k = pos.shape
    top = float(n_x - 1)
    for i in range(n_x):
        m = m_row[i]
        acc = 0.0
        for k in range(n_k):
            p = pos[i, m, k]
            if p >= 0.0 and p <= top:
                j = int(p)
                if j > n_x - 2:
                    j = n_x - 2
                th = p - j
                acc += w[k] * ((1.0 - th) * v[j] + th * v[j + 1])
        out_v[i] = v[i] + q * (acc - v[i] + eps_r[i, m])


def apply_jump_step(kernel: JumpKernel, values, eps_reward, q: float):
    """One backward update; q = dt/eps. Returns (new values, argmax indices)."""
    if not 0.0 < q <= 1.0 + 1e-12:
        raise StabilityError(f"step ratio dt/epsilon must lie in (0, 1], got {q:.17g}")
    v = np.ascontiguousarray(values, dtype=np.float64)
    eps_r = np.ascontiguousarray(eps_reward, dtype=np.float64)
    n_x = kernel.space.n
    if v.shape != (n_x,) or eps_r.shape != (n_x, kernel.controls.n_controls):
        raise ConfigurationError("values/reward shapes do not match the kernel grids")
    out_v = np.empty(n_x)
    out_m = np.empty(n_x, dtype=np.int64)
    _chain_step(kernel.positions, kernel.weights, eps_r, float(q), v, out_v, out_m)
    out_v[0] = 0.0
    out_v[-1] = 0.0
    return out_v, out_m


def _check_time_step(time: TimeMesh, epsilon: float) -> np.ndarray:
    steps = time.step_sizes()
    worst = float(steps.max())
    if worst > epsilon * (1.0 + 1e-12):
        raise StabilityError(
            f"chain update needs dt <= epsilon, got dt={worst:.17g} vs epsilon={epsilon:.17g}"
        )
    return steps


def solve_jump_hjb(
    model: ModelSpec,
    epsilon: float,
    meshes: tuple[SpaceMesh, TimeMesh] | None = None,
    node_cap: int = DEFAULT_NODE_CAP,
    kernel: JumpKernel | None = None,
):
    """Value and argmax policy of the jump chain, backward in time.

    Returns (ValueSurface, PolicySurface) on the jump meshes (the scaling
    defaults unless `meshes` is given). The terminal policy row is the myopic
    reward argmax; ties always resolve to the smallest control.
    """
    if meshes is None:
        space, time = default_jump_meshes(model.domain, epsilon, node_cap=node_cap)
    else:
        space, time = meshes
    steps = _check_time_step(time, epsilon)
    eps_r = epsilon * reward_on_grid(model, space)
    if not np.all(np.isfinite(eps_r)):
        raise NumericalError("reward is not finite on the space grid")
    if kernel is None:
        kernel = build_jump_kernel(model, epsilon, space)
    n_t = time.n_steps
    values = np.zeros((n_t + 1, space.n))
    indices = np.zeros((n_t + 1, space.n), dtype=np.int64)
    indices[n_t] = np.argmax(eps_r, axis=1)
    v = values[n_t]
    for n in range(n_t - 1, -1, -1):
        out_v, out_m = apply_jump_step(kernel, v, eps_r, steps[n] / epsilon)
        if not np.all(np.isfinite(out_v)):
            raise NumericalError(f"value blew up at time index {n}")
        values[n] = out_v
        indices[n] = out_m
        v = out_v
    surface = ValueSurface(time.times, space, values, kind="jump", epsilon=float(epsilon))
    policy = PolicySurface(time.times, space, indices, model.controls)
    return surface, policy


def _policy_rows_fn(policy, controls: ControlGrid, space: SpaceMesh):
    """Sample a PolicySurface or feedback callable onto this solver's grids."""
    if isinstance(policy, PolicySurface):
        node_map = np.asarray(policy.mesh.nearest_index(space.nodes))
        ctrl_map = nearest_control_indices(controls, policy.controls.values)

        def rows(t: float) -> np.ndarray:
            kp = int(policy._time_index(t))
            return np.ascontiguousarray(ctrl_map[policy.indices[kp][node_map]])

    elif callable(policy):

        def rows(t: float) -> np.ndarray:
            a = np.asarray(policy(t, space.nodes), dtype=float)
            a = np.broadcast_to(a, space.nodes.shape)
            return np.ascontiguousarray(nearest_control_indices(controls, a))

    else:
        raise ConfigurationError("policy must be a PolicySurface or a callable (t, x) -> control")
    return rows


def evaluate_fixed_policy_on_chain(
    model: ModelSpec,
    epsilon: float,
    policy,
    meshes: tuple[SpaceMesh, TimeMesh] | None = None,
    node_cap: int = DEFAULT_NODE_CAP,
    kernel: JumpKernel | None = None,
) -> ValueSurface:
    """Chain value of a fixed rule, no optimization inside.

    `policy` is a PolicySurface (sampled per step: latest slice at or before
    the step time, nearest mesh node, nearest control value) or a callable
    (t, x) -> control value evaluated on the nodes at each step time.
    """
    if meshes is None:
        space, time = default_jump_meshes(model.domain, epsilon, node_cap=node_cap)
    else:
        space, time = meshes
    steps = _check_time_step(time, epsilon)
    eps_r = epsilon * reward_on_grid(model, space)
    if not np.all(np.isfinite(eps_r)):
        raise NumericalError("reward is not finite on the space grid")
    if kernel is None:
        kernel = build_jump_kernel(model, epsilon, space)
    rows = _policy_rows_fn(policy, model.controls, space)
    n_t = time.n_steps
    values = np.zeros((n_t + 1, space.n))
    v = values[n_t]
    for n in range(n_t - 1, -1, -1):
        m_row = rows(float(time.times[n]))
        out_v = np.empty(space.n)
        _chain_step_fixed(
            kernel.positions, kernel.weights, eps_r, steps[n] / epsilon, v, m_row, out_v
        )
        out_v[0] = 0.0
        out_v[-1] = 0.0
        if not np.all(np.isfinite(out_v)):
            raise NumericalError(f"value blew up at time index {n}")
        values[n] = out_v
        v = out_v
    return ValueSurface(time.times, space, values, kind="jump", epsilon=float(epsilon))
