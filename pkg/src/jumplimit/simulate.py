"""Monte Carlo simulation of the jump chain under a fixed feedback rule.

Every path owns a counter-based bit stream: Philox keyed by
SeedSequence(master_seed, spawn_key=(path_index,)). Path i therefore draws
identical numbers whether simulated alone or inside a batch of any size,
and the batched evaluator reproduces single-path simulation bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .model import ModelSpec, nearest_control_indices
from .surfaces import as_control_fn

# inter-arrival gaps are drawn in blocks of this size; the block layout is
# part of the per-seed reproducibility contract
_GAP_BLOCK = 64


def path_rng(master_seed: int, path_index: int) -> np.random.Generator:
    """Dedicated generator of one path."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(path_index,))
    return np.random.Generator(np.random.Philox(seq))


def _draw_jumps(rng, epsilon, horizon, quadrature):
    """Jump times in (0, horizon] plus one noise node index per jump."""
    chunks = []
    base = 0.0
    while True:
        t = base + np.cumsum(rng.exponential(epsilon, _GAP_BLOCK))
        if t[-1] > horizon:
            chunks.append(t[t <= horizon])
            break
        chunks.append(t)
        base = t[-1]
    taus = np.concatenate(chunks)
    if taus.size:
        idx = rng.choice(quadrature.n_nodes, size=taus.size, p=quadrature.weights)
    else:
        idx = np.zeros(0, dtype=np.int64)
    return taus, np.asarray(idx, dtype=np.int64)


@dataclass(frozen=True)
class Trajectory:
    """One chain path, one row per executed jump.

    Recording stops at absorption; the absorbing jump itself is kept (its
    reward counts, its landing point lies outside the open domain).
    """

    epsilon: float
    x0: float
    taus: np.ndarray
    x_pre: np.ndarray
    controls: np.ndarray
    x_post: np.ndarray
    gain_cum: np.ndarray
    absorbed: bool

    @property
    def n_jumps(self) -> int:
        return self.taus.size

    @property
    def gain(self) -> float:
        return float(self.gain_cum[-1]) if self.gain_cum.size else 0.0


@dataclass(frozen=True)
class MCEstimate:
    """Sample mean of the per-path gains with its standard error."""

    mean: float
    stderr: float
    n_paths: int
    gains: np.ndarray


def _check_inputs(model: ModelSpec, epsilon: float, x0: float) -> None:
    if not epsilon > 0.0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    dom = model.domain
    if not dom.x_lo < x0 < dom.x_hi:
        raise ConfigurationError(
            f"start point {x0} must lie inside ({dom.x_lo}, {dom.x_hi})")


def simulate_path(model: ModelSpec, epsilon: float, policy, x0: float,
                  master_seed: int = 0, path_index: int = 0) -> Trajectory:
    """Run one path; jumps collect eps * r(pre-state, control).

    The rule is a PolicySurface (latest grid time at or before the jump,
    nearest node) or a callable (t, x) -> control; either way the control
    snaps to the model's grid before anything is evaluated.
    """
    x0 = float(x0)
    _check_inputs(model, epsilon, x0)
    dom = model.domain
    rng = path_rng(master_seed, path_index)
    taus, noise_idx = _draw_jumps(rng, epsilon, dom.horizon, model.quadrature)
    fn = as_control_fn(policy)
    grid = model.controls
    enodes = model.quadrature.nodes
    root = np.sqrt(epsilon)
    n = taus.size
    x_pre = np.empty(n)
    controls = np.empty(n)
    x_post = np.empty(n)
    gain_cum = np.empty(n)
    x = x0
    gain = 0.0
    used = 0
    absorbed = False
    for j in range(n):
        t = float(taus[j])
        a_idx = int(nearest_control_indices(grid, np.asarray(fn(t, x), dtype=float)))
        a = float(grid.values[a_idx])
        r = float(np.asarray(model.reward.fn(x, a), dtype=float))
        gain = gain + epsilon * r
        e = float(enodes[noise_idx[j]])
        b1 = float(np.asarray(model.drift.fn(x, a, e), dtype=float))
        b2 = float(np.asarray(model.noise.fn(x, a, e), dtype=float))
        x_new = x + epsilon * b1 + root * b2
        x_pre[used] = x
        controls[used] = a
        x_post[used] = x_new
        gain_cum[used] = gain
        used += 1
        if not dom.x_lo < x_new < dom.x_hi:
            absorbed = True
            break
        x = x_new
    return Trajectory(float(epsilon), x0, np.asarray(taus[:used]), x_pre[:used],
                      controls[:used], x_post[:used], gain_cum[:used], absorbed)


def evaluate_policy_mc(model: ModelSpec, epsilon: float, policy, x0: float,
                       n_paths: int, master_seed: int = 0) -> MCEstimate:
    """Monte Carlo value of the rule at x0.

    Paths are stepped in lockstep over the jump index (vectorized over the
    still-alive paths); per-path streams make gains[i] identical to
    simulate_path(..., path_index=i).gain.
    """
    x0 = float(x0)
    _check_inputs(model, epsilon, x0)
    if n_paths < 1:
        raise ConfigurationError(f"need at least 1 path, got {n_paths}")
    dom = model.domain
    quad = model.quadrature
    draws = [
        _draw_jumps(path_rng(master_seed, i), epsilon, dom.horizon, quad)
        for i in range(n_paths)
    ]
    counts = np.array([t.size for t, _ in draws], dtype=np.int64)
    n_max = int(counts.max())
    tau_pad = np.zeros((n_paths, n_max))
    idx_pad = np.zeros((n_paths, n_max), dtype=np.int64)
    for i, (t, k) in enumerate(draws):
        tau_pad[i, : t.size] = t
        idx_pad[i, : k.size] = k

    fn = as_control_fn(policy)
    grid = model.controls
    enodes = quad.nodes
    root = np.sqrt(epsilon)
    x = np.full(n_paths, x0)
    gains = np.zeros(n_paths)
    dead = np.zeros(n_paths, dtype=bool)
    for j in range(n_max):
        act = np.flatnonzero(~dead & (j < counts))
        if act.size == 0:
            break
        t = tau_pad[act, j]
        xs = x[act]
        a_raw = np.broadcast_to(np.asarray(fn(t, xs), dtype=float), xs.shape)
        a = grid.values[nearest_control_indices(grid, a_raw)]
        r = np.broadcast_to(np.asarray(model.reward.fn(xs, a), dtype=float), xs.shape)
        gains[act] = gains[act] + epsilon * r
        e = enodes[idx_pad[act, j]]
        b1 = np.broadcast_to(np.asarray(model.drift.fn(xs, a, e), dtype=float), xs.shape)
        b2 = np.broadcast_to(np.asarray(model.noise.fn(xs, a, e), dtype=float), xs.shape)
        x_new = xs + epsilon * b1 + root * b2
        x[act] = x_new
        dead[act[(x_new <= dom.x_lo) | (x_new >= dom.x_hi)]] = True
    if n_paths == 1:
        stderr = float("nan")
    else:
        stderr = float(gains.std(ddof=1) / np.sqrt(n_paths))
    return MCEstimate(float(gains.mean()), stderr, int(n_paths), gains)
