"""Space and time meshes for both solvers.

Jump-solver meshes follow the coupled law dx = eps^(3/2)/2, dt = dx^(2/3),
so dt/eps == 2^(-2/3) < 1 for every eps and the backward step stays a convex
combination (monotone scheme). Diffusion meshes default to dx = 1e-2 and the
parabolic scaling dt = dx^2; the model-dependent stability guard lives with
the diffusion solver.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ResourceError
from .model import Domain

DEFAULT_NODE_CAP = 2**22
JUMP_STEP_RATIO = 2.0 ** (-2.0 / 3.0)  # dt / eps under the mesh law


@dataclass(frozen=True)
class SpaceMesh:
    """Uniform grid x_lo + k dx, k = 0..n-1."""

    x_lo: float
    dx: float
    n: int

    def __post_init__(self):
        if not self.dx > 0:
            raise ConfigurationError(f"dx must be positive, got {self.dx}")
        if self.n < 2:
            raise ConfigurationError(f"need at least 2 nodes, got {self.n}")

    @property
    def nodes(self) -> np.ndarray:
        return self.x_lo + np.arange(self.n) * self.dx

    @property
    def x_hi(self) -> float:
        return self.x_lo + (self.n - 1) * self.dx

    def nearest_index(self, x) -> np.ndarray | int:
        idx = np.rint((np.asarray(x) - self.x_lo) / self.dx).astype(np.int64)
        idx = np.clip(idx, 0, self.n - 1)
        return int(idx) if idx.ndim == 0 else idx

    def positions(self, y) -> np.ndarray:
        """Grid-unit coordinates (y - x_lo)/dx; integers are nodes."""
        return (np.asarray(y, dtype=float) - self.x_lo) / self.dx


def _cover_cells(width: float, dx: float) -> int:
    """Cells needed for [0, width]: floor with 1e-9 slack, bumped to cover."""
    n_cells = int(np.floor(width / dx + 1e-9))
    if n_cells * dx < width - 1e-9 * dx:
        n_cells += 1
    return n_cells


@dataclass(frozen=True)
class TimeMesh:
    """Backward-recursion time grid 0 = t_0 < ... < t_{n_steps} = horizon.

    All steps equal dt except possibly the last, shortened so the grid lands
    exactly on the horizon.
    """

    horizon: float
    dt: float
    n_steps: int
    times: np.ndarray

    @classmethod
    def from_step(cls, horizon: float, dt: float) -> "TimeMesh":
        if not dt > 0 or not horizon > 0:
            raise ConfigurationError(f"need positive horizon and dt, got {horizon}, {dt}")
        k_full = int(np.floor(horizon / dt + 1e-9))
        k_full = min(k_full, int(np.ceil(horizon / dt)))
        if k_full * dt >= horizon - 1e-9 * dt:
            n_steps = max(k_full, 1)
        else:
            n_steps = k_full + 1
        times = np.minimum(np.arange(n_steps + 1) * dt, horizon)
        times[-1] = horizon
        return cls(horizon, dt, n_steps, times)

    def step_sizes(self) -> np.ndarray:
        return np.diff(self.times)

    def latest_index_at(self, t) -> np.ndarray | int:
        """Index of the latest grid time <= t (clamped)."""
        idx = np.searchsorted(self.times, np.asarray(t), side="right") - 1
        idx = np.clip(idx, 0, self.n_steps)
        return int(idx) if np.ndim(t) == 0 else idx


def default_jump_meshes(
    domain: Domain, epsilon: float, node_cap: int = DEFAULT_NODE_CAP
) -> tuple[SpaceMesh, TimeMesh]:
    """Mesh law dx = eps^(3/2)/2, dt = dx^(2/3) on the given domain.

    Refuses node counts beyond `node_cap` with an allocation estimate, so a
    tiny eps fails fast instead of grinding into a multi-GB kernel.
    """
    if not 0 < epsilon <= 1.0:
        raise ConfigurationError(f"epsilon must be in (0, 1], got {epsilon}")
    dx = epsilon**1.5 / 2.0
    n = _cover_cells(domain.width, dx) + 1
    if n > node_cap:
        # kernel positions dominate: n * n_controls * n_nodes float64s
        est = n * 8
        raise ResourceError(
            f"mesh for epsilon={epsilon} needs {n} nodes (cap {node_cap}); "
            f"value slices alone take {est / 1e6:.0f} MB (x n_controls x "
            f"n_noise_nodes x 8 B for the kernel); raise node_cap to override"
        )
    # dt = dx^(2/3) in exact arithmetic; evaluated in the simplified form so
    # dt really is eps * JUMP_STEP_RATIO and not a libm-pow neighbour of it
    dt = epsilon * JUMP_STEP_RATIO
    return SpaceMesh(domain.x_lo, dx, n), TimeMesh.from_step(domain.horizon, dt)


@dataclass(frozen=True)
class DiffusionMeshes:
    """Grid pair for the limit-equation solver. Unpacks as (space, time)."""

    space: SpaceMesh
    time: TimeMesh

    def __iter__(self):
        return iter((self.space, self.time))


def default_diffusion_meshes(
    domain: Domain, dx: float = 1e-2, dt: float | None = None
) -> DiffusionMeshes:
    if dt is None:
        dt = dx * dx
    space = SpaceMesh(domain.x_lo, dx, _cover_cells(domain.width, dx) + 1)
    return DiffusionMeshes(space, TimeMesh.from_step(domain.horizon, dt))
