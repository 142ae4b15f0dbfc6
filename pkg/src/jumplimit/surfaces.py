"""Value and policy surfaces on space-time grids, plus feedback lookup."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .meshes import SpaceMesh
from .model import ControlGrid


@dataclass(frozen=True)
class ValueSurface:
    """Values on the full time x space grid.

    `kind` is one of "jump", "diffusion", "correction". `epsilon` is None for
    limit-equation surfaces. Solver outputs satisfy: terminal slice zero,
    boundary columns zero, |value| <= sup|r| * horizon + dt * sup|r|; fixtures
    built by tests are free to violate them, so the constructor checks shapes
    only.
    """

    times: np.ndarray
    mesh: SpaceMesh
    values: np.ndarray
    kind: str
    epsilon: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", times)
        if values.shape != (times.size, self.mesh.n):
            raise ConfigurationError(
                f"value array {values.shape} does not match grid "
                f"({times.size}, {self.mesh.n})"
            )

    @property
    def n_slices(self) -> int:
        return self.times.size

    def interp_x(self, k: int, x, outside: float | str = "clamp"):
        """Linear interpolation of slice k in space.

        outside="clamp" extends boundary values; a float extends with that
        constant (0.0 gives the absorbing extension used by the residuals).
        """
        nodes = self.mesh.nodes
        if outside == "clamp":
            out = np.interp(x, nodes, self.values[k])
        else:
            c = float(outside)
            out = np.interp(x, nodes, self.values[k], left=c, right=c)
            # np.interp treats x == boundary as inside; only strictly outside
            # points take the constant, which is what we want.
        return float(out) if np.ndim(x) == 0 else out

    def sup_norm(self, k: int = 0, window: tuple[float, float] | None = None) -> float:
        mask = window_mask(self.mesh, window)
        return float(np.abs(self.values[k, mask]).max())


def window_mask(mesh: SpaceMesh, window: tuple[float, float] | None) -> np.ndarray:
    if window is None:
        return np.ones(mesh.n, dtype=bool)
    lo, hi = window
    nodes = mesh.nodes
    mask = (nodes >= lo) & (nodes <= hi)
    if not mask.any():
        raise ConfigurationError(f"window {window} contains no mesh nodes")
    return mask


@dataclass(frozen=True)
class PolicySurface:
    """Control indices on the full time x space grid, with feedback lookup.

    Lookup convention (shared by the simulator and the chain evaluator):
    latest grid time <= t, nearest space node, both clamped to the grid.
    """

    times: np.ndarray
    mesh: SpaceMesh
    indices: np.ndarray
    controls: ControlGrid

    def __post_init__(self):
        indices = np.asarray(self.indices)
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "times", times)
        if indices.shape != (times.size, self.mesh.n):
            raise ConfigurationError(
                f"policy array {indices.shape} does not match grid "
                f"({times.size}, {self.mesh.n})"
            )
        if indices.min() < 0 or indices.max() >= self.controls.n_controls:
            raise ConfigurationError("policy indices outside the control grid")

    def _time_index(self, t) -> np.ndarray:
        idx = np.searchsorted(self.times, np.asarray(t), side="right") - 1
        return np.clip(idx, 0, self.times.size - 1)

    def index_at(self, t, x):
        ti = self._time_index(t)
        xi = self.mesh.nearest_index(x)
        out = self.indices[ti, xi]
        return int(out) if np.ndim(out) == 0 else out

    def control_at(self, t, x):
        out = self.controls.values[self.index_at(t, x)]
        return float(out) if np.ndim(out) == 0 else out

    def control_values(self) -> np.ndarray:
        """Control values over the whole grid (same shape as indices)."""
        return self.controls.values[self.indices]


def as_control_fn(policy):
    """Normalize a policy argument to a callable (t, x) -> control value."""
    if isinstance(policy, PolicySurface):
        return policy.control_at
    if callable(policy):
        return policy
    raise ConfigurationError(f"not a policy: {policy!r}")
