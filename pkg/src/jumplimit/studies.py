"""Empirical studies: convergence rate, policy gap, and solver cost.

The convergence study solves the limit equation (and its correction) once,
then for each epsilon solves the jump chain on its own meshes, pulls the
limit slices onto the chain nodes by linear interpolation, and measures
interior sup errors together with the deterministic policy gap. Slopes are
ordinary least squares in log-log coordinates; wall-clock fields are the
only nondeterministic entries in any report.
"""
from __future__ import annotations

from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .diffusion import (
    hamiltonian_feedback,
    solve_correction_pde,
    solve_diffusion_hjb,
    stable_time_step,
)
from .errors import ConfigurationError, JumpLimitError
from .jump import build_jump_kernel, evaluate_fixed_policy_on_chain, solve_jump_hjb
from .meshes import DEFAULT_NODE_CAP, default_diffusion_meshes, default_jump_meshes
from .model import ModelSpec, make_bump_model


def fit_loglog_slope(x, y) -> float | None:
    """OLS slope of log y against log x; None with fewer than 2 usable points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def warm_up_solvers() -> None:
    """Run every jitted kernel once on a toy model so timings stay clean."""
    model = make_bump_model()
    _, jump_policy = solve_jump_hjb(model, 0.5)
    evaluate_fixed_policy_on_chain(model, 0.5, jump_policy)
    surface, policy = solve_diffusion_hjb(model, dx=0.25)
    solve_correction_pde(model, surface, policy)


@dataclass(frozen=True)
class EpsilonRow:
    """Per-epsilon entries of a convergence report."""

    epsilon: float
    value_error: float
    corrected_error: float
    policy_gap: float
    policy_gap_min: float
    jump_seconds: float
    eval_seconds: float
    n_space: int
    n_steps: int
    failure: str | None = None


@dataclass(frozen=True)
class ConvergenceReport:
    model_name: str
    beta: float
    window: tuple[float, float]
    rows: tuple[EpsilonRow, ...]
    diffusion_seconds: float
    correction_seconds: float
    value_slope: float | None
    corrected_slope: float | None
    gap_slope: float | None
    time_slope: float | None

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "convergence",
            "model": self.model_name,
            "beta": self.beta,
            "window": [self.window[0], self.window[1]],
            "diffusion_seconds": _jsonable(self.diffusion_seconds),
            "correction_seconds": _jsonable(self.correction_seconds),
            "value_slope": _jsonable(self.value_slope),
            "corrected_slope": _jsonable(self.corrected_slope),
            "gap_slope": _jsonable(self.gap_slope),
            "time_slope": _jsonable(self.time_slope),
            "rows": [
                {
                    "epsilon": r.epsilon,
                    "value_error": _jsonable(r.value_error),
                    "corrected_error": _jsonable(r.corrected_error),
                    "policy_gap": _jsonable(r.policy_gap),
                    "policy_gap_min": _jsonable(r.policy_gap_min),
                    "jump_seconds": _jsonable(r.jump_seconds),
                    "eval_seconds": _jsonable(r.eval_seconds),
                    "n_space": r.n_space,
                    "n_steps": r.n_steps,
                    "failure": r.failure,
                }
                for r in self.rows
            ],
        }


def _jsonable(v):
    if v is None:
        return None
    v = float(v)
    return v if np.isfinite(v) else None


def _check_window(model: ModelSpec, window) -> tuple[float, float]:
    x_a, x_b = float(window[0]), float(window[1])
    dom = model.domain
    if not (dom.x_lo <= x_a < x_b <= dom.x_hi):
        raise ConfigurationError(
            f"window [{x_a}, {x_b}] must be ordered and lie in [{dom.x_lo}, {dom.x_hi}]"
        )
    return x_a, x_b


def run_convergence_study(
    model: ModelSpec,
    eps_values,
    window=(-0.2, 1.0),
    beta: float = 1.0,
    model_name: str = "model",
    node_cap: int = DEFAULT_NODE_CAP,
    dx: float = 2e-3,
    dt: float | None = None,
    warm: bool = True,
) -> ConvergenceReport:
    """Jump-vs-limit errors and the limit-policy gap over an epsilon grid.

    The limit reference is solved finer than the solver's own default
    (dx = 2e-3, dt just inside the stability limit) so its first-order
    upwind error stays well below the chain errors being measured. The
    policy gap evaluates the hamiltonian feedback rule of the limit surface
    on each chain, so reward thresholds stay aligned with the chain's own
    nodes. Per epsilon failures are recorded in the row and the study
    continues; slopes are fit over rows that produced positive numbers.
    """
    eps_values = [float(e) for e in eps_values]
    if len(eps_values) < 3:
        raise ConfigurationError(f"need at least 3 epsilon values, got {len(eps_values)}")
    x_a, x_b = _check_window(model, window)
    if warm:
        warm_up_solvers()

    space = default_diffusion_meshes(model.domain, dx=dx, dt=model.domain.horizon).space
    if dt is None:
        dt = stable_time_step(model, space)
    meshes = default_diffusion_meshes(model.domain, dx=dx, dt=dt)
    t0 = perf_counter()
    vbar, limit_policy = solve_diffusion_hjb(model, meshes=meshes)
    diffusion_seconds = perf_counter() - t0
    t0 = perf_counter()
    correction, _ = solve_correction_pde(model, vbar, limit_policy)
    correction_seconds = perf_counter() - t0
    feedback = hamiltonian_feedback(model, vbar)

    rows = []
    for eps in eps_values:
        try:
            rows.append(
                _one_epsilon(
                    model, eps, vbar, correction, feedback, x_a, x_b, beta, node_cap
                )
            )
        except (JumpLimitError, MemoryError) as exc:
            nan = float("nan")
            rows.append(
                EpsilonRow(
                    eps, nan, nan, nan, nan, nan, nan, 0, 0,
                    failure=f"{type(exc).__name__}: {exc}",
                )
            )
    ok = [r for r in rows if r.failure is None]
    eps_ok = [r.epsilon for r in ok]
    return ConvergenceReport(
        model_name=model_name,
        beta=float(beta),
        window=(x_a, x_b),
        rows=tuple(rows),
        diffusion_seconds=diffusion_seconds,
        correction_seconds=correction_seconds,
        value_slope=fit_loglog_slope(eps_ok, [r.value_error for r in ok]),
        corrected_slope=fit_loglog_slope(eps_ok, [r.corrected_error for r in ok]),
        gap_slope=fit_loglog_slope(eps_ok, [r.policy_gap for r in ok]),
        time_slope=fit_loglog_slope(
            [1.0 / e for e in eps_ok], [r.jump_seconds for r in ok]
        ),
    )


def _one_epsilon(model, eps, vbar, correction, feedback, x_a, x_b, beta, node_cap):
    space, tmesh = default_jump_meshes(model.domain, eps, node_cap=node_cap)
    t0 = perf_counter()
    kernel = build_jump_kernel(model, eps, space)
    v_eps, _ = solve_jump_hjb(model, eps, (space, tmesh), kernel=kernel)
    jump_seconds = perf_counter() - t0
    t0 = perf_counter()
    j_eps = evaluate_fixed_policy_on_chain(
        model, eps, feedback, (space, tmesh), kernel=kernel
    )
    eval_seconds = perf_counter() - t0

    nodes = space.nodes
    sel = (nodes >= x_a) & (nodes <= x_b)
    v0 = v_eps.values[0][sel]
    vbar0 = vbar.interp_x(0, nodes[sel])
    corr0 = correction.interp_x(0, nodes[sel])
    gap = v0 - j_eps.values[0][sel]
    return EpsilonRow(
        epsilon=eps,
        value_error=float(np.abs(v0 - vbar0).max()),
        corrected_error=float(np.abs(v0 - (vbar0 + eps ** (0.5 * beta) * corr0)).max()),
        policy_gap=float(gap.max()),
        policy_gap_min=float(gap.min()),
        jump_seconds=jump_seconds,
        eval_seconds=eval_seconds,
        n_space=space.n,
        n_steps=tmesh.n_steps,
    )


@dataclass(frozen=True)
class BenchRow:
    epsilon: float
    jump_seconds: float
    n_space: int
    n_steps: int
    failure: str | None = None


@dataclass(frozen=True)
class CostReport:
    model_name: str
    diffusion_seconds: float
    time_slope: float | None
    rows: tuple[BenchRow, ...]

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "bench",
            "model": self.model_name,
            "diffusion_seconds": _jsonable(self.diffusion_seconds),
            "time_slope": _jsonable(self.time_slope),
            "rows": [
                {
                    "epsilon": r.epsilon,
                    "jump_seconds": _jsonable(r.jump_seconds),
                    "n_space": r.n_space,
                    "n_steps": r.n_steps,
                    "failure": r.failure,
                }
                for r in self.rows
            ],
        }


def run_cost_benchmark(
    model: ModelSpec,
    eps_values,
    model_name: str = "model",
    node_cap: int = DEFAULT_NODE_CAP,
    dx: float = 1e-2,
    dt: float | None = None,
    warm: bool = True,
) -> CostReport:
    """Wall-clock cost of the jump solve per epsilon vs one limit solve.

    The kernel build is timed as part of each jump solve: tabulating the
    transitions is a real cost of the chain method.
    """
    eps_values = [float(e) for e in eps_values]
    if len(eps_values) < 3:
        raise ConfigurationError(f"need at least 3 epsilon values, got {len(eps_values)}")
    if warm:
        warm_up_solvers()
    t0 = perf_counter()
    solve_diffusion_hjb(model, dx=dx, dt=dt)
    diffusion_seconds = perf_counter() - t0
    rows = []
    for eps in eps_values:
        try:
            space, tmesh = default_jump_meshes(model.domain, eps, node_cap=node_cap)
            t0 = perf_counter()
            solve_jump_hjb(model, eps, (space, tmesh), node_cap=node_cap)
            rows.append(BenchRow(eps, perf_counter() - t0, space.n, tmesh.n_steps))
        except (JumpLimitError, MemoryError) as exc:
            rows.append(
                BenchRow(eps, float("nan"), 0, 0, failure=f"{type(exc).__name__}: {exc}")
            )
    ok = [r for r in rows if r.failure is None]
    return CostReport(
        model_name=model_name,
        diffusion_seconds=diffusion_seconds,
        time_slope=fit_loglog_slope(
            [1.0 / r.epsilon for r in ok], [r.jump_seconds for r in ok]
        ),
        rows=tuple(rows),
    )
