"""Command-line front end.

Subcommands: solve-jump | solve-diff | solve-correction | simulate |
evaluate | converge | bench. Every command reads an optional model config
(JSON, see config.py), writes its artifacts atomically under --out, and
exits 0 only when every requested file was written. Artifacts are
deterministic for a fixed (config, seed) except for the wall-clock
`*_seconds` report fields.
"""

import argparse
import sys
from pathlib import Path
from time import perf_counter

import numpy as np

from . import io
from .config import MeshOverrides, RunConfig, load_model_config
from .diffusion import (
    hamiltonian_feedback,
    solve_correction_pde,
    solve_diffusion_hjb,
)
from .errors import ConfigurationError, JumpLimitError
from .jump import evaluate_fixed_policy_on_chain, solve_jump_hjb
from .meshes import default_diffusion_meshes, default_jump_meshes
from .simulate import evaluate_policy_mc, simulate_path
from .studies import run_convergence_study, run_cost_benchmark


def _floats_csv(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty float list")
    return values


def _window(text: str) -> tuple[float, float]:
    parts = _floats_csv(text)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"window needs exactly two floats, got {text!r}")
    return parts[0], parts[1]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jumplimit",
        description="Solvers and experiments for small-jump control problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, **kwargs):
        p = sub.add_parser(name, help=help_text, **kwargs)
        p.add_argument("--config", default=None, help="model config JSON")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="master RNG seed")
        p.add_argument("--threads", type=int, default=None, help="worker cap (advisory)")
        return p

    p = add("solve-jump", "backward solve of the jump chain at one epsilon")
    p.add_argument("--epsilon", type=float, required=True)

    add("solve-diff", "explicit solve of the limit equation")

    add("solve-correction", "limit solve plus its first-order correction")

    p = add("simulate", "Monte Carlo paths under a stored policy")
    p.add_argument("policy", help="surface CSV whose control column is the policy")
    p.add_argument("x0", nargs="*", type=float, default=[0.15, 0.3, 0.7])
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--paths", type=int, default=10_000)

    p = add("evaluate", "deterministic chain evaluation of a stored policy")
    p.add_argument("policy", help="surface CSV whose control column is the policy")
    p.add_argument("--epsilon", type=float, required=True)

    p = add("converge", "error and policy-gap study over an epsilon grid")
    p.add_argument("--eps-grid", type=_floats_csv, required=True)
    p.add_argument("--window", type=_window, default=(-0.2, 1.0))
    p.add_argument("--beta", type=float, default=1.0)

    p = add("bench", "wall-clock cost of the jump solve over an epsilon grid")
    p.add_argument("--eps-grid", type=_floats_csv, required=True)

    return parser


def _run_config(args) -> RunConfig:
    model, name, mesh = load_model_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return RunConfig(
        model=model,
        model_name=name,
        model_path=args.config,
        mesh=mesh,
        epsilons=tuple(getattr(args, "eps_grid", None) or ([args.epsilon] if getattr(args, "epsilon", None) else ())),
        seed=args.seed,
        n_paths=getattr(args, "paths", 0),
        out_dir=out_dir,
        window=getattr(args, "window", (-0.2, 1.0)),
        beta=getattr(args, "beta", 1.0),
        threads=args.threads,
    )


def _diffusion_meshes(cfg: RunConfig):
    dx = cfg.mesh.dx if cfg.mesh.dx is not None else 1e-2
    return default_diffusion_meshes(cfg.model.domain, dx=dx, dt=cfg.mesh.dt)


def cmd_solve_jump(cfg: RunConfig) -> list[Path]:
    epsilon = cfg.epsilons[0]
    meshes = default_jump_meshes(cfg.model.domain, epsilon, node_cap=cfg.mesh.node_cap)
    t0 = perf_counter()
    value, policy = solve_jump_hjb(cfg.model, epsilon, meshes, node_cap=cfg.mesh.node_cap)
    runtime = perf_counter() - t0
    space, tmesh = meshes
    sup0 = float(np.abs(value.values[0]).max())
    csv_path = cfg.out_dir / "jump_surface.csv"
    json_path = cfg.out_dir / "jump_report.json"
    io.write_surface_csv(csv_path, value, policy)
    io.write_json_atomic(
        json_path,
        {
            "schema": 1,
            "kind": "solve",
            "scheme": "jump",
            "model": cfg.model_name,
            "epsilon": epsilon,
            "dt_over_epsilon": tmesh.dt / epsilon,
            "n_space": space.n,
            "n_steps": tmesh.n_steps,
            "sup_norm_initial": sup0,
            "runtime_seconds": runtime,
            "surface_csv": csv_path.name,
        },
    )
    print(f"jump solve eps={epsilon:g}: dt/eps = {tmesh.dt / epsilon!r}, "
          f"sup |V(0,.)| = {sup0:.6f}, {runtime:.2f}s")
    return [csv_path, json_path]


def cmd_solve_diff(cfg: RunConfig) -> list[Path]:
    meshes = _diffusion_meshes(cfg)
    t0 = perf_counter()
    value, policy = solve_diffusion_hjb(cfg.model, meshes=meshes)
    runtime = perf_counter() - t0
    sup0 = float(np.abs(value.values[0]).max())
    csv_path = cfg.out_dir / "limit_surface.csv"
    json_path = cfg.out_dir / "limit_report.json"
    io.write_surface_csv(csv_path, value, policy)
    io.write_json_atomic(
        json_path,
        {
            "schema": 1,
            "kind": "solve",
            "scheme": "diffusion",
            "model": cfg.model_name,
            "dx": meshes.space.dx,
            "dt": meshes.time.dt,
            "n_space": meshes.space.n,
            "n_steps": meshes.time.n_steps,
            "sup_norm_initial": sup0,
            "runtime_seconds": runtime,
            "surface_csv": csv_path.name,
        },
    )
    print(f"limit solve: sup |V(0,.)| = {sup0:.6f}, {runtime:.2f}s")
    return [csv_path, json_path]


def cmd_solve_correction(cfg: RunConfig) -> list[Path]:
    meshes = _diffusion_meshes(cfg)
    t0 = perf_counter()
    base, base_policy = solve_diffusion_hjb(cfg.model, meshes=meshes)
    correction, masked_policy = solve_correction_pde(cfg.model, base, base_policy)
    runtime = perf_counter() - t0
    max_abs = float(np.abs(correction.values).max())
    csv_path = cfg.out_dir / "correction_surface.csv"
    json_path = cfg.out_dir / "correction_report.json"
    io.write_surface_csv(csv_path, correction, masked_policy)
    io.write_json_atomic(
        json_path,
        {
            "schema": 1,
            "kind": "solve",
            "scheme": "correction",
            "model": cfg.model_name,
            "dx": meshes.space.dx,
            "dt": meshes.time.dt,
            "max_abs_correction": max_abs,
            "identically_zero": max_abs == 0.0,
            "source_convention": "signed third moment",
            "runtime_seconds": runtime,
            "surface_csv": csv_path.name,
        },
    )
    print(f"correction solve: max |correction| = {max_abs:.6g} "
          f"(identically zero: {max_abs == 0.0}), {runtime:.2f}s")
    return [csv_path, json_path]


def cmd_simulate(cfg: RunConfig, policy_path: str, starts: list[float]) -> list[Path]:
    epsilon = cfg.epsilons[0]
    policy = io.load_policy_csv(policy_path, cfg.model.controls)
    written: list[Path] = []
    entries = []
    for x0 in starts:
        trajectory = simulate_path(
            cfg.model, epsilon, policy, x0, master_seed=cfg.seed, path_index=0
        )
        estimate = evaluate_policy_mc(
            cfg.model, epsilon, policy, x0, n_paths=cfg.n_paths, master_seed=cfg.seed
        )
        traj_path = cfg.out_dir / f"trajectory_x0_{x0:g}.csv"
        io.write_trajectory_csv(traj_path, trajectory)
        written.append(traj_path)
        entries.append(
            {
                "x0": x0,
                "mc_mean": estimate.mean,
                "mc_stderr": estimate.stderr if np.isfinite(estimate.stderr) else None,
                "n_paths": estimate.n_paths,
                "sample_path_jumps": trajectory.n_jumps,
                "sample_path_absorbed": trajectory.absorbed,
                "trajectory_csv": traj_path.name,
            }
        )
        print(f"x0={x0:g}: mc mean {estimate.mean:.6f} (stderr {estimate.stderr:.2g}), "
              f"sample path {trajectory.n_jumps} jumps")
    json_path = cfg.out_dir / "mc_estimates.json"
    io.write_json_atomic(
        json_path,
        {
            "schema": 1,
            "kind": "simulate",
            "model": cfg.model_name,
            "epsilon": epsilon,
            "seed": cfg.seed,
            "policy_file": str(policy_path),
            "starts": entries,
        },
    )
    written.append(json_path)
    return written


def cmd_evaluate(cfg: RunConfig, policy_path: str) -> list[Path]:
    epsilon = cfg.epsilons[0]
    policy = io.load_policy_csv(policy_path, cfg.model.controls)
    meshes = default_jump_meshes(cfg.model.domain, epsilon, node_cap=cfg.mesh.node_cap)
    t0 = perf_counter()
    value = evaluate_fixed_policy_on_chain(
        cfg.model, epsilon, policy, meshes, node_cap=cfg.mesh.node_cap
    )
    runtime = perf_counter() - t0
    space, tmesh = meshes
    sup0 = float(np.abs(value.values[0]).max())
    # the chain evaluator returns the value of the *given* policy; reuse the
    # surface writer by pairing it with that policy resampled on the chain grid
    from .model import nearest_control_indices
    from .surfaces import PolicySurface, as_control_fn

    fn = as_control_fn(policy)
    rows = np.empty((value.times.size, space.n), dtype=np.int64)
    for k, t in enumerate(value.times):
        rows[k] = nearest_control_indices(cfg.model.controls, np.asarray(fn(float(t), space.nodes), dtype=float))
    chain_policy = PolicySurface(value.times, space, rows, cfg.model.controls)
    csv_path = cfg.out_dir / "evaluated_surface.csv"
    json_path = cfg.out_dir / "evaluate_report.json"
    io.write_surface_csv(csv_path, value, chain_policy)
    io.write_json_atomic(
        json_path,
        {
            "schema": 1,
            "kind": "evaluate",
            "model": cfg.model_name,
            "epsilon": epsilon,
            "policy_file": str(policy_path),
            "n_space": space.n,
            "n_steps": tmesh.n_steps,
            "sup_norm_initial": sup0,
            "runtime_seconds": runtime,
            "surface_csv": csv_path.name,
        },
    )
    print(f"chain evaluation eps={epsilon:g}: sup |J(0,.)| = {sup0:.6f}, {runtime:.2f}s")
    return [csv_path, json_path]


_CONVERGE_HEADER = [
    "epsilon", "value_error", "corrected_error", "policy_gap", "policy_gap_min",
    "jump_seconds", "eval_seconds", "n_space", "n_steps", "failure",
]


def cmd_converge(cfg: RunConfig) -> list[Path]:
    if len(cfg.epsilons) < 3:
        raise ConfigurationError(
            f"converge needs at least 3 epsilon values, got {len(cfg.epsilons)}"
        )
    kwargs = {}
    if cfg.mesh.dx is not None:
        kwargs["dx"] = cfg.mesh.dx
    if cfg.mesh.dt is not None:
        kwargs["dt"] = cfg.mesh.dt
    report = run_convergence_study(
        cfg.model,
        cfg.epsilons,
        window=cfg.window,
        beta=cfg.beta,
        model_name=cfg.model_name,
        node_cap=cfg.mesh.node_cap,
        **kwargs,
    )
    for row in report.rows:
        if row.failure:
            print(f"eps={row.epsilon:g}: FAILED ({row.failure})")
        else:
            print(f"eps={row.epsilon:g}: value error {row.value_error:.3e}, "
                  f"policy gap {row.policy_gap:.3e}")
    print(f"slopes: value {report.value_slope}, corrected {report.corrected_slope}, "
          f"gap {report.gap_slope}")
    json_path = cfg.out_dir / "convergence_report.json"
    csv_path = cfg.out_dir / "convergence_rows.csv"
    io.write_json_atomic(json_path, report.to_dict())
    io.write_rows_csv(
        csv_path,
        _CONVERGE_HEADER,
        [
            [
                r["epsilon"], r["value_error"], r["corrected_error"], r["policy_gap"],
                r["policy_gap_min"], r["jump_seconds"], r["eval_seconds"],
                r["n_space"], r["n_steps"], r["failure"],
            ]
            for r in report.to_dict()["rows"]
        ],
    )
    return [json_path, csv_path]


def cmd_bench(cfg: RunConfig) -> list[Path]:
    if len(cfg.epsilons) < 3:
        raise ConfigurationError(
            f"bench needs at least 3 epsilon values, got {len(cfg.epsilons)}"
        )
    kwargs = {}
    if cfg.mesh.dx is not None:
        kwargs["dx"] = cfg.mesh.dx
    if cfg.mesh.dt is not None:
        kwargs["dt"] = cfg.mesh.dt
    report = run_cost_benchmark(
        cfg.model, cfg.epsilons, model_name=cfg.model_name,
        node_cap=cfg.mesh.node_cap, **kwargs,
    )
    for row in report.rows:
        status = row.failure or f"{row.jump_seconds:.3f}s"
        print(f"eps={row.epsilon:g}: {status}")
    print(f"diffusion baseline {report.diffusion_seconds:.3f}s, "
          f"time slope {report.time_slope}")
    json_path = cfg.out_dir / "bench_report.json"
    csv_path = cfg.out_dir / "bench_rows.csv"
    io.write_json_atomic(json_path, report.to_dict())
    io.write_rows_csv(
        csv_path,
        ["epsilon", "jump_seconds", "n_space", "n_steps", "failure"],
        [
            [r["epsilon"], r["jump_seconds"], r["n_space"], r["n_steps"], r["failure"]]
            for r in report.to_dict()["rows"]
        ],
    )
    return [json_path, csv_path]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _run_config(args)
        if args.command == "solve-jump":
            cmd_solve_jump(cfg)
        elif args.command == "solve-diff":
            cmd_solve_diff(cfg)
        elif args.command == "solve-correction":
            cmd_solve_correction(cfg)
        elif args.command == "simulate":
            cmd_simulate(cfg, args.policy, args.x0)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.policy)
        elif args.command == "converge":
            cmd_converge(cfg)
        elif args.command == "bench":
            cmd_bench(cfg)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigurationError(f"unknown command {args.command!r}")
    except JumpLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
