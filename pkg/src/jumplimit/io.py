"""Artifact serialization: CSV surfaces/trajectories and JSON reports.

All writers are atomic (temp file in the target directory + rename) and all
floats are written with 17 significant digits so a read-back is bit-exact.
"""
from __future__ import annotations

import json
import os
import tempfile
from collections import namedtuple
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .surfaces import PolicySurface, ValueSurface


def fmt17(x: float) -> str:
    return format(float(x), ".17g")


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path, doc: dict) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)
    _atomic_write_text(path, text + "\n")


def write_rows_csv(path, header, rows) -> None:
    """Generic report table; float cells get the 17-digit treatment."""

    def cell(v):
        if isinstance(v, float):
            return fmt17(v)
        return "" if v is None else str(v)

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_surface_csv(path, surface: ValueSurface, policy: PolicySurface) -> None:
    """One row per (time, node), time-major: t,x,value,control."""
    controls = policy.control_values()
    nodes = surface.mesh.nodes
    rows = ["t,x,value,control"]
    for k, t in enumerate(surface.times):
        ts = fmt17(t)
        vals = surface.values[k]
        ctrl = controls[k]
        rows.extend(
            f"{ts},{fmt17(nodes[i])},{fmt17(vals[i])},{fmt17(ctrl[i])}"
            for i in range(nodes.size)
        )
    _atomic_write_text(path, "\n".join(rows) + "\n")


SurfaceTable = namedtuple("SurfaceTable", "times nodes values controls")


def read_surface_csv(path) -> SurfaceTable:
    """Read back a surface CSV into (times, nodes, values, controls) arrays."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "t,x,value,control":
            raise ValueError(f"unexpected surface CSV header: {header!r}")
        data = [line.split(",") for line in fh.read().split("\n") if line]
    t_col = np.array([float(r[0]) for r in data])
    x_col = np.array([float(r[1]) for r in data])
    v_col = np.array([float(r[2]) for r in data])
    a_col = np.array([float(r[3]) for r in data])
    n_x = int(np.argmax(t_col != t_col[0])) or t_col.size
    if t_col.size % n_x:
        raise ValueError("surface CSV is not a full time-major grid")
    n_t = t_col.size // n_x
    return SurfaceTable(
        times=t_col.reshape(n_t, n_x)[:, 0],
        nodes=x_col[:n_x],
        values=v_col.reshape(n_t, n_x),
        controls=a_col.reshape(n_t, n_x),
    )


def write_surface_json(path, surface: ValueSurface, policy: PolicySurface, extra: dict | None = None) -> None:
    """Compact summary: meta plus the initial and terminal slices."""
    controls = policy.control_values()
    doc = {
        "schema": 1,
        "kind": surface.kind,
        "epsilon": surface.epsilon,
        "space": {
            "x_lo": surface.mesh.x_lo,
            "dx": surface.mesh.dx,
            "n": surface.mesh.n,
        },
        "time": {
            "horizon": float(surface.times[-1]),
            "dt": float(surface.times[1] - surface.times[0]),
            "n_steps": int(surface.times.size - 1),
        },
        "sup_norm_initial": float(np.abs(surface.values[0]).max()),
        "slices": {
            "initial": {
                "t": float(surface.times[0]),
                "value": surface.values[0].tolist(),
                "control": controls[0].tolist(),
            },
            "terminal": {
                "t": float(surface.times[-1]),
                "value": surface.values[-1].tolist(),
                "control": controls[-1].tolist(),
            },
        },
    }
    if extra:
        doc.update(extra)
    write_json_atomic(path, doc)


def load_policy_csv(path, controls) -> PolicySurface:
    """Rebuild a feedback policy from a surface CSV's control column.

    The file's control values must live on the given grid; nearest-index
    snapping only round-trips writer formatting, it does not invent controls.
    """
    from .meshes import SpaceMesh
    from .model import nearest_control_indices

    try:
        table = read_surface_csv(path)
    except FileNotFoundError:
        raise ConfigurationError(f"policy file not found: {path}") from None
    except ValueError as exc:
        raise ConfigurationError(f"policy file {path}: {exc}") from None
    if table.nodes.size < 2:
        raise ConfigurationError(f"policy file {path} has fewer than 2 space nodes")
    mesh = SpaceMesh(
        float(table.nodes[0]),
        float(table.nodes[1] - table.nodes[0]),
        table.nodes.size,
    )
    indices = nearest_control_indices(controls, table.controls)
    return PolicySurface(table.times, mesh, indices, controls)


def write_residual_csv(path, field) -> None:
    """Residual field rows: t,x,a,value (time-major, control innermost)."""
    nodes = field.mesh.nodes
    a = field.controls.values
    rows = ["t,x,a,value"]
    for s in range(field.times.size):
        ts = fmt17(field.times[s])
        vals = field.values[s]
        for i in range(nodes.size):
            xi = fmt17(nodes[i])
            rows.extend(
                f"{ts},{xi},{fmt17(a[m])},{fmt17(vals[i, m])}" for m in range(a.size)
            )
    _atomic_write_text(path, "\n".join(rows) + "\n")


def write_trajectory_csv(path, trajectory) -> None:
    """Jump-by-jump log: tau,x_pre,a,x_post,gain_cum."""
    rows = ["tau,x_pre,a,x_post,gain_cum"]
    rows.extend(
        f"{fmt17(t)},{fmt17(xp)},{fmt17(a)},{fmt17(xn)},{fmt17(g)}"
        for t, xp, a, xn, g in zip(
            trajectory.taus,
            trajectory.x_pre,
            trajectory.controls,
            trajectory.x_post,
            trajectory.gain_cum,
        )
    )
    _atomic_write_text(path, "\n".join(rows) + "\n")


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "tau,x_pre,a,x_post,gain_cum":
            raise ValueError(f"unexpected trajectory CSV header: {header!r}")
        cols = np.array(
            [[float(v) for v in line.split(",")] for line in fh.read().split("\n") if line]
        ).reshape(-1, 5)
    names = ("tau", "x_pre", "a", "x_post", "gain_cum")
    return {name: cols[:, i] for i, name in enumerate(names)}
