"""All four kinds rendered from real solver artifacts, reruns byte-identical.

Generates the artifacts by invoking the solver CLI as a subprocess, the
same way a user would; this package itself never imports the solver. The
whole module is skipped when the solver is not installed.
"""
import importlib.util
import json
import subprocess
import sys

import pytest

from jlplots.cli import main

pytestmark = pytest.mark.skipif(
    importlib.util.find_spec("jumplimit") is None,
    reason="solver package not installed",
)

CONFIG = {"model": {"family": "bump", "params": {"skew": 0.2}}, "mesh": {"dx": 0.05}}


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    root = tmp_path_factory.mktemp("artifacts")
    config = root / "model.json"
    config.write_text(json.dumps(CONFIG))
    out = root / "run"

    def solver(*args):
        proc = subprocess.run(
            [sys.executable, "-m", "jumplimit.cli", *args,
             "--config", str(config), "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr

    solver("converge", "--eps-grid", "0.5,0.2,0.1")
    solver("bench", "--eps-grid", "0.5,0.2,0.1")
    solver("solve-diff")
    solver("simulate", str(out / "limit_surface.csv"), "0.15", "0.3", "0.7",
           "--epsilon", "0.1", "--paths", "20", "--seed", "3")
    return out


def test_all_four_kinds_render_byte_identically(artifacts, tmp_path):
    jobs = {
        "value_error": str(artifacts / "convergence_report.json"),
        "policy_error": str(artifacts / "convergence_report.json"),
        "cost": str(artifacts / "bench_report.json"),
        "trajectories": str(artifacts / "trajectory_x0_*.csv"),
    }
    for kind, pattern in jobs.items():
        first = tmp_path / f"{kind}.png"
        second = tmp_path / f"{kind}_again.png"
        assert main([kind, "--in", pattern, "--out", str(first)]) == 0, kind
        assert main([kind, "--in", pattern, "--out", str(second)]) == 0, kind
        blob = first.read_bytes()
        assert blob, kind
        assert blob == second.read_bytes(), kind


def test_trajectory_figure_has_three_panels(artifacts, tmp_path):
    import matplotlib.pyplot as plt

    from jlplots.readers import expand_inputs, load_trajectory
    from jlplots.render import trajectories_figure

    paths = expand_inputs(str(artifacts / "trajectory_x0_*.csv"))
    assert len(paths) == 3
    fig = trajectories_figure([load_trajectory(p) for p in paths])
    try:
        assert len(fig.axes) == 3
    finally:
        plt.close(fig)
