"""Figure structure, the CLI error contract, and byte determinism."""
import json

import matplotlib.pyplot as plt
import pytest

from jlplots.cli import main
from jlplots.readers import SeriesData, TrajectoryData
from jlplots.render import loglog_figure, trajectories_figure

from test_readers import TRAJ, convergence_report, crow, write_json


SERIES = SeriesData(
    x=(0.1, 0.2, 0.5), y=(1e-3, 3e-3, 1e-2), slope=0.5,
    x_label="epsilon", y_label="sup error",
)


def test_loglog_axes_and_slope_legend():
    fig = loglog_figure(SERIES)
    try:
        ax = fig.axes[0]
        assert ax.get_xscale() == "log" and ax.get_yscale() == "log"
        labels = [t.get_text() for t in ax.get_legend().get_texts()]
        assert "measured" in labels
        assert "slope = 0.50" in labels
        assert len(ax.get_lines()) == 2
    finally:
        plt.close(fig)


def test_guide_line_passes_through_first_point():
    fig = loglog_figure(SERIES)
    try:
        guide = fig.axes[0].get_lines()[1]
        assert guide.get_ydata()[0] == SERIES.y[0]
    finally:
        plt.close(fig)


def test_trajectories_one_panel_per_path():
    trajs = [
        TrajectoryData(f"t{i}", taus=(0.1, 0.4), x_pre=(x0, 0.3), x_post=(0.3, 0.1))
        for i, x0 in enumerate((0.15, 0.3, 0.7))
    ]
    fig = trajectories_figure(trajs)
    try:
        assert len(fig.axes) == 3
        assert [ax.get_title() for ax in fig.axes] == [
            "x0 = 0.15", "x0 = 0.3", "x0 = 0.7",
        ]
    finally:
        plt.close(fig)


def test_cli_rerun_is_byte_identical(tmp_path):
    report = write_json(tmp_path, convergence_report([crow(0.1), crow(0.2), crow(0.5)]))
    first, second = tmp_path / "a.png", tmp_path / "b.png"
    assert main(["value_error", "--in", str(report), "--out", str(first)]) == 0
    assert main(["value_error", "--in", str(report), "--out", str(second)]) == 0
    blob = first.read_bytes()
    assert blob and blob == second.read_bytes()


def test_cli_trajectories_from_three_csvs(tmp_path):
    for x0 in ("0.15", "0.3", "0.7"):
        (tmp_path / f"trajectory_x0_{x0}.csv").write_text(TRAJ)
    out = tmp_path / "paths.png"
    rc = main(["trajectories", "--in", str(tmp_path / "trajectory_*.csv"),
               "--out", str(out)])
    assert rc == 0 and out.exists()


def test_cli_empty_report_writes_no_image(tmp_path, capsys):
    report = write_json(tmp_path, convergence_report([]))
    out = tmp_path / "fig.png"
    assert main(["value_error", "--in", str(report), "--out", str(out)]) == 1
    assert not out.exists()
    assert "no usable rows" in capsys.readouterr().err


def test_cli_schema_mismatch_names_column(tmp_path, capsys):
    doc = convergence_report([crow(0.1)])
    del doc["rows"][0]["policy_gap"]
    report = write_json(tmp_path, doc)
    out = tmp_path / "fig.png"
    assert main(["policy_error", "--in", str(report), "--out", str(out)]) == 1
    assert not out.exists()
    assert "'policy_gap'" in capsys.readouterr().err


def test_cli_needs_exactly_one_report(tmp_path, capsys):
    for name in ("r1.json", "r2.json"):
        write_json(tmp_path, convergence_report([crow(0.1)]), name)
    rc = main(["value_error", "--in", str(tmp_path / "r*.json"),
               "--out", str(tmp_path / "fig.png")])
    assert rc == 1
    assert "exactly one report" in capsys.readouterr().err


def test_cli_rejects_non_png_output(tmp_path, capsys):
    report = write_json(tmp_path, convergence_report([crow(0.1)]))
    rc = main(["value_error", "--in", str(report), "--out", str(tmp_path / "fig.svg")])
    assert rc == 1
    assert ".png" in capsys.readouterr().err


def test_cli_rejects_unknown_kind(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["histogram", "--in", "x", "--out", "y.png"])
    assert exc.value.code == 2
