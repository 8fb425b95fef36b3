"""Acceptance: render the default sweep produced by the chainlab CLI."""

import json
import subprocess
import sys

import pytest

from figrender import RenderSpec, render_bifurcation, save


@pytest.fixture(scope="module")
def default_sweep_csv(tmp_path_factory):
    """Run the upstream CLI with its default sweep configuration."""
    tmp = tmp_path_factory.mktemp("sweep")
    cfg = tmp / "bif.json"
    cfg.write_text(json.dumps({"sweep": {}}), encoding="utf-8")
    proc = subprocess.run(
        [sys.executable, "-m", "chainlab", "bifurcate", str(cfg), "-o", str(tmp)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return tmp / "bifurcation.csv"


def test_default_sweep_figure(default_sweep_csv, tmp_path):
    out = tmp_path / "bifurcation.png"
    spec = RenderSpec(kind="bifurcation", input_path=str(default_sweep_csv),
                      output_path=str(out))
    fig, stats = render_bifurcation(spec)

    ax = fig.axes[0]
    assert ax.get_xlabel() == "r"
    assert ax.get_ylabel() == "feature value"

    # both chains plotted, and every data row becomes exactly one point
    data_rows = sum(1 for ln in default_sweep_csv.read_text().splitlines()[1:] if ln)
    assert stats["points_x"] > 0
    assert stats["points_y"] > 0
    assert stats["points_x"] + stats["points_y"] == data_rows

    save(fig, spec)
    assert out.exists() and out.stat().st_size > 0
    print(f"[acceptance] bifurcation rendering: PASS "
          f"({data_rows} rows -> {data_rows} points)")


def test_schema_mismatch_exits_nonzero(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n", encoding="utf-8")
    proc = subprocess.run(
        [sys.executable, "-m", "figrender.cli", "bifurcation",
         "--input", str(bad), "--output", str(tmp_path / "fig.png")],
        capture_output=True, text=True)
    assert proc.returncode != 0
    print("[acceptance] schema mismatch exit: PASS")
