from pathlib import Path

import numpy as np
import pytest

import thinhomog as th
from thinhomog import checks, cli
from thinhomog.config import load_config
from thinhomog.plotting import write_svg

CONFIGS = Path(__file__).parents[1] / "configs"


def _table():
    rows = [
        {"epsilon": 0.1, "eta": np.float64(1.2), "dist_total": 0.3,
         "flag": np.bool_(True), "n": np.int64(3)},
        {"epsilon": 0.05, "eta": 0.8, "dist_total": 0.2, "flag": False,
         "n": 4},
    ]
    return th.CsvTable(("epsilon", "eta", "dist_total", "flag", "n"), rows)


def test_table_body_is_deterministic():
    body = _table().body()
    assert body == _table().body()
    lines = body.splitlines()
    assert lines[0] == "epsilon,eta,dist_total,flag,n"
    assert lines[1] == "0.1,1.2,0.3,true,3"
    assert body.endswith("\n")


def test_table_schema_is_enforced():
    table = _table()
    with pytest.raises(ValueError):
        table.append({"epsilon": 0.1})
    with pytest.raises(ValueError):
        th.CsvTable(("a",), [{"a": 1, "b": 2}])


def test_table_write_and_read(tmp_path):
    table = _table()
    table.provenance["study"] = "ladder"
    path = table.write(tmp_path / "t.csv", timestamp="2024-01-01T00:00:00")
    text = path.read_text()
    assert text.startswith("# tool: thinhomog ")
    assert "# timestamp: 2024-01-01T00:00:00\n" in text
    back = th.CsvTable.read(path)
    assert back.columns == table.columns
    assert back.provenance["study"] == "ladder"
    assert back.column("flag") == [True, False]
    assert back.column("n") == [3, 4]
    assert back.column("eta") == [1.2, 0.8]


def test_svg_is_deterministic(tmp_path):
    first = th.render_svg(_table(), "loglog", config_hash="abc" * 20)
    second = th.render_svg(_table(), "loglog", config_hash="abc" * 20)
    assert first == second
    assert "<svg" in first
    path = write_svg(tmp_path / "fig.svg", _table(), "loglog")
    assert path.read_text().lstrip().startswith("<?xml")


def test_svg_of_empty_table():
    svg = th.render_svg(th.CsvTable(("eta", "dist_total")), "loglog")
    assert "no data" in svg


def test_svg_rejects_bad_requests():
    with pytest.raises(th.PlotError):
        th.render_svg(_table(), "pie")
    with pytest.raises(th.PlotError):
        th.render_svg(_table(), "bars")


def test_checks():
    assert checks.strictly_decreasing("d", [3, 2, 1]).passed
    assert not checks.strictly_decreasing("d", [3, 3, 1]).passed
    assert not checks.strictly_decreasing("d", [3, np.nan]).passed
    assert checks.non_increasing("d", [1.0, 1.0 + 1e-9], 1e-8).passed
    assert not checks.non_increasing("d", [1.0, 1.1], 1e-8).passed
    assert checks.close_to("c", 1.0 + 1e-9, 1.0, 1e-8).passed
    assert checks.all_below("b", [0.1, 0.2], 0.2).passed
    failed = checks.Check("x", False)
    note = checks.Check("y", False, acceptance=False)
    ok, bad = checks.summarize([failed, note, checks.Check("z", True)])
    assert not ok
    assert bad == [failed]
    assert checks.summarize([note])[0]


def test_homogenize_study(tmp_path):
    cfg = load_config(CONFIGS / "homogenize.yaml")
    result = th.run_study(cfg, out_dir=tmp_path, timestamp="t0")
    assert result.passed
    table = th.CsvTable.read(tmp_path / "homogenize.csv")
    dispatch, cell = table.rows
    assert dispatch["method"] == "dispatch"
    assert dispatch["regime"] == "same-order-commensurate"
    assert dispatch["p0"] == pytest.approx(np.sqrt(14), abs=1e-8)
    assert cell["method"] == "cell-problem"
    assert cell["p0"] == pytest.approx(np.sqrt(14), abs=1e-6)
    assert len(table.provenance["config_hash"]) == 64
    assert table.provenance["study"] == "homogenize"


def test_failed_epsilon_is_recorded(tmp_path):
    # at eps = 0.1 the first vertical mode undercuts the fourth limit mode
    cfg = th.parse_config(
        "study:\n  kind: spectrum\n  epsilons: [0.1]\n"
        "numerics:\n  n_max: 4\n"
    )
    result = th.run_study(cfg, out_dir=tmp_path)
    assert not result.passed
    assert result.failures[0][0] == 0.1
    assert "StudyError" in result.failures[0][1]
    table = th.CsvTable.read(tmp_path / "spectrum.csv")
    assert len(table) == 0
    assert table.provenance["failed_epsilons"] == "0.1"


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("geometry:\n  alpha: 1.5\n")
    assert cli.main(["ladder", "-c", str(bad)]) == cli.EXIT_CONFIG
    missing = tmp_path / "missing.yaml"
    assert cli.main(["ladder", "-c", str(missing)]) == cli.EXIT_CONFIG
    good = str(CONFIGS / "homogenize.yaml")
    assert cli.main(["homogenize", "-c", good, "-j", "0"]) == cli.EXIT_CONFIG
    out = tmp_path / "out"
    assert cli.main(["homogenize", "-c", good, "-o", str(out)]) == 0
    assert (out / "homogenize.csv").exists()


def test_cli_reports_failed_checks(tmp_path):
    cfg = tmp_path / "spectrum.yaml"
    cfg.write_text("study:\n  kind: spectrum\n  epsilons: [0.1]\n")
    code = cli.main(["spectrum", "-c", str(cfg), "-o", str(tmp_path)])
    assert code == cli.EXIT_CHECKS_FAILED
