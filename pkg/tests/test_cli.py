"""End-to-end CLI behavior through ``main`` with in-process invocations."""

import csv

import numpy as np
import pytest

from meshmorph import quality_report, write_vtk
from meshmorph.cli import main

from conftest import make_grid

SPRING_CASE = """model = "spring"

[problem]
kind = "foil"
element_size = 0.2

[motion]
mode = "translation"
vector = [0.0, -0.08]

[spring]
strategy = "{strategy}"
n_steps = 2
"""


def write_cfg(tmp_path, text, name="case.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def drop_wall_time(rows):
    return [row[:-1] for row in rows]


def test_run_writes_row_and_artifacts(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SPRING_CASE.format(strategy="both"), "foil_tr.toml")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out), "--seed", "7"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1
    fields = lines[0].split(",")
    assert fields[:4] == ["foil", "spring", "both", "2"]
    assert float(fields[5]) == pytest.approx(0.894471719062, abs=1e-9)
    assert fields[8] == "0"  # inverted_count
    assert fields[9] == "ok"
    names = {p.name for p in out.iterdir()}
    assert names == {
        "foil_tr_case.csv",
        "foil_tr_spring_both_deformed.vtk",
        "foil_tr_spring_both_metrics.csv",
    }
    rows = read_rows(out / "foil_tr_case.csv")
    assert rows[0][:5] == ["problem", "model", "strategy", "n_steps", "layer_factors"]
    assert rows[0][5:] == ["min_skewness", "min_area_ratio", "max_area_ratio",
                           "inverted_count", "status", "wall_time_s"]
    assert rows[1][:10] == fields[:10]


def test_run_missing_config_is_a_config_error(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.toml")]) == 2
    assert capsys.readouterr().err.startswith("config error:")


def test_run_csv_format_skips_vtk(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SPRING_CASE.format(strategy="both"))
    out = tmp_path / "csv_only"
    assert main(["run", str(cfg), "--out", str(out), "--format", "csv"]) == 0
    capsys.readouterr()
    assert not list(out.glob("*.vtk"))
    assert (out / "case_case.csv").exists()


def test_run_compare_emits_one_row_per_strategy(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SPRING_CASE.format(strategy="compare"), "cmp.toml")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    table = [line.split(",") for line in lines]
    assert [row[2] for row in table] == ["diag13", "diag24", "both", "selective"]
    skews = {row[2]: float(row[5]) for row in table}
    # the mirror-symmetric translation makes the two single-diagonal runs agree
    assert skews["diag13"] == skews["diag24"]
    assert skews["both"] == pytest.approx(0.894471719062, abs=1e-9)
    assert skews["selective"] == pytest.approx(0.894799149495, abs=1e-9)
    for strategy in ("diag13", "diag24", "both", "selective"):
        assert (out / f"cmp_spring_{strategy}_deformed.vtk").exists()
        assert (out / f"cmp_spring_{strategy}_metrics.csv").exists()


def test_run_turns_solver_failure_into_status_row(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """model = "yeoh"

[problem]
kind = "foil"
element_size = 0.2

[motion]
mode = "translation"
vector = [0.0, -0.45]

[yeoh]
increments = 1
max_iters = 3
""", "crash.toml")
    assert main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
    fields = capsys.readouterr().out.strip().split(",")
    assert fields[1] == "yeoh"
    assert fields[9] == "NewtonDivergenceError"
    assert fields[5] == "nan"
    assert fields[8] == "-1"


def test_run_is_deterministic_across_invocations(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SPRING_CASE.format(strategy="selective"), "det.toml")
    for sub in ("a", "b"):
        assert main(["run", str(cfg), "--out", str(tmp_path / sub)]) == 0
    capsys.readouterr()
    rows_a = read_rows(tmp_path / "a" / "det_case.csv")
    rows_b = read_rows(tmp_path / "b" / "det_case.csv")
    assert drop_wall_time(rows_a) == drop_wall_time(rows_b)
    vtk_a = (tmp_path / "a" / "det_spring_selective_deformed.vtk").read_bytes()
    vtk_b = (tmp_path / "b" / "det_spring_selective_deformed.vtk").read_bytes()
    assert vtk_a == vtk_b


SWEEP_CASE = """model = "spring"

[problem]
kind = "foil"
element_size = 0.2

[motion]
mode = "translation"
vector = [0.0, -0.08]

[spring]
n_steps = 2

[sweep]
parameters = ["layer1"]
layer1 = {values = [1.0, 2.0]}
"""


def test_sweep_appends_argmax_summary(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SWEEP_CASE, "lsweep.toml")
    out = tmp_path / "out"
    assert main(["sweep", str(cfg), "--out", str(out)]) == 0
    path = out / "lsweep_sweep.csv"
    assert capsys.readouterr().out.strip() == f"3 rows -> {path}"
    rows = read_rows(path)
    header = rows[0]
    assert header[2] == "layer1"
    status = header.index("status")
    skew = header.index("min_skewness")
    assert [row[status] for row in rows[1:]] == ["ok", "ok", "argmax"]
    best = max(float(row[skew]) for row in rows[1:3])
    assert float(rows[3][skew]) == best
    assert rows[3][2] in {rows[1][2], rows[2][2]}


def test_sweep_parallel_jobs_match_serial(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SWEEP_CASE, "psweep.toml")
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "serial")]) == 0
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "par"), "--jobs", "2"]) == 0
    capsys.readouterr()
    serial = read_rows(tmp_path / "serial" / "psweep_sweep.csv")
    par = read_rows(tmp_path / "par" / "psweep_sweep.csv")
    assert drop_wall_time(serial) == drop_wall_time(par)


def test_sweep_rejects_compare_pseudo_strategy(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SWEEP_CASE.replace(
        "n_steps = 2", 'n_steps = 2\nstrategy = "compare"'))
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "out")]) == 2
    assert "compare" in capsys.readouterr().err


def test_verify_sensitivity_reports_both_blocks(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """[problem]
kind = "foil"
element_size = 0.2

[motion]
mode = "translation"
vector = [0.0, -0.05]

[yeoh]
increments = 2
""", "sens.toml")
    out = tmp_path / "out"
    assert main(["verify-sensitivity", str(cfg), "--out", str(out)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("dD_dx: PASS relative_error=")
    assert lines[1].startswith("dD_du: PASS relative_error=")
    assert "threshold 1e-06" in lines[0]
    assert "threshold 1e-05" in lines[1]
    rows = read_rows(out / "sens_sensitivity.csv")
    assert rows[0] == ["block", "h", "relative_error", "pass"]
    assert len(rows) == 9
    assert {row[0] for row in rows[1:]} == {"dD_dx", "dD_du"}


def test_quality_rates_an_external_deformation(tmp_path, capsys):
    ref = make_grid(3, 3)
    rng = np.random.default_rng(2)
    inner = 0.05 * rng.standard_normal(ref.nodes.shape)
    inner[ref.boundary_nodes()] = 0.0
    deformed = ref.with_coords(ref.nodes + inner)
    write_vtk(tmp_path / "ref.vtk", ref, {"layer_index": np.zeros(ref.n_quads)})
    write_vtk(tmp_path / "def.vtk", deformed)
    out = tmp_path / "out"
    rc = main(["quality", str(tmp_path / "def.vtk"), str(tmp_path / "ref.vtk"),
               "--out", str(out)])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    report = quality_report(deformed, ref)
    assert lines[0] == f"elements: {ref.n_quads}"
    assert lines[1] == f"min_skewness: {report.min_skewness:.12g}"
    assert lines[2] == f"min_area_ratio: {report.min_area_ratio:.12g}"
    assert lines[3] == f"max_area_ratio: {report.max_area_ratio:.12g}"
    assert lines[4] == f"inverted_count: {report.n_inverted}"
    metrics = read_rows(out / "def_metrics.csv")
    assert metrics[0] == ["element_id", "skewness", "area_ratio", "layer_index"]
    assert len(metrics) == 1 + ref.n_quads


def test_quality_without_out_dir_prints_only(tmp_path, capsys, monkeypatch):
    ref = make_grid(2, 2)
    write_vtk(tmp_path / "ref.vtk", ref)
    write_vtk(tmp_path / "def.vtk", ref)
    monkeypatch.chdir(tmp_path)
    assert main(["quality", "def.vtk", "ref.vtk"]) == 0
    capsys.readouterr()
    assert not (tmp_path / "def_metrics.csv").exists()
