import csv
import json

import pytest

from levelsets import __version__
from levelsets.cli import main

MOMENTS = """\
command = moments
seed = 3
replicates = 300
u = 0
p_list = 1
process.kind = sine_cosine
process.M = 3
process.omega_upper = 10
bound.k = 4
bound.h = 0
bound.m = 1
bound.C = 0.3989422804014327
bound.D_m = 10
"""


def _run(tmp_path, text, *args, name="out"):
    cfg = tmp_path / f"{name}.cfg"
    cfg.write_text(text)
    out = tmp_path / name
    code = main(["--config", str(cfg), "--out", str(out), *args])
    return code, out


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_moments_with_bound_and_manifest(tmp_path):
    code, out = _run(tmp_path, MOMENTS)
    assert code == 0
    rows = _rows(out / "moments.csv")
    assert len(rows) == 1 and rows[0]["p"] == "1" and rows[0]["n"] == "300"
    assert _rows(out / "bounds.csv")[0]["alpha"] == "1.5"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["tool"] == "levelsets" and manifest["version"] == __version__
    assert manifest["seed"] == 3 and manifest["command"] == "moments"
    assert len(manifest["config_hash"]) == 64
    assert set(manifest["outputs"]) == {"moments.csv", "bounds.csv"}


def test_seed_flag_overrides_config(tmp_path):
    _, a = _run(tmp_path, MOMENTS, "--seed", "99", name="a")
    assert json.loads((a / "manifest.json").read_text())["seed"] == 99


def test_identical_bodies_across_threads_and_formats(tmp_path):
    _, a = _run(tmp_path, MOMENTS, "--threads", "1", name="a")
    _, b = _run(tmp_path, MOMENTS, "--threads", "2", name="b")
    assert (a / "moments.csv").read_bytes() == (b / "moments.csv").read_bytes()
    _, j = _run(tmp_path, MOMENTS, "--format", "json", name="j")
    doc = json.loads((j / "moments.json").read_text())
    assert float(doc[0]["estimate"]) == float(_rows(a / "moments.csv")[0]["estimate"])


def test_unknown_key_exits_1_without_outputs(tmp_path, capsys):
    code, out = _run(tmp_path, MOMENTS + "process.omgea = 2\n")
    assert code == 1 and not out.exists()
    assert "process.omgea" in capsys.readouterr().err


def test_malformed_value_exits_1(tmp_path):
    code, out = _run(tmp_path, MOMENTS.replace("replicates = 300", "replicates = many"))
    assert code == 1 and not out.exists()


def test_infeasible_bound_exits_2(tmp_path):
    text = "command = bound\nbound.k = 3\nbound.h = 0\nbound.m = 1\nbound.p = 1\nbound.C = 1\nbound.D_m = 1\n"
    code, out = _run(tmp_path, text)
    assert code == 2 and not out.exists()


def test_series_budget_exits_3(tmp_path):
    text = ("command = bound\nbound.k = 4\nbound.h = 0\nbound.m = 1\nbound.p = 1\nbound.C = 1\n"
            "bound.D_m = 1\nbound.tol = 1e-300\n")
    code, out = _run(tmp_path, text)
    assert code == 3 and not out.exists()


def test_bound_max_order_query(tmp_path, capsys):
    code, out = _run(tmp_path, "command = bound\nbound.k = 3\nbound.h = 3\nbound.m = inf\n")
    assert code == 0
    assert "4" in capsys.readouterr().out
    assert (out / "bounds.csv").exists()


def test_crofton_circle(tmp_path):
    text = "command = crofton\nseed = 1\nprobes = 5000\nfield.kind = circle\nfield.radius = 0.5\n"
    code, out = _run(tmp_path, text)
    row = _rows(out / "crofton.csv")[0]
    assert code == 0 and abs(float(row["estimate"]) - 3.14159) < 0.1
    assert row["degenerate_probes"] == "0"


def test_count_and_simulate(tmp_path):
    code, out = _run(tmp_path, "command = count\nseed = 1\nreplicates = 3\nprocess.kind = cosine\nu = 0, 0.5\n")
    assert code == 0
    rows = _rows(out / "counts.csv")
    assert {r["count"] for r in rows} == {"2"}
    text = "command = simulate\nseed = 2\nreplicates = 2\norder = 2\ngrid.step = 0.5\nprocess.kind = spectral_gaussian\n"
    code, out = _run(tmp_path, text, name="sim")
    assert code == 0
    paths = sorted(p.name for p in out.glob("path_*.csv"))
    assert len(paths) == 2
    assert _rows(out / paths[0])[0].keys() == {"t", "x", "dx1", "dx2"}


def test_kacrice_and_diagnose(tmp_path):
    text = "command = kacrice\nseed = 5\nreplicates = 50\nprocess.kind = cosine\ndeltas = 0.5, 0.1\n"
    code, out = _run(tmp_path, text)
    assert code == 0
    rows = _rows(out / "kacrice.csv")
    assert [float(r["delta"]) for r in rows] == [0.5, 0.1]
    assert all(float(r["mean"]) == pytest.approx(2.0) for r in rows)
    text = "command = diagnose\ndiagnose.checks = A, radial\ndiagnose.kernel = laplace\ndiagnose.lambda = 2\n"
    code, out = _run(tmp_path, text, name="diag")
    assert code == 0
    rows = {r["condition_name"]: r for r in _rows(out / "conditions.csv")}
    assert float(rows["density_A"]["value"]) == pytest.approx(2.0)
    assert rows["density_radial_G"]["converged"] == "true"


def test_report_combines_runs(tmp_path):
    _, a = _run(tmp_path, MOMENTS, name="a")
    _, b = _run(tmp_path, MOMENTS, name="b")
    out = tmp_path / "rep"
    assert main(["report", str(a), str(b), "--out", str(out)]) == 0
    rows = _rows(out / "report.csv")
    assert len(rows) == 2 and rows[0] == rows[1]
    assert rows[0]["satisfied"] == "true"


def test_report_on_empty_input_set(tmp_path):
    out = tmp_path / "rep"
    assert main(["report", "--out", str(out)]) == 0
    lines = (out / "report.csv").read_text().splitlines()
    assert lines == ["spec_id,u,p,n,estimate,ci_low,ci_high,bound,satisfied,margin"]


def test_report_rejects_foreign_manifest(tmp_path):
    _, a = _run(tmp_path, MOMENTS, name="a")
    manifest = json.loads((a / "manifest.json").read_text())
    manifest["version"] = "0.0.0"
    (a / "manifest.json").write_text(json.dumps(manifest))
    assert main(["report", str(a), "--out", str(tmp_path / "rep")]) == 1
