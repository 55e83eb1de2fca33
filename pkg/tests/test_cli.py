import csv
import json

import pytest

from commsize.cli import main

SMALL = ["--agents", "300", "--communities", "20", "--steps", "4"]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_is_byte_identical(tmp_path, capsys):
    args = ["simulate", "--model", "null", "--p-e", "0.1", "--p-j", "0.1", "--seed", "7", *SMALL]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "sizes.csv").read_bytes()
    assert a == (tmp_path / "b" / "sizes.csv").read_bytes()
    assert a.startswith(b"community_id,final_size")
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 7
    assert manifest["seeds"] == [7]
    assert "gini=" in capsys.readouterr().out


def test_simulate_combined_defaults(tmp_path):
    out = tmp_path / "c"
    assert main(["simulate", "--model", "combined", "--m", "2", "--p-k", "0.1", *SMALL,
                 "--record-steps", "--plot", "--format", "png", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["projection"] == "quadratic"
    assert manifest["config"]["share"] == "largest"
    assert (out / "ecdf.png").stat().st_size > 0
    assert len(read_rows(out / "steps.csv")) == 5 * 20


@pytest.mark.parametrize("argv,flag", [
    (["--model", "null", "--p-e", "0.1"], "--p-j"),
    (["--model", "social_exposure"], "--m"),
    (["--model", "ieb", "--p-e", "0.1"], "--p-k"),
    (["--model", "combined", "--m", "2"], "--p-k"),
    ([], "--model"),
])
def test_missing_required_flag(tmp_path, capsys, argv, flag):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", *argv, "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert flag in capsys.readouterr().err


def test_invalid_value_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--model", "null", "--p-e", "2", "--p-j", "0.1", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_config_file_with_override(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("model: ieb\np-e: 0.2\np_k: 0.2\nagents: 200\ncommunities: 15\nsteps: 3\n")
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg), "--seed", "3", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["family"] == "ieb"
    assert manifest["config"]["p_e"] == 0.2
    assert manifest["config"]["seed"] == 3


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("family: ieb\nwarp: 9\n")
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--config", str(cfg), "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_sweep_from_config(tmp_path):
    cfg = tmp_path / "grid.yaml"
    cfg.write_text(
        "base: {family: 'null', agents: 200, communities: 10, steps: 3}\n"
        "axes: {p_e: [0.1, 0.2]}\nreplicates: 2\n"
    )
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(cfg), "--axis", "p_j=0.1,0.3", "--jobs", "1",
                 "--plot", "--out", str(out)]) == 0
    rows = read_rows(out / "sweep.csv")
    assert len(rows) == 4 * 2 * 10
    assert {r["p_j"] for r in rows} == {"0.1", "0.3"}
    assert len(read_rows(out / "summary.csv")) == 8
    assert (out / "sweep.svg").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["seeds"]) == 8 and manifest["failures"] == []


def test_sweep_reports_failed_cells(tmp_path, capsys):
    out = tmp_path / "f"
    code = main(["sweep", "--model", "null", "--p-j", "0.1", *SMALL, "--axis", "p_e=0.1,3.0",
                 "--jobs", "1", "--out", str(out)])
    assert code == 1
    assert "p_e" in capsys.readouterr().err
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["failures"][0]["params"] == {"p_e": 3.0}


def test_sweep_needs_axes(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--model", "null", "--out", str(tmp_path)])
    assert exc.value.code == 2


@pytest.mark.parametrize("figure,cells", [("fig3", 16), ("fig4", 8), ("fig5", 9), ("fig6", 12),
                                          ("fig7", 9), ("figA1", 9), ("figB1", 8), ("figB2", 12)])
def test_reproduce_cell_counts(tmp_path, figure, cells):
    out = tmp_path / figure
    base = tmp_path / "base.csv"
    base.write_text("community,size\na,1\nb,5\nc,40\n")
    assert main(["reproduce", figure, "--agents", "90", "--steps", "2", "--jobs", "1",
                 "--baseline", str(base), "--plot", "--out", str(out)]) == 0
    summary = read_rows(out / "summary.csv")
    assert len({r["cell_id"] for r in summary}) <= cells
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["seeds"]) == cells
    series = {r["series"] for r in read_rows(out / "ecdf.csv")}
    assert "baseline" in series
    assert (out / f"{figure}.svg").exists()


def test_reproduce_unknown_figure(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "fig99", "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert "fig99" in capsys.readouterr().err


def test_ingest_events(tmp_path):
    events = tmp_path / "events.csv"
    events.write_text("community,user,count\na,u1,5\na,u2,1\nb,u1,6\n")
    out = tmp_path / "i"
    assert main(["ingest", "--events", str(events), "--out", str(out)]) == 0
    assert read_rows(out / "baseline_sizes.csv") == [{"community": "a", "size": "1"},
                                                     {"community": "b", "size": "1"}]


def test_ingest_exit_codes(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("community,user,count\na,u1,x\n")
    assert main(["ingest", "--events", str(bad), "--out", str(tmp_path)]) == 3
    dup = tmp_path / "dup.csv"
    dup.write_text("community,size\na,1\na,2\n")
    assert main(["ingest", "--sizes", str(dup), "--out", str(tmp_path)]) == 4
    with pytest.raises(SystemExit):
        main(["ingest", "--out", str(tmp_path)])


def test_ecdf_and_compare(tmp_path):
    sim = tmp_path / "sizes.csv"
    sim.write_text("community_id,final_size\n0,1\n1,2\n2,4\n3,0\n")
    base = tmp_path / "base.csv"
    base.write_text("community,size\nx,3\ny,30\n")
    out = tmp_path / "e"
    assert main(["ecdf", "--sizes", str(sim), "--out", str(out)]) == 0
    rows = read_rows(out / "ecdf.csv")
    assert [(r["size"], float(r["frac_at_least"])) for r in rows] == [
        ("1", 1.0), ("2", 2 / 3), ("4", 1 / 3)]
    assert main(["compare", "--sim", str(sim), "--baseline", str(base), "--plot",
                 "--out", str(out)]) == 0
    overlay = read_rows(out / "overlay.csv")
    assert {r["series"] for r in overlay} == {"sim", "baseline"}
    assert (out / "overlay.svg").exists()
    assert [r["cell_id"] for r in read_rows(out / "summary.csv")] == ["sim", "baseline"]


def test_utility_grid(tmp_path):
    out = tmp_path / "u"
    assert main(["utility-grid", "--points", "5", "--plot", "--out", str(out)]) == 0
    assert len(read_rows(out / "utility_grid.csv")) == 25
    assert (out / "utility_grid.svg").exists()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("COMMSIZE_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["utility-grid", "--points", "3"]) == 0
    assert (tmp_path / "env" / "manifest.json").exists()
