import json

import numpy as np
import pytest

from bianchi_flow import nil_solution
from bianchi_flow.cli import CSV_COLUMNS, main, parse_grid

SU2 = ["--class", "su2", "--initial", "2,1.6,1.25"]


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return header, np.array([[float(v) for v in line.split(",")] for line in lines[1:]])


def test_simulate_su2(tmp_path, capsys):
    out, summary = tmp_path / "t.csv", tmp_path / "s.json"
    assert main(["simulate", *SU2, "--out", str(out), "--summary", str(summary)]) == 0
    assert "exponents=" in capsys.readouterr().err
    doc = json.loads(summary.read_text())
    assert doc["schema_version"] == 1
    exps = [doc["exponents"][k]["value"] for k in "ABC"]
    assert exps == pytest.approx([-0.5, 0.25, 0.25], abs=0.02)
    assert doc["eta"]["eta1"]["interval"][0] <= doc["eta"]["eta1"]["value"] <= doc["eta"]["eta1"]["interval"][1]
    assert doc["limit"]["reference"] == "B"
    assert "sl2r_label" not in doc
    header, data = read_csv(out)
    assert tuple(header) == CSV_COLUMNS
    assert np.all(np.diff(data[:, 0]) > 0)


def test_csv_round_trips_exactly(tmp_path):
    out = tmp_path / "t.csv"
    main(["simulate", *SU2, "--out", str(out)])
    first = out.read_text().splitlines()[2].split(",")
    assert all(float(repr(float(v))) == float(v) for v in first)
    assert any(len(v.replace(".", "").replace("-", "").lstrip("0")) >= 15 for v in first)


def test_byte_reproducible(tmp_path):
    paths = []
    for k in range(2):
        out, summary = tmp_path / f"t{k}.csv", tmp_path / f"s{k}.json"
        main(["simulate", *SU2, "--out", str(out), "--summary", str(summary)])
        paths.append((out.read_bytes(), summary.read_bytes()))
    assert paths[0] == paths[1]


def test_simulate_e11(tmp_path):
    summary = tmp_path / "s.json"
    main(["simulate", "--class", "e11", "--initial", "2,1,2", "--summary", str(summary)])
    doc = json.loads(summary.read_text())
    assert doc["t_plus"]["value"] == pytest.approx(0.09375, abs=1e-6)
    assert doc["case"] == "symmetric"
    assert "limit" not in doc


def test_simulate_nil_forward(tmp_path):
    out = tmp_path / "t.csv"
    main(["simulate", "--class", "nil", "--initial", "1,2,2", "--direction", "forward",
          "--horizon", "1", "--out", str(out)])
    _, data = read_csv(out)
    assert data[-1, 0] == 1.0
    np.testing.assert_allclose(data[-1, 1:4], nil_solution(1, 2, 2, 1.0).coeffs, rtol=1e-8)


def test_invalid_input_exit_code(capsys):
    assert main(["simulate", "--class", "su2", "--initial=-1,2,2"]) == 2
    assert main(["simulate", "--class", "su2", "--initial", "1,2"]) == 2
    assert main(["simulate", "--class", "su2"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--class", "h3", "--initial", "1,2,2"])
    assert exc.value.code == 2


def test_unreachable_tolerance_is_invalid_input():
    assert main(["simulate", *SU2, "--rel-tol", "1e-300"]) == 2


def test_integration_failure_exit_code(monkeypatch):
    import bianchi_flow.cli as cli

    def exhausted(*args, **kwargs):
        raise cli.IntegrationFailure("step budget exhausted")

    monkeypatch.setattr(cli, "integrate", exhausted)
    assert main(["simulate", *SU2]) == 3


def test_config_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"class": "e11", "initial": "2,1,2"}))
    assert main(["simulate", "--config", str(cfg)]) == 0
    assert "case=symmetric" in capsys.readouterr().err
    assert main(["simulate", "--config", str(cfg), "--initial", "2,2,1"]) == 0
    assert "case=generic" in capsys.readouterr().err
    cfg.write_text(json.dumps({"class": "e11", "nested": {"a": 1}}))
    assert main(["simulate", "--config", str(cfg)]) == 2


def test_verify_clean_and_faulted(capsys):
    assert main(["verify"]) == 0
    assert main(["verify", "--inject-fault", "sign-flip"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out and "invariants" in out


def test_classify_point_and_no_swap(capsys):
    assert main(["classify", "--initial", "2,2,1"]) == 0
    assert ",Q1,0," in capsys.readouterr().out
    assert main(["classify", "--initial", "2,1,2", "--no-swap"]) == 2
    assert main(["classify", "--initial", "2,1,2"]) == 0


def test_classify_grid_is_monotone(tmp_path):
    out = tmp_path / "labels.csv"
    assert main(["classify", "--grid", "x=0.5:2:17", "--out", str(out), "--workers", "2"]) == 0
    labels = [line.split(",")[3] for line in out.read_text().splitlines()[1:]]
    assert len(labels) == 17
    assert labels[0] == "Q2" and labels[-1] == "Q1"
    transitions = sum(a != b for a, b in zip(labels, labels[1:]))
    assert transitions == 1


def test_classify_bisect(tmp_path):
    summary = tmp_path / "b.json"
    assert main(["classify", "--bisect", "0.5:2", "--summary", str(summary)]) == 0
    doc = json.loads(summary.read_text())
    assert doc["width"] <= 1e-6
    assert set(doc["labels"]) == {"Q1", "Q2"}
    assert main(["classify", "--bisect", "2:3"]) == 2


def test_sweep_round_point_and_order(tmp_path):
    x = repr(4 ** (1 / 3))
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--class", "su2", "--grid", f"A={x}:3:3,B={x}:2:2", "--out", str(out)]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()]
    header, rows = rows[0], rows[1:]
    assert [int(r[0]) for r in rows] == list(range(6))
    first = dict(zip(header, rows[0]))
    assert first["case"] == "fixed-point" and first["exp_A"] == ""


@pytest.mark.slow
def test_sweep_10x10(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--class", "su2", "--grid", "A=1:4:10,B=0.8:3:10", "--out", str(out),
                 "--workers", "4"]) == 0
    lines = out.read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    assert len(rows) == 100
    for r in rows:
        assert r["status"] == "ok"
        if r["case"] == "generic":
            exps = [float(r[k]) for k in ("exp_A", "exp_B", "exp_C")]
            assert exps == pytest.approx([-0.5, 0.25, 0.25], abs=0.02)


def test_one_point_sweep_matches_simulate(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    main(["sweep", "--class", "su2", "--grid", "A=2:2:1,B=1.6:1.6:1", "--out", str(out)])
    row = dict(zip(*[line.split(",") for line in out.read_text().splitlines()]))
    summary = tmp_path / "s.json"
    main(["simulate", "--class", "su2", "--initial", f"2,1.6,{row['C0']}", "--summary", str(summary)])
    doc = json.loads(summary.read_text())
    assert float(row["t_plus"]) == doc["t_plus"]["value"]


def test_grid_parsing():
    pts = parse_grid("A=1:2:2,C=1:1:1")
    assert pts == [(1.0, 4.0, 1.0), (2.0, 2.0, 1.0)]
    with pytest.raises(ValueError):
        parse_grid("A=1:2:2")
    with pytest.raises(ValueError):
        parse_grid("Q=1:2:2,A=1:1:1")


def test_summary_on_stdout_is_pure_json(capsys):
    assert main(["simulate", "--class", "su2", "--initial", "2,1.6,1.25", "--summary", "-", "--out", "/dev/null"]) == 0
    assert json.loads(capsys.readouterr().out)["case"] == "generic"
