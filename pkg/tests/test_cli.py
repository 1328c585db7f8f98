import json
import os

import pytest

from circlebreak.cli import main

PQ_GOLDEN_T = 0.6949140919153628  # certified by the tune example config

PQ_MAP = {"kind": "pq", "a": 0.2, "c": 0.6, "sigma_a": 2.0, "sigma_c": 0.8}
PQ_TUNED = dict(PQ_MAP, translation=PQ_GOLDEN_T)


def run(tmp_path, command, doc, name="cfg.json", extra=()):
    cfg = tmp_path / name
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "out"
    out.mkdir(exist_ok=True)
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def test_rotnum_rational_third(tmp_path):
    code, out = run(
        tmp_path,
        "rotnum",
        {
            "map": {"kind": "rotation", "translation": 0.3333333333333333},
            "depth": 40,
            "estimate_n": 500,
        },
    )
    assert code == 0
    doc = json.loads((out / "rotnum.json").read_text())
    assert doc["farey"]["rational"] == [1, 3]
    assert doc["quotients"] == [3]
    lines = (out / "cf_table.csv").read_text().splitlines()
    assert lines[0] == "n,k_n,p_n,q_n,err"
    assert len(lines) == 2
    assert lines[1].startswith("1,3,1,3,")


def test_rotnum_golden_quotients(tmp_path):
    code, out = run(
        tmp_path,
        "rotnum",
        {
            "map": {"kind": "rotation", "translation": 0.6180339887498949},
            "depth": 20,
            "estimate_n": 0,
        },
    )
    assert code == 0
    doc = json.loads((out / "rotnum.json").read_text())
    assert doc["quotients"][:10] == [1] * 10
    assert doc["farey"]["rational"] is None


def test_unknown_key_exits_2_without_files(tmp_path):
    code, out = run(
        tmp_path,
        "rotnum",
        {"map": {"kind": "rotation", "translation": 0.3}, "depht": 10},
    )
    assert code == 2
    assert os.listdir(out) == []


def test_malformed_json_exits_2(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    out = tmp_path / "out"
    out.mkdir()
    assert main(["rotnum", "--config", str(cfg), "--out", str(out)]) == 2
    assert os.listdir(out) == []


def test_missing_config_exits_2(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    code = main(
        ["rotnum", "--config", str(tmp_path / "absent.json"), "--out", str(out)]
    )
    assert code == 2
    assert os.listdir(out) == []


def test_extended_precision_refused(tmp_path):
    code, out = run(
        tmp_path,
        "rotnum",
        {"map": {"kind": "rotation", "translation": 0.3}},
        extra=("--precision", "extended"),
    )
    assert code == 2
    assert os.listdir(out) == []


def test_tune_rejects_pinned_translation(tmp_path):
    code, out = run(
        tmp_path,
        "tune",
        {"map": PQ_TUNED, "target_rho": {"cf": [1] * 30}, "tol": 1e-6},
    )
    assert code == 2
    assert os.listdir(out) == []


def test_budget_exhaustion_exits_3_without_files(tmp_path):
    code, out = run(
        tmp_path,
        "rotnum",
        {
            "map": {"kind": "rotation", "translation": 0.6180339887498949},
            "depth": 40,
            "estimate_n": 0,
            "cap": 100_000,
        },
    )
    assert code == 3
    assert os.listdir(out) == []


def test_unreachable_tolerance_exits_5(tmp_path):
    code, out = run(
        tmp_path,
        "tune",
        {
            "map": {"kind": "pl", "a": 0.2, "c": 0.6, "slope_ratio": 3.0},
            "target_rho": {"cf": [1] * 30},
            "tol": 1e-10,
            "cap": 2000,
        },
    )
    assert code == 5
    assert os.listdir(out) == []


def test_partition_outputs(tmp_path, capsys):
    code, out = run(
        tmp_path,
        "partition",
        {"map": PQ_TUNED, "rho": {"cf": [1] * 12}, "x0": 0.05, "n": 5},
    )
    assert code == 0
    printed = capsys.readouterr().out.splitlines()
    assert sorted(os.path.basename(p) for p in printed) == [
        "partition.csv",
        "partition.json",
    ]
    doc = json.loads((out / "partition.json").read_text())
    assert (doc["q_n"], doc["q_nm1"]) == (8, 5)
    assert doc["elements"] == 13
    lines = (out / "partition.csv").read_text().splitlines()
    assert lines[0] == "n,rank_tag,index,left,length"
    assert len(lines) == 1 + 13


def test_distortion_explicit_rows(tmp_path):
    code, out = run(
        tmp_path,
        "distortion",
        {
            "map": PQ_MAP,
            "quadruples": [
                [0.25, 0.26, 0.27, 0.28],
                [0.195, 0.2, 0.205, 0.21],
            ],
        },
    )
    assert code == 0
    doc = json.loads((out / "distortion.json").read_text())
    assert doc["count"] == 2
    assert doc["closed_form_rows"] == 1
    lines = (out / "distortion.csv").read_text().splitlines()
    assert lines[0] == "z1,z2,z3,z4,Cr,Dist,predicted,residual,bound"
    assert len(lines) == 3
    assert lines[1].split(",")[6] == "1"  # break-free row predicts 1


def test_distortion_needs_input(tmp_path):
    code, out = run(tmp_path, "distortion", {"map": PQ_MAP})
    assert code == 2
    assert os.listdir(out) == []


def test_measure_outputs_and_determinism(tmp_path):
    doc = {
        "map": PQ_TUNED,
        "rho": {"cf": [1] * 30},
        "x0": 0.05,
        "n": 5,
        "points": 400,
    }
    code1, out1 = run(tmp_path, "measure", doc, name="m1.json")
    cfg2 = tmp_path / "m2.json"
    cfg2.write_text(json.dumps(doc))
    out2 = tmp_path / "out2"
    out2.mkdir()
    code2 = main(["measure", "--config", str(cfg2), "--out", str(out2)])
    assert code1 == 0 and code2 == 0
    for name in ("measure.json", "measure.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    rep = json.loads((out1 / "measure.json").read_text())
    assert rep["mass_sum"] == pytest.approx(1.0, abs=1e-10)
    assert abs(rep["identity_residual"]) < 1e-9
    for rank in rep["ranks"].values():
        assert rank["spread"] < 1e-10
    lines = (out1 / "measure.csv").read_text().splitlines()
    assert lines[0] == "n,rank,index,length,mass,density"
    assert len(lines) == 1 + 13


def test_stale_artifacts_replaced_atomically(tmp_path):
    doc = {
        "map": {"kind": "rotation", "translation": 0.3333333333333333},
        "depth": 10,
        "estimate_n": 0,
    }
    code, out = run(tmp_path, "rotnum", doc, name="a.json")
    assert code == 0
    first = (out / "rotnum.json").read_bytes()
    (out / "rotnum.json").write_bytes(b"garbage")
    code, out = run(tmp_path, "rotnum", doc, name="a.json")
    assert code == 0
    assert (out / "rotnum.json").read_bytes() == first
    assert not [p for p in os.listdir(out) if p.startswith(".stage-")]
