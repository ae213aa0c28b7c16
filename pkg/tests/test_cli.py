import csv
import json

import pytest

from atomline.cli import main
from atomline.signal_model import LineSpectrum, synthesize


@pytest.fixture
def scenario(tmp_path):
    n = 130
    sigma = 1e-3
    obj = {"n": n, "freqs": [0.2, 0.2 + 3.0 / n], "coeffs": [[1.0, 0.0], [0.0, 1.0]],
           "sigma": sigma, "seed": 7}
    path = tmp_path / "samples.json"
    path.write_text(json.dumps(obj))
    return path, obj


def test_kernel_tables_csv(tmp_path, capsys):
    out = tmp_path / "tables.csv"
    assert main(["kernel-tables", "--n", "130", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 53
    assert set(rows[0]) == {"quantity", "paper_value", "computed_value", "ratio"}
    for r in rows:
        assert abs(float(r["ratio"]) - 1.0) <= 5e-3


def test_solve_witness_and_blind(tmp_path, scenario):
    samples, obj = scenario
    out = tmp_path / "result.json"
    assert main(["solve", "--input", str(samples), "--lambda-x", "3",
                 "--mode", "witness", "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert res["converged"]
    assert len(res["freqs"]) == 2
    assert res["errors"]["max_freq"] < 1e-4

    out2 = tmp_path / "blind.json"
    assert main(["solve", "--input", str(samples), "--lambda-x", "3",
                 "--mode", "blind", "--k", "2", "--out", str(out2)]) == 0
    res2 = json.loads(out2.read_text())
    assert res2["converged"] and len(res2["freqs"]) == 2


def test_certify_round_trip(tmp_path, scenario):
    samples, obj = scenario
    result = tmp_path / "result.json"
    main(["solve", "--input", str(samples), "--lambda-x", "3",
          "--mode", "witness", "--out", str(result)])
    lam = json.loads(result.read_text())["lambda"]
    report = tmp_path / "report.json"
    profile = tmp_path / "profile.csv"
    figure = tmp_path / "certificate.png"
    code = main(["certify", "--samples", str(samples), "--estimate", str(result),
                 "--lambda", str(lam), "--out", str(report),
                 "--profile-csv", str(profile), "--figure", str(figure)])
    assert code == 0
    rep = json.loads(report.read_text())
    assert rep["verdict"]
    rows = list(csv.DictReader(profile.open()))
    assert rows and set(rows[0]) == {"f", "absQ"}
    assert figure.stat().st_size > 0


def test_certify_fails_for_wrong_estimate(tmp_path, scenario):
    samples, obj = scenario
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"freqs": [0.8, 0.9],
                                 "coeffs": [[1.0, 0.0], [1.0, 0.0]]}))
    code = main(["certify", "--samples", str(samples), "--estimate", str(wrong),
                 "--lambda", "1e-3"])
    assert code == 1


def test_baseline_commands(tmp_path, scenario):
    samples, obj = scenario
    out = tmp_path / "music.json"
    assert main(["baseline", "--method", "music", "--samples", str(samples),
                 "--k", "2", "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert res["errors"]["max_freq"] < 1e-3

    out_mle = tmp_path / "mle.json"
    assert main(["baseline", "--method", "mle", "--samples", str(samples),
                 "--out", str(out_mle)]) == 0
    assert json.loads(out_mle.read_text())["errors"]["max_freq"] < 1e-4

    out_crb = tmp_path / "crb.json"
    assert main(["baseline", "--method", "crb", "--samples", str(samples),
                 "--out", str(out_crb)]) == 0
    res = json.loads(out_crb.read_text())
    assert len(res["per_frequency_variance"]) == 2


def test_phase_command_outputs(tmp_path):
    cfg = {"n": 130, "k": 2, "sep_min": 2.5, "trials": 2, "seed": 5,
           "x_grid": [2.0], "gamma_grid": [1e-4], "modes": ["atomic_witness"]}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "outdir"
    assert main(["phase", "--config", str(cfg_path), "--out", str(out)]) == 0
    for name in ("rates.csv", "trials.csv", "manifest.json", "phase.png"):
        assert (out / name).exists(), name
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_sha256"]
    assert "runtime_ms" in manifest


def test_crb_compare_command(tmp_path):
    cfg = {"n": 130, "k": 2, "sep_min": 2.5, "trials": 2, "seed": 6,
           "x_grid": [2.0], "gamma_grid": [1e-4],
           "modes": ["atomic_witness", "music"],
           "delta_grid": [4.0], "snr_db_grid": [30.0]}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "outdir"
    assert main(["crb-compare", "--config", str(cfg_path), "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "crb_compare.csv").open()))
    assert {r["method"] for r in rows} == {"atomic_witness", "music"}
    assert (out / "crb_compare.png").exists()


def test_scaling_command(tmp_path):
    out = tmp_path / "outdir"
    assert main(["scaling", "--n", "130,260,520", "--trials", "3",
                 "--sigma", "1e-3", "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "scaling.csv").open()))
    assert [r["n"] for r in rows] == ["130", "260", "520"]
    assert (out / "scaling.png").exists()


def test_solve_blind_infers_order(tmp_path, scenario):
    samples, obj = scenario
    out = tmp_path / "blind_auto.json"
    assert main(["solve", "--input", str(samples), "--lambda-x", "3",
                 "--mode", "blind", "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert len(res["freqs"]) == 2


def test_solve_accepts_raw_samples_blind(tmp_path):
    n = 130
    y = synthesize(LineSpectrum([0.25], [2.0]), n)
    obj = {"n": n, "values": [[v.real, v.imag] for v in y.values]}
    path = tmp_path / "raw.json"
    path.write_text(json.dumps(obj))
    out = tmp_path / "res.json"
    assert main(["solve", "--input", str(path), "--lambda", "1e-4",
                 "--mode", "blind", "--k", "1", "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert abs(res["freqs"][0] - 0.25) < 1e-6
