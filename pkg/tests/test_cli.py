from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from phaseless.cli import main
from phaseless.grid import GridField
from phaseless.scenario import headline_dict
from phaseless.transforms import SpectrogramSamples

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture
def headline(tmp_path):
    p = tmp_path / "h.json"
    assert main(["init", str(p)]) == 0
    return p


def _variant(tmp_path, name, **changes):
    d = headline_dict()
    d.update(changes)
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(d))
    return p


def test_gate_pass(headline, capsys):
    assert main(["gate", str(headline)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["pass"] and out["gamma_gate"]["pass"]


def test_gate_fail_sparse_gamma(tmp_path, capsys):
    p = _variant(tmp_path, "g", gamma={"dim": 1, "generator": [[0.3]]})
    assert main(["gate", str(p)]) == 1
    assert json.loads(capsys.readouterr().out)["gamma_gate"]["pass"] is False


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["gate", str(p)]) == 2


def test_missing_file(tmp_path):
    assert main(["gate", str(tmp_path / "none.json")]) == 2


def test_unknown_command_and_demo(tmp_path):
    assert main(["frobnicate"]) == 2
    assert main(["demo", "nope", str(tmp_path / "x")]) == 2


def test_sample_deterministic_and_roundtrip(headline, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sample", str(headline), str(a)]) == 0
    assert main(["sample", str(headline), str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    s = SpectrogramSamples.read(a)
    assert s.values.shape == (17, 320)


def test_sample_zero_signal(tmp_path):
    p = _variant(tmp_path, "z", signal={"kind": "zero"})
    out = tmp_path / "z.csv"
    assert main(["sample", str(p), str(out)]) == 0
    assert not np.any(SpectrogramSamples.read(out).values)


def test_sample_support_violation(tmp_path):
    d = headline_dict()
    from phaseless.scenario import scenario_from_dict

    grid = scenario_from_dict(d).grid.padded(8)
    GridField(grid, np.ones(grid.size)).write(tmp_path / "wide.gfld")
    p = _variant(tmp_path, "w", signal={"kind": "from_file", "path": "wide.gfld"})
    assert main(["sample", str(p), str(tmp_path / "o.csv")]) == 3


def test_recover_headline(headline, tmp_path, capsys):
    s = tmp_path / "s.csv"
    main(["sample", str(headline), str(s)])
    capsys.readouterr()
    prefix = tmp_path / "run"
    assert main(["recover", str(s), str(headline), str(prefix)]) == 0
    err = float(capsys.readouterr().out.split()[-1])
    assert err <= 1e-3
    report = json.loads(Path(f"{prefix}.report.json").read_text())
    assert report["thresholds_met"] and report["aligned_error"] == pytest.approx(err, rel=1e-6)
    est = GridField.read(f"{prefix}.estimate.gfld")
    assert est.grid.shape == (129,)


def test_recover_enforced_gate(tmp_path):
    p = _variant(tmp_path, "g", gamma={"dim": 1, "generator": [[0.3]]})
    s = tmp_path / "s.csv"
    assert main(["sample", str(p), str(s)]) == 0
    assert main(["recover", str(s), str(p), str(tmp_path / "r")]) == 4
    assert main(["recover", str(s), str(p), str(tmp_path / "r"), "--gate-policy", "warn"]) in (0, 5)


def test_recover_zero_signal(tmp_path):
    p = _variant(tmp_path, "z", signal={"kind": "zero"})
    s = tmp_path / "s.csv"
    main(["sample", str(p), str(s)])
    assert main(["recover", str(s), str(p), str(tmp_path / "r")]) == 5


def test_recover_horizon_mismatch(headline, tmp_path):
    s = tmp_path / "s.csv"
    main(["sample", str(headline), str(s)])
    assert main(["recover", str(s), str(headline), str(tmp_path / "r"), "--lambda-horizon", "33"]) == 2


def test_sample_horizon_flag(headline, tmp_path):
    s = tmp_path / "s.csv"
    assert main(["sample", str(headline), str(s), "--lambda-horizon", "33"]) == 0
    assert SpectrogramSamples.read(s).horizon == 33


def test_threads_env_fallback(headline, tmp_path, monkeypatch, capsys):
    s = tmp_path / "s.csv"
    main(["sample", str(headline), str(s)])
    main(["recover", str(s), str(headline), str(tmp_path / "a")])
    monkeypatch.setenv("PHASELESS_THREADS", "2")
    main(["recover", str(s), str(headline), str(tmp_path / "b")])
    a = GridField.read(tmp_path / "a.estimate.gfld")
    b = GridField.read(tmp_path / "b.estimate.gfld")
    assert np.array_equal(a.values, b.values)


@pytest.mark.parametrize("name", ["zero_flip", "aliasing", "gram_sweep", "airy_profile"])
def test_demos_write_csv(name, tmp_path, capsys):
    prefix = tmp_path / "d"
    assert main(["demo", name, str(prefix)]) == 0
    summary = json.loads(capsys.readouterr().out)
    with open(f"{prefix}.{name}.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) > 2
    if name == "zero_flip":
        assert summary["modulus_gap"] <= 1e-12 and summary["aligned_distance"] >= 0.1
    if name == "aliasing":
        assert summary["sample_deviation"] <= 1e-8 and summary["aligned_distance"] > 0.1


def test_demo_bytes_deterministic(tmp_path, capsys):
    main(["demo", "gram_sweep", str(tmp_path / "a")])
    main(["demo", "gram_sweep", str(tmp_path / "b")])
    assert Path(f"{tmp_path}/a.gram_sweep.csv").read_bytes() == Path(f"{tmp_path}/b.gram_sweep.csv").read_bytes()


def test_gram_command(headline, capsys):
    assert main(["gram", str(headline), "--node-spacing", "0.25"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["sigma_min"] > 0 and out["nodes"] == 9


def test_window_eval(capsys):
    assert main(["window", "eval", '{"family": "hermite", "k": [0]}', "0", "0.5"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["x0", "re", "im"]
    assert float(rows[1][1]) == pytest.approx(2**0.25)


def test_window_eval_bad_json():
    assert main(["window", "eval", "{oops", "0"]) == 2


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_scenarios_load(path):
    assert main(["gate", str(path)]) in (0, 1)
