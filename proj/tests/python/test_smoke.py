# SPDX-License-Identifier: Apache-2.0
import json
import math

import pytest

import sm2


def test_energy_per_epoch():
    assert sm2.energy_per_epoch([100.0, 200.0], 3600.0) == 150.0
    with pytest.raises(sm2.MeasurementError):
        sm2.energy_per_epoch([], 1.0)


def test_power_model_window():
    pm = sm2.SimPowerModel()
    cands = [8, 16, 32, 64, 128, 256, 512, 1024]
    per_sample = {b: pm.power(b) / pm.throughput(b) for b in cands}
    assert min(per_sample, key=per_sample.get) == 256
    assert pm.epoch_energy_wh(256, 20000) > 0


def test_objective_and_grid():
    assert sm2.objective_score(0.8, 0.4, 0.6) == pytest.approx(0.725, abs=1e-15)
    with pytest.raises(sm2.ConfigError, match="objective.alpha"):
        sm2.objective_score(0.5, 0.5, 0.5, alpha=1.5)
    g = sm2.lr_grid()
    assert len(g) == 20 and g[0] == 0.001 and g[-1] == 1.0
    assert sm2.loss_curvature([0, 1, 4, 9]) == [2, 2]


def test_select_stable_lr_shift():
    g = sm2.lr_grid()
    L = [40 - 2 * i if i <= 12 else 16 + 4 ** (i - 12) for i in range(20)]
    a = sm2.select_stable_lr(L, g, 5)
    b = sm2.select_stable_lr([v + 1024 for v in L], g, 5)
    assert a["window_begin"] == b["window_begin"] == 6
    assert a["selected_lr"] == g[11]


def test_compare_totals():
    row = sm2.compare_totals("lstm", 28.0, 14.8, 16.4)
    assert round(row["reduction_pct"]) == 47
    assert row["symmetric_parity"] == pytest.approx(1.108, abs=1e-3)


def test_run_and_validate(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "data": {"kind": "two_gaussians", "n": 8000, "dim": 4},
        "batch_candidates": [8, 16, 32, 64],
    }))
    assert "lr_grid.count = 20" in sm2.validate(cfg)
    out = tmp_path / "out"
    text = sm2.run(cfg, out_dir=out, seed=4)
    assert "final config:" in text
    assert (out / "ledger.jsonl").exists()
    summary = sm2.ledger_summary(out / "ledger.jsonl")
    assert summary == (out / "summary.txt").read_text()

    bad = tmp_path / "bad.json"
    bad.write_text('{"batch_candidates": [8, 12]}')
    with pytest.raises(sm2.ConfigError, match="multiple"):
        sm2.validate(bad)
    with pytest.raises(sm2.IoError):
        sm2.validate(tmp_path / "missing.json")
    assert issubclass(sm2.ConfigError, sm2.Error)
    assert not math.isnan(sm2.energy_per_epoch([1.0], 1.0))
