import json
import subprocess
import sys

import numpy as np
import pytest

from temrec.cli import main
from temrec.experiments import (
    encode_with_budget,
    naive_spike_marker,
    naive_tem_marker,
    spike_threshold_marker,
    svp_demo,
    sweep_spikes,
    tem_threshold_marker,
)
from temrec.fourier_model import CoefficientMatrix, PeriodicExpBasis, random_ensemble
from temrec.recon_known import feasibility
from temrec.scene import random_scene, rect_grid


def read_rows(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


# --------------------------------------------------------------- encode/decode

def test_encode_decode_round_trip(tmp_path):
    spikes = tmp_path / "spikes.csv"
    truth = tmp_path / "truth.csv"
    rec = tmp_path / "rec.csv"
    assert main([
        "encode", "--scene-dims", "1,1,1", "--scene-seed", "2",
        "--grid-rows", "3", "--grid-cols", "3", "--spikes-per-tem", "3",
        "--seed", "0", "--output", str(spikes), "--truth", str(truth),
    ]) == 0
    assert main([
        "decode", "--spikes", str(spikes), "--mode", "known-init",
        "--output", str(rec),
    ]) == 0
    t = CoefficientMatrix.from_csv(truth)
    r = CoefficientMatrix.from_csv(rec)
    err = np.linalg.norm(r.values - t.values) ** 2 / np.linalg.norm(t.values) ** 2
    assert err < 1e-8
    diag = json.loads((tmp_path / "rec.diag.json").read_text())
    assert diag["feasible"] is True


def test_encode_is_deterministic(tmp_path):
    args = [
        "encode", "--scene-dims", "1,1,1", "--scene-seed", "4",
        "--grid-rows", "3", "--grid-cols", "3", "--spikes-per-tem", "4",
        "--seed", "9",
    ]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--output", str(a)]) == 0
    assert main(args + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_decode_empty_spikes_reports_underdetermined(tmp_path):
    spikes = tmp_path / "spikes.csv"
    rec = tmp_path / "rec.csv"
    assert main([
        "encode", "--scene-dims", "1,1,1", "--scene-seed", "2",
        "--grid-rows", "3", "--grid-cols", "3", "--spikes-per-tem", "3",
        "--output", str(spikes),
    ]) == 0
    spikes.write_text("tem_id,spike_index,time\n")  # drop all spikes
    assert main([
        "decode", "--spikes", str(spikes), "--mode", "known-init",
        "--output", str(rec),
    ]) == 0
    diag = json.loads((tmp_path / "rec.diag.json").read_text())
    assert diag["feasible"] is False
    assert diag["rank"] == 0


def test_decode_unknown_init_round_trip(tmp_path):
    spikes = tmp_path / "spikes.csv"
    truth = tmp_path / "truth.csv"
    rec = tmp_path / "rec.csv"
    assert main([
        "encode", "--scene-dims", "1,1,1", "--scene-seed", "6",
        "--grid-rows", "3", "--grid-cols", "3", "--spikes-per-tem", "5",
        "--seed", "1", "--output", str(spikes), "--truth", str(truth),
    ]) == 0
    assert main([
        "decode", "--spikes", str(spikes), "--mode", "unknown-init",
        "--output", str(rec),
    ]) == 0
    t = CoefficientMatrix.from_csv(truth)
    r = CoefficientMatrix.from_csv(rec)
    err = np.linalg.norm(r.values - t.values) ** 2 / np.linalg.norm(t.values) ** 2
    assert err < 1e-8


def test_require_feasible_exit_code(tmp_path):
    spikes = tmp_path / "spikes.csv"
    rec = tmp_path / "rec.csv"
    assert main([
        "encode", "--scene-dims", "1,1,1", "--scene-seed", "2",
        "--grid-rows", "3", "--grid-cols", "3", "--spikes-per-tem", "1",
        "--output", str(spikes),
    ]) == 0
    assert main([
        "decode", "--spikes", str(spikes), "--mode", "known-init",
        "--require-feasible", "--output", str(rec),
    ]) == 3


def test_config_errors_exit_two(tmp_path):
    assert main(["decode", "--spikes", "missing.csv", "--mode", "known-init",
                 "--output", str(tmp_path / "x.csv")]) == 2
    assert main(["encode", "--output", str(tmp_path / "y.csv")]) == 2  # no scene
    assert main(["no-such-command"]) == 2


def test_config_file_merge_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "scene_dims": "1,1,1", "scene_seed": 2, "grid_rows": 3, "grid_cols": 3,
        "spikes_per_tem": 3, "seed": 0,
    }))
    out1 = tmp_path / "one.csv"
    out2 = tmp_path / "two.csv"
    assert main(["encode", "--config", str(cfg), "--output", str(out1)]) == 0
    # flag overrides the config budget
    assert main(["encode", "--config", str(cfg), "--spikes-per-tem", "5",
                 "--output", str(out2)]) == 0
    n1 = len(out1.read_text().splitlines()) - 1
    n2 = len(out2.read_text().splitlines()) - 1
    assert n1 == 9 * 3 and n2 == 9 * 5


def test_malformed_config_exits_two(tmp_path):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    assert main(["encode", "--config", str(cfg), "--output", "x.csv"]) == 2


def test_module_entry_point_runs(tmp_path):
    out = tmp_path / "gram.json"
    result = subprocess.run(
        [sys.executable, "-m", "temrec.cli", "gram-check", "--k1", "1", "--k2", "1",
         "--output", str(out)],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert json.loads(out.read_text())["is_scaled_identity"] is True


# -------------------------------------------------------------------- sweeps

def test_sweep_spikes_csv_and_markers(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main([
        "sweep-spikes", "--scene-dims", "1,1,1", "--scene-seed", "0",
        "--grids", "3x3,3x1", "--budgets", "0..4", "--seeds", "0,1",
        "--output", str(out),
    ]) == 0
    rows = read_rows(out)
    assert len(rows) == 2 * 5 * 2
    # threshold markers equal feasibility() computations exactly
    for row in rows:
        n_sensors = {"3x3": 9, "3x1": 3}[row["config"]]
        capped = spike_threshold_marker(n_sensors, 3, 9)
        naive = naive_spike_marker(n_sensors, 3, 9)
        assert row["capped_threshold"] == ("" if capped is None else str(capped))
        assert row["naive_threshold"] == str(naive)
        if row["sweep_value"] == "0":
            assert float(row["relative_error"]) == 1.0
            assert row["feasible"] == "false"


def test_sweep_spikes_error_drops_at_marker(tmp_path):
    scene = random_scene(1, 1, 1, seed=0)
    grids = {"3x3": rect_grid(3, 3, 1.0, 1.0)}
    points = sweep_spikes(scene, grids, budgets=[2, 3], seeds=[0, 1])
    by_budget = {}
    for p in points:
        by_budget.setdefault(p.sweep_value, []).append(p.relative_error)
    assert spike_threshold_marker(9, 3, 9) == 3
    assert min(by_budget[2]) > 1e-2
    assert max(by_budget[3]) < 1e-8


def test_sweep_tems_markers(tmp_path):
    out = tmp_path / "tems.csv"
    assert main([
        "sweep-tems", "--scene-dims", "1,1,1", "--scene-seed", "0",
        "--budgets", "3", "--tem-counts", "3,6,9,12", "--seeds", "0",
        "--output", str(out),
    ]) == 0
    rows = read_rows(out)
    assert len(rows) == 4
    assert all(r["capped_threshold"] == str(tem_threshold_marker(3, 3, 9)) for r in rows)
    assert all(r["naive_threshold"] == str(naive_tem_marker(3, 3, 9)) for r in rows)
    errs = {int(r["sweep_value"]): float(r["relative_error"]) for r in rows}
    assert errs[9] < 1e-8  # 9 machines x 3 spikes = 27 = unknowns
    assert errs[6] > 1e-2


def test_one_machine_multi_source_infeasible():
    report = feasibility([100], n_basis=5, n_sources=2)
    assert not report.feasible


def test_svp_demo_csv(tmp_path):
    out = tmp_path / "svp.csv"
    assert main([
        "svp-demo", "--budgets", "2,9", "--seeds", "0,1,2",
        "--channels", "4", "--rank", "1", "--n-basis", "5",
        "--max-iters", "3000", "--output", str(out),
    ]) == 0
    rows = read_rows(out)
    assert len(rows) == 2 * 3 * 3
    assert {r["scenario"] for r in rows} == {"S1", "S2", "S3"}
    assert all(r["jk_threshold"] == "5" and r["ik_threshold"] == "20" for r in rows)
    s2_at_9 = [float(r["relative_error"]) for r in rows
               if r["scenario"] == "S2" and r["spikes_per_tem"] == "9"]
    assert max(s2_at_9) < 1e-8


def test_degenerate_rank_equals_channels_thresholds():
    points = svp_demo([2], [0], n_channels=2, rank=2, n_basis=3, svp_max_iters=50)
    assert all(p.jk_threshold == p.ik_threshold == 6 for p in points)


def test_gram_check_cli(tmp_path):
    out = tmp_path / "gram.json"
    assert main(["gram-check", "--k1", "2", "--k2", "1", "--output", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["is_scaled_identity"] is True
    assert payload["n_sensors"] == 15
    assert main(["gram-check", "--k1", "1", "--k2", "1", "--jitter", "0.01",
                 "--seed", "3", "--output", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["is_scaled_identity"] is False
    assert payload["numerical_rank"] == 9


# ----------------------------------------------------------- budget mechanics

def test_truncation_never_exceeds_threshold_target():
    basis = PeriodicExpBasis(1.0, 2)
    for seed in range(5):
        ens = random_ensemble(1, 1, basis, 0.4, seed)
        signal = ens.channel(0)
        for target in (2, 4, 7):
            _, trunc = encode_with_budget(
                signal, 0.4, target, (0.0, 1.0), 1.0, 1.0, mechanism="truncation"
            )
            assert trunc.n_spikes == target
            _, free = encode_with_budget(
                signal, 0.4, target, (0.0, 1.0), 1.0, 1.0, mechanism="threshold"
            )
            assert trunc.n_spikes <= max(free.n_spikes, target)


def test_threshold_mechanism_exact_for_zero_signal():
    from temrec.fourier_model import ChannelSignal

    signal = ChannelSignal(PeriodicExpBasis(1.0, 1), np.zeros(3, complex))
    params, train = encode_with_budget(
        signal, 0.0, 5, (0.0, 1.0), 1.0, 1.0, mechanism="threshold"
    )
    assert train.n_spikes == 5
    np.testing.assert_allclose(train.times, np.arange(1, 6) / 5.0, atol=1e-12)


def test_unknown_budget_mechanism_rejected():
    from temrec.fourier_model import ChannelSignal

    signal = ChannelSignal(PeriodicExpBasis(1.0, 1), np.zeros(3, complex))
    with pytest.raises(ValueError):
        encode_with_budget(signal, 0.0, 3, (0.0, 1.0), 1.0, 1.0, mechanism="magic")
