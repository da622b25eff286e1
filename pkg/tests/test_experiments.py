import os
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import spearmanr

from mrfcs.cli import _study_configs, main
from mrfcs.config import experiment_from_raw, parse_config_text
from mrfcs.experiments import (aggregate_runs, build_dict, build_sequence,
                               matching_accuracy, run_seeds, run_single)
from tests.test_cli import TINY_CFG


def tiny_config(**overrides):
    cfg = experiment_from_raw(parse_config_text(TINY_CFG))
    return replace(cfg, **overrides) if overrides else cfg


def test_strategy_study_settings_include_baseline_and_c_values():
    labels = [label for label, _ in _study_configs("strategy", tiny_config())]
    assert labels[0] == "independent"
    assert labels[1:] == ["conditional c=2", "conditional c=4",
                          "conditional c=6", "conditional c=8"]


def test_metric_study_settings():
    pairs = list(_study_configs("metric", tiny_config()))
    assert [p[0] for p in pairs] == ["l2", "rca"]
    assert pairs[0][1].methods == ("mrf", "csmrf")
    assert pairs[1][1].methods == ("mrf", "csmrf_ml")


def test_unknown_study_rejected():
    with pytest.raises(ValueError):
        list(_study_configs("bogus", tiny_config()))


def test_ratio_study_psnr_trend_loosely_monotone():
    # oracle-limit trend: more rows per frame should improve the match on
    # average; asserted loosely via a positive rank correlation of the
    # mean PSNR over the three parameter maps
    cfg = tiny_config(methods=("mrf",), seeds=(1, 2, 3, 4, 5))
    rows_settings = []
    psnrs = []
    for label, sub in _study_configs("ratio", cfg):
        runs = run_seeds(sub, threads=1)
        agg = aggregate_runs(runs)
        rows_settings.append(sub.rows_per_frame)
        psnrs.append(np.mean([agg[("mrf", name)]["psnr_mean"]
                              for name in ("t1", "t2", "b0")]))
    rho, _ = spearmanr(rows_settings, psnrs)
    assert rho > 0


def test_run_single_shares_reconstruction_consistently():
    # the shared-recon fast path must reproduce run_csmrf exactly
    from mrfcs.experiments import (masks_for, measurements_for, phantom_maps,
                                   pipeline_config)
    from mrfcs.pipeline import run_csmrf
    cfg = tiny_config(methods=("csmrf", "csmrf_ml"))
    seq = build_sequence(cfg)
    dictionary = build_dict(cfg, seq)
    out = run_single(cfg, 1, seq, dictionary)
    maps = phantom_maps(cfg, 1)
    masks = masks_for(cfg, 1)
    meas = measurements_for(cfg, maps, seq, masks, noise_seed=1)
    direct = run_csmrf(meas, dictionary, metric=out.metric, cfg=pipeline_config(cfg))
    np.testing.assert_array_equal(out["csmrf_ml"][0].atom_map, direct.atom_map)
    np.testing.assert_allclose(out["csmrf_ml"][0].maps.t1, direct.maps.t1, atol=0)


def test_matching_accuracy_bounds():
    cfg = tiny_config(methods=("oracle",))
    seq = build_sequence(cfg)
    dictionary = build_dict(cfg, seq)
    out = run_single(cfg, 1, seq, dictionary)
    acc = matching_accuracy(out["oracle"][0], out.assignment)
    assert acc == 1.0


def test_threads_do_not_change_results():
    cfg = tiny_config(methods=("mrf",), seeds=(1, 2))
    serial = run_seeds(cfg, threads=1)
    threaded = run_seeds(cfg, threads=2)
    for seed in (1, 2):
        np.testing.assert_array_equal(serial[seed]["mrf"][0].atom_map,
                                      threaded[seed]["mrf"][0].atom_map)
        np.testing.assert_array_equal(serial[seed]["mrf"][0].maps.t1,
                                      threaded[seed]["mrf"][0].maps.t1)


def test_mrf_threads_env_fallback(monkeypatch, tmp_path):
    from mrfcs.cli import _threads

    class Args:
        threads = None
    monkeypatch.setenv("MRF_THREADS", "3")
    assert _threads(Args()) == 3
    monkeypatch.delenv("MRF_THREADS")
    assert _threads(Args()) == 1
    Args.threads = 5
    assert _threads(Args()) == 5


@pytest.mark.parametrize("study", ["ratio", "length", "strategy"])
def test_remaining_studies_run_via_cli(study, tmp_path):
    text = TINY_CFG.replace("methods = mrf csmrf_ml", "methods = mrf")
    text = text.replace("frames = 40", "frames = 24")
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(text)
    out = str(tmp_path / "out")
    assert main(["--config", str(cfg), "--out", out, "study", study]) == 0
    agg = os.path.join(out, f"study_{study}.csv")
    lines = open(agg).read().splitlines()
    assert lines[0] == "method,map,psnr_mean,psnr_std,ssim_mean,ssim_std"
    assert len(lines) > 4


def test_verbose_reconstruct_writes_trace(tmp_path):
    cfg_path = tmp_path / "exp.cfg"
    cfg_path.write_text(TINY_CFG)
    out = str(tmp_path / "o")
    common = ["--config", str(cfg_path), "--out", out, "--seed", "1"]
    for stage in (["phantom"], ["dict"], ["acquire"]):
        assert main(common + stage) == 0
    assert main(common + ["--verbose", "reconstruct", "--method", "csmrf"]) == 0
    trace = os.path.join(out, "est_csmrf_1_trace.csv")
    assert os.path.exists(trace)
    lines = open(trace).read().splitlines()
    assert lines[0] == "iteration,frame,objective,grad_norm"
    assert len(lines) > 1
