import os

import numpy as np
import pytest

from mrfcs import io
from mrfcs.cli import main

TINY_CFG = """\
[experiment]
rows = 16
cols = 16
frames = 40
seeds = 1
train_seed_offset = 50

[sequence]
variant = literal
eta_sigma = 0.0
seed = 9

[phantom]
noise_t1 = 0 0
noise_t2 = 0 0
noise_b0 = 0 0

[dictionary]
preset = custom
t1 = 350 500 833 900 2269 4231
t2 = 47 55 70 86 329 572
b0 = -80 -70 -40 -30 75 185

[sampling]
strategy = conditional
rows_per_frame = 2
center_rows = 1
density_power = 2.0
epi_factor = 4

[cs]
alpha_wavelet = 1e-3
alpha_tv = 1e-3
smooth_mu = 1e-6
max_iters = 6

[metric]
ridge_rel = 1.0

[pipeline]
methods = mrf csmrf_ml
outer_iters = 1
blip_iters = 3

[noise]
sigma = 0.0
"""


@pytest.fixture()
def workdir(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(TINY_CFG)
    out = tmp_path / "out"
    return str(cfg), str(out)


def run_cli(*argv):
    code = main(list(argv))
    assert code == 0, f"cli failed: {argv}"


def test_stage_chain_and_determinism(workdir, capsys):
    cfg, out = workdir
    common = ["--config", cfg, "--out", out, "--seed", "1"]
    run_cli(*common, "phantom")
    run_cli(*common, "dict")
    run_cli(*common, "acquire")
    run_cli(*common, "train-metric")
    run_cli(*common, "reconstruct", "--method", "mrf")
    run_cli(*common, "reconstruct", "--method", "csmrf_ml")
    run_cli(*common, "evaluate",
            "--est", os.path.join(out, "est_csmrf_ml_1"),
            "--truth", os.path.join(out, "truth_1"))
    captured = capsys.readouterr().out
    assert "t1: psnr" in captured

    # expected artifacts exist
    for name in ("labels_1.mrfm", "dictionary.mrfd", "sequence.csv",
                 "measurements_1.mrfy", "masks_1.txt", "metric_1.mrfa",
                 "est_mrf_1_t1.mrfm", "est_csmrf_ml_1_atoms.mrfm", "scores.csv",
                 "manifest_dict.txt"):
        assert os.path.exists(os.path.join(out, name)), name

    # byte-identical rerun of the reconstruction stage
    target = os.path.join(out, "est_csmrf_ml_1_t1.mrfm")
    first = open(target, "rb").read()
    run_cli(*common, "reconstruct", "--method", "csmrf_ml")
    assert open(target, "rb").read() == first


def test_full_and_oracle_reconstruction(workdir):
    cfg, out = workdir
    common = ["--config", cfg, "--out", out, "--seed", "1"]
    run_cli(*common, "phantom")
    run_cli(*common, "dict")
    run_cli(*common, "acquire")
    run_cli(*common, "reconstruct", "--method", "blip")
    assert os.path.exists(os.path.join(out, "est_blip_1_t1.mrfm"))


def test_evaluate_exact_match_is_infinite(workdir, capsys):
    cfg, out = workdir
    common = ["--config", cfg, "--out", out, "--seed", "1"]
    run_cli(*common, "phantom")
    run_cli(*common, "evaluate",
            "--est", os.path.join(out, "truth_1"),
            "--truth", os.path.join(out, "truth_1"))
    assert "psnr inf" in capsys.readouterr().out


def test_export_pgm(workdir, tmp_path):
    cfg, out = workdir
    run_cli("--config", cfg, "--out", out, "--seed", "1", "phantom")
    pgm = os.path.join(out, "t1.pgm")
    run_cli("export", "--map", os.path.join(out, "truth_1_t1.mrfm"), "--pgm", pgm)
    img = io.read_pgm(pgm)
    assert img.shape == (16, 16)


def test_metric_study(workdir):
    cfg, out = workdir
    run_cli("--config", cfg, "--out", out, "--threads", "2", "study", "metric")
    agg = os.path.join(out, "study_metric.csv")
    assert os.path.exists(agg)
    text = open(agg).read()
    assert "rca/csmrf_ml" in text and "l2/csmrf" in text
    acc = open(os.path.join(out, "study_metric_accuracy.csv")).read()
    assert "rca,csmrf_ml" in acc


def test_missing_input_is_clean_error(workdir, capsys):
    cfg, out = workdir
    code = main(["--config", cfg, "--out", out, "--seed", "1",
                 "reconstruct", "--method", "mrf"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_bad_config_reports_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[experiment]\nrows = twelve\n")
    code = main(["--config", str(cfg), "--out", str(tmp_path / "o"), "phantom"])
    assert code == 1
    assert "bad.cfg:2" in capsys.readouterr().err
