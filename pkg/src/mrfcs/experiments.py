"""Experiment orchestration shared by the CLI stages and studies.

Builds the per-seed objects (phantom, schedule, dictionary, masks,
measurements) from one ExperimentConfig and runs the configured
estimators. Study sweeps call `run_single` per (setting, seed) pair;
individual runs are deterministic functions of (config, seed), so study
parallelism cannot change any numeric output.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ExperimentConfig
from .dictionary import Dictionary, build_dictionary, build_grid
from .evaluate import MAP_NAMES, aggregate, score_run
from .kspace import MeasurementSet, acquire, render_ground_truth
from .matching import match_image
from .metric import MahalanobisMetric, build_chunklets, rca_fit, within_chunklet_covariance
from .phantom import NoiseSpec, ParameterMaps, build_parameter_maps, synth_label_map
from .pipeline import (PipelineConfig, PipelineResult, reconstruct_all_frames,
                       run_blip, run_csmrf, run_mrf, run_oracle)
from .sampling import (MaskSequence, draw_epi_masks, draw_independent_masks,
                       draw_mask_sequence, full_masks)
from .sequence import PulseSequence, generate_sequence


def build_sequence(cfg: ExperimentConfig) -> PulseSequence:
    return generate_sequence(cfg.frames, eta_sigma=cfg.eta_sigma, seed=cfg.sequence_seed,
                             variant=cfg.sequence_variant, tr_jitter=cfg.tr_jitter)


def build_dict(cfg: ExperimentConfig, seq: PulseSequence) -> Dictionary:
    if cfg.dictionary_preset == "custom":
        grid = build_grid("custom", t1_values=cfg.dict_t1, t2_values=cfg.dict_t2,
                          b0_values=cfg.dict_b0)
    else:
        grid = build_grid(cfg.dictionary_preset)
    return build_dictionary(grid, seq)


def phantom_maps(cfg: ExperimentConfig, seed) -> ParameterMaps:
    labels = synth_label_map(cfg.rows, cfg.cols, seed)
    noise = NoiseSpec(tuple(cfg.noise_t1), tuple(cfg.noise_t2), tuple(cfg.noise_b0))
    return build_parameter_maps(labels, noise=noise, seed=seed)


def masks_for(cfg: ExperimentConfig, seed) -> MaskSequence:
    if cfg.strategy == "conditional":
        return draw_mask_sequence(cfg.rows, cfg.rows_per_frame, cfg.center_rows,
                                  cfg.frames, power=cfg.density_power, seed=seed)
    if cfg.strategy == "independent":
        return draw_independent_masks(cfg.rows, cfg.rows_per_frame,
                                      power=cfg.density_power, length=cfg.frames, seed=seed)
    if cfg.strategy == "epi":
        return draw_epi_masks(cfg.rows, cfg.epi_factor, cfg.frames, seed=seed)
    return full_masks(cfg.rows, cfg.frames)


def measurements_for(cfg: ExperimentConfig, maps: ParameterMaps, seq: PulseSequence,
                     masks: MaskSequence, noise_seed) -> MeasurementSet:
    truth = render_ground_truth(maps, seq)
    return acquire(truth, masks, noise_sigma=cfg.noise_sigma, seed=noise_seed)


def pipeline_config(cfg: ExperimentConfig) -> PipelineConfig:
    return PipelineConfig(cs=cfg.cs, outer_iters=cfg.outer_iters,
                          blip_iters=cfg.blip_iters, blip_step=cfg.blip_step)


def truth_atom_assignment(maps: ParameterMaps, seq: PulseSequence,
                          dictionary: Dictionary) -> np.ndarray:
    """Per-voxel atom indices of the noiseless fingerprints (the nearest
    atom of the exact signal; exact recovery for grid-aligned phantoms)."""
    truth = render_ground_truth(maps, seq)
    return match_image(truth, dictionary).atom_map


def train_metric_for(cfg: ExperimentConfig, seq: PulseSequence, dictionary: Dictionary,
                     seed, masks: MaskSequence | None = None) -> MahalanobisMetric:
    """Learn the metric on the training phantom (seed + train_seed_offset)
    acquired with the same sampling pattern the test scan will use."""
    train_seed = seed + cfg.train_seed_offset
    maps = phantom_maps(cfg, train_seed)
    if masks is None:
        masks = masks_for(cfg, seed)
    meas = measurements_for(cfg, maps, seq, masks, noise_seed=train_seed)
    recon, _ = reconstruct_all_frames(meas, pipeline_config(cfg))
    assignment = truth_atom_assignment(maps, seq, dictionary)
    chunklets = build_chunklets(recon, dictionary, assignment)
    cov = within_chunklet_covariance(chunklets)
    ridge = cfg.metric_ridge_rel * np.trace(cov) / cov.shape[0]
    return rca_fit(chunklets, ridge=ridge)


def run_method(method, cfg: ExperimentConfig, measurements: MeasurementSet,
               dictionary: Dictionary, metric: MahalanobisMetric | None = None):
    pcfg = pipeline_config(cfg)
    if method == "mrf":
        return run_mrf(measurements, dictionary)
    if method == "csmrf":
        return run_csmrf(measurements, dictionary, metric=None, cfg=pcfg)
    if method == "csmrf_ml":
        if metric is None:
            raise ValueError("csmrf_ml needs a trained metric")
        return run_csmrf(measurements, dictionary, metric=metric, cfg=pcfg)
    if method == "blip":
        return run_blip(measurements, dictionary, iters=cfg.blip_iters, step=cfg.blip_step)
    if method == "oracle":
        return run_oracle(measurements, dictionary)
    raise ValueError(f"unknown method {method!r}")


class SingleRunResult(dict):
    """method -> (PipelineResult, score dict); carries shared context too."""


def run_single(cfg: ExperimentConfig, seed, seq=None, dictionary=None,
               metric=None) -> SingleRunResult:
    """One full experiment at one seed: phantom, acquisition, every
    configured method, scores against the ground truth."""
    if seq is None:
        seq = build_sequence(cfg)
    if dictionary is None:
        dictionary = build_dict(cfg, seq)
    maps = phantom_maps(cfg, seed)
    masks = masks_for(cfg, seed)
    meas = measurements_for(cfg, maps, seq, masks, noise_seed=seed)

    needs_metric = any(m == "csmrf_ml" for m in cfg.methods)
    if needs_metric and metric is None:
        metric = train_metric_for(cfg, seq, dictionary, seed, masks=masks)

    out = SingleRunResult()
    out.truth = maps
    out.assignment = truth_atom_assignment(maps, seq, dictionary)
    out.metric = metric

    # one outer pass lets csmrf and csmrf_ml share the frame reconstruction
    shared_recon = None
    cs_methods = {"csmrf", "csmrf_ml"} & set(cfg.methods)
    if len(cs_methods) > 1 and cfg.outer_iters == 1:
        shared_recon, _ = reconstruct_all_frames(meas, pipeline_config(cfg))

    for method in cfg.methods:
        if method == "blip":
            epi = draw_epi_masks(cfg.rows, cfg.epi_factor, cfg.frames, seed=seed)
            m_eff = measurements_for(cfg, maps, seq, epi, noise_seed=seed)
            result = run_method(method, cfg, m_eff, dictionary, metric)
        elif method == "oracle":
            m_eff = measurements_for(cfg, maps, seq, full_masks(cfg.rows, cfg.frames),
                                     noise_seed=seed)
            result = run_method(method, cfg, m_eff, dictionary, metric)
        elif method in cs_methods and shared_recon is not None:
            outcome = match_image(shared_recon, dictionary,
                                  metric if method == "csmrf_ml" else None)
            result = PipelineResult(maps=outcome.maps, atom_map=outcome.atom_map,
                                    sequence=outcome.replaced)
        else:
            result = run_method(method, cfg, meas, dictionary, metric)
        out[method] = (result, score_run(result.maps, maps))
    return out


def matching_accuracy(result, assignment):
    """Fraction of foreground voxels assigned their ground-truth atom."""
    fg = assignment >= 0
    if not fg.any():
        return float("nan")
    return float(np.mean(result.atom_map[fg] == assignment[fg]))


def run_seeds(cfg: ExperimentConfig, threads=1):
    """All configured seeds; study parallelism preserves per-seed results
    exactly because each run touches only its own arrays."""
    seq = build_sequence(cfg)
    dictionary = build_dict(cfg, seq)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_single, cfg, seed, seq, dictionary)
                       for seed in cfg.seeds]
            return {seed: f.result() for seed, f in zip(cfg.seeds, futures)}
    return {seed: run_single(cfg, seed, seq, dictionary) for seed in cfg.seeds}


def aggregate_runs(runs):
    """(method, map) -> aggregate statistics over seeds."""
    table = {}
    methods = None
    for res in runs.values():
        methods = [m for m in res.keys()]
        break
    for method in methods or ():
        for name in MAP_NAMES:
            scores = [runs[seed][method][1][name] for seed in runs]
            table[(method, name)] = aggregate(scores)
    return table
