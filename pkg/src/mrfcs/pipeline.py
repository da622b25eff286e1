"""Estimator orchestration: the CS + matching pipeline, the plain
zero-fill matcher, the projected-Landweber baseline, and metric training.

The CS pipeline initializes every frame with the zero-fill adjoint,
reconstructs all frames (batched) against their measurements, matches
every voxel fingerprint (learned metric when given, else L2) and rebuilds
the sequence on the scaled-atom set. The match/replace cycle can repeat,
warm-starting the frame solver from the replaced sequence; one pass is
the default.
"""

from dataclasses import dataclass, field

import numpy as np

from .csrecon import CsConfig, FrameProblem, SolveResult, solve_batch
from .dictionary import Dictionary
from .kspace import ImageSequence, MeasurementSet, fft2c, ifft2c
from .matching import match_image, oracle_estimate
from .metric import MahalanobisMetric, build_chunklets, rca_fit
from .phantom import ParameterMaps

METHODS = ("mrf", "csmrf", "csmrf_ml", "blip", "oracle")


@dataclass(frozen=True)
class PipelineConfig:
    cs: CsConfig = field(default_factory=CsConfig)
    outer_iters: int = 1
    # weights in cs are interpreted relative to each frame's measurement
    # L2 norm when this flag is set, keeping one config usable across
    # image scales
    alpha_relative: bool = True
    blip_iters: int = 16
    blip_step: float = 1.0

    def __post_init__(self):
        if self.outer_iters < 1:
            raise ValueError("outer_iters must be >= 1")
        if self.blip_iters < 1 or self.blip_step <= 0:
            raise ValueError("blip_iters must be >= 1 and blip_step > 0")


@dataclass
class PipelineResult:
    maps: ParameterMaps
    atom_map: np.ndarray
    sequence: ImageSequence
    solver: SolveResult | None = None
    residuals: np.ndarray | None = None


def _frame_problem(measurements: MeasurementSet, cfg: PipelineConfig):
    y_emb, row_mask = measurements.embedded()
    if cfg.alpha_relative:
        scale = np.sqrt(np.sum(np.abs(y_emb) ** 2, axis=(-2, -1)))
        aw = cfg.cs.alpha_wavelet * scale
        atv = cfg.cs.alpha_tv * scale
    else:
        aw = atv = None
    return FrameProblem(y_emb, row_mask, cfg.cs, aw=aw, atv=atv), y_emb, row_mask


def reconstruct_all_frames(measurements: MeasurementSet, cfg: PipelineConfig,
                           start: ImageSequence | None = None, record_trace=False):
    """One batched CS solve over all frames; start defaults to zero-fill."""
    problem, y_emb, row_mask = _frame_problem(measurements, cfg)
    x0 = ifft2c(y_emb * row_mask) if start is None else start.data
    res = solve_batch(problem, x0, record_trace=record_trace)
    return ImageSequence(res.images), res


def run_csmrf(measurements: MeasurementSet, dictionary: Dictionary,
              metric: MahalanobisMetric | None = None,
              cfg: PipelineConfig = PipelineConfig(), record_trace=False) -> PipelineResult:
    """Frame-wise CS reconstruction followed by per-voxel matching and
    on-manifold replacement; repeated `outer_iters` times with the
    replaced sequence as warm start."""
    current = None
    outcome = None
    solver = None
    for _ in range(cfg.outer_iters):
        recon, solver = reconstruct_all_frames(measurements, cfg, start=current,
                                               record_trace=record_trace)
        outcome = match_image(recon, dictionary, metric)
        current = outcome.replaced
    return PipelineResult(maps=outcome.maps, atom_map=outcome.atom_map,
                          sequence=outcome.replaced, solver=solver)


def run_mrf(measurements: MeasurementSet, dictionary: Dictionary) -> PipelineResult:
    """Zero-fill adjoint followed by direct L2 matching (no CS, no metric)."""
    outcome = match_image(measurements.zero_fill(), dictionary)
    return PipelineResult(maps=outcome.maps, atom_map=outcome.atom_map,
                          sequence=outcome.replaced)


def run_oracle(measurements: MeasurementSet, dictionary: Dictionary) -> PipelineResult:
    outcome = oracle_estimate(measurements, dictionary)
    return PipelineResult(maps=outcome.maps, atom_map=outcome.atom_map,
                          sequence=outcome.replaced)


def run_blip(measurements: MeasurementSet, dictionary: Dictionary,
             iters=16, step=1.0) -> PipelineResult:
    """Projected Landweber: gradient step on the data term, then exact
    per-voxel projection onto the scaled-atom set (L2 match + replace).

    With the unitary operator convention, step 1 keeps the residual
    non-increasing; the per-iteration residual norms are returned.
    """
    y_emb, row_mask = measurements.embedded()
    x = np.zeros_like(y_emb)
    outcome = None
    residuals = []
    for _ in range(iters):
        z = x + step * ifft2c(row_mask * (y_emb - row_mask * fft2c(x)))
        outcome = match_image(ImageSequence(z), dictionary)
        x = outcome.replaced.data
        residuals.append(float(np.sqrt(np.sum(np.abs(row_mask * fft2c(x) - y_emb) ** 2))))
    return PipelineResult(maps=outcome.maps, atom_map=outcome.atom_map,
                          sequence=outcome.replaced, residuals=np.array(residuals))


def learn_metric(train_measurements: MeasurementSet, dictionary: Dictionary,
                 truth_assignment, cfg: PipelineConfig = PipelineConfig(),
                 ridge=None) -> MahalanobisMetric:
    """Train the matching metric on a reconstruction of the training
    acquisition against its known per-voxel atoms."""
    recon, _ = reconstruct_all_frames(train_measurements, cfg)
    chunklets = build_chunklets(recon, dictionary, truth_assignment)
    return rca_fit(chunklets, ridge=ridge)
