"""Nearest-atom dictionary matching and parameter retrieval.

Matching maximizes the real Hermitian inner product between the
normalized query and the unit atoms (equivalently minimizes the L2
distance), or minimizes the learned squared Mahalanobis distance over
realified fingerprints. The matched amplitude is the clamped raw inner
product (used for the on-manifold replacement); the proton-density
estimate divides it by the atom's stored pre-normalization magnitude so
a noiseless scaled fingerprint recovers its density exactly.
"""

from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary
from .kspace import ImageSequence, MeasurementSet
from .metric import MahalanobisMetric, realify
from .phantom import ParameterMaps

BACKGROUND = -1
_CHUNK = 1024


@dataclass(frozen=True)
class MatchResult:
    atom_index: int
    t1: float
    t2: float
    b0: float
    rho: float        # amplitude / atom norm, >= 0
    amplitude: float  # clamped real inner product with the matched unit atom
    distance: float   # squared distance between normalized query and atom


def _background_result():
    return MatchResult(BACKGROUND, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def _result_for(dictionary, k, amplitude, distance):
    t1, t2, b0 = dictionary.retrieve(k)
    amplitude = max(float(amplitude), 0.0)
    return MatchResult(int(k), t1, t2, b0, amplitude / dictionary.norms[k],
                       amplitude, float(distance))


def match_l2(x, dictionary: Dictionary) -> MatchResult:
    """Best atom under the L2 / real-inner-product criterion.

    Zero-norm queries short-circuit to the background result. Ties break
    toward the lower atom index (argmax takes the first maximum).
    """
    if dictionary.size == 0:
        raise ValueError("empty dictionary")
    x = np.asarray(x, dtype=complex)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        return _background_result()
    scores = (dictionary.atoms.conj() @ x).real
    k = int(np.argmax(scores))
    raw = scores[k]
    return _result_for(dictionary, k, raw, max(2.0 - 2.0 * raw / nrm, 0.0))


class MetricMatcher:
    """Caches the metric-transformed realified atoms for repeated queries."""

    def __init__(self, dictionary: Dictionary, metric: MahalanobisMetric):
        if metric.dim != 2 * dictionary.length:
            raise ValueError("metric dimension must be twice the fingerprint length")
        self.dictionary = dictionary
        self.metric = metric
        self.transformed = realify(dictionary.atoms) @ metric.w.T  # K x 2T
        self.sq_norms = np.sum(self.transformed ** 2, axis=1)

    def match_batch(self, queries):
        """Queries: n x T complex, each nonzero. Returns (indices, distances)."""
        nrm = np.linalg.norm(queries, axis=1, keepdims=True)
        q = realify(queries / nrm) @ self.metric.w.T
        d2 = (np.sum(q ** 2, axis=1)[:, None]
              - 2.0 * (q @ self.transformed.T) + self.sq_norms[None, :])
        idx = np.argmin(d2, axis=1)
        return idx, np.maximum(d2[np.arange(len(idx)), idx], 0.0)


def match_metric(x, dictionary: Dictionary, metric: MahalanobisMetric,
                 matcher: MetricMatcher | None = None) -> MatchResult:
    """Best atom under the learned metric; amplitude and retrieval follow
    the same rules as the L2 matcher."""
    x = np.asarray(x, dtype=complex)
    if np.linalg.norm(x) == 0:
        return _background_result()
    if matcher is None:
        matcher = MetricMatcher(dictionary, metric)
    idx, d2 = matcher.match_batch(x[None, :])
    k = int(idx[0])
    raw = (dictionary.atoms[k].conj() @ x).real
    return _result_for(dictionary, k, raw, float(d2[0]))


@dataclass
class MatchOutcome:
    maps: ParameterMaps
    atom_map: np.ndarray        # rows x cols, -1 at background voxels
    replaced: ImageSequence     # fingerprints projected to amplitude * atom


def match_image(recon: ImageSequence, dictionary: Dictionary,
                metric: MahalanobisMetric | None = None) -> MatchOutcome:
    """Match every voxel fingerprint and rebuild the sequence on the
    scaled-atom set. Uses the learned metric when given, else L2."""
    fp = recon.fingerprints()
    n = fp.shape[0]
    norms = np.linalg.norm(fp, axis=1)
    fg = norms > 0

    indices = np.full(n, BACKGROUND, dtype=np.int64)
    amplitude = np.zeros(n)
    matcher = MetricMatcher(dictionary, metric) if metric is not None else None
    atoms_h = dictionary.atoms.conj().T

    for start in range(0, n, _CHUNK):
        sel = np.where(fg[start:start + _CHUNK])[0] + start
        if sel.size == 0:
            continue
        block = fp[sel]
        if matcher is None:
            scores = (block @ atoms_h).real
            best = np.argmax(scores, axis=1)
            raw = scores[np.arange(sel.size), best]
        else:
            best, _ = matcher.match_batch(block)
            raw = np.einsum("ij,ij->i", block.conj(), dictionary.atoms[best]).real
        indices[sel] = best
        amplitude[sel] = np.maximum(raw, 0.0)

    replaced_fp = np.zeros_like(fp)
    m = indices >= 0
    replaced_fp[m] = amplitude[m, None] * dictionary.atoms[indices[m]]

    shape = (recon.rows, recon.cols)
    t1 = np.zeros(shape).ravel()
    t2 = np.zeros(shape).ravel()
    b0 = np.zeros(shape).ravel()
    rho = np.zeros(shape).ravel()
    t1[m] = dictionary.params[indices[m], 0]
    t2[m] = dictionary.params[indices[m], 1]
    b0[m] = dictionary.params[indices[m], 2]
    rho[m] = amplitude[m] / dictionary.norms[indices[m]]
    maps = ParameterMaps(t1=t1.reshape(shape), t2=t2.reshape(shape),
                         b0=b0.reshape(shape), density=rho.reshape(shape))
    return MatchOutcome(maps=maps,
                        atom_map=indices.reshape(shape).astype(np.int32),
                        replaced=ImageSequence.from_fingerprints(replaced_fp, *shape))


def oracle_estimate(measurements: MeasurementSet, dictionary: Dictionary) -> MatchOutcome:
    """L2 matching on the inverse transform of fully sampled measurements:
    the error floor attributable to dictionary discretization alone."""
    if not measurements.masks.is_full():
        raise ValueError("oracle estimation requires fully sampled masks")
    return match_image(measurements.zero_fill(), dictionary)
