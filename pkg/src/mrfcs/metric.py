"""Mahalanobis matching metric learned by relevant component analysis.

Complex fingerprints are realified (real parts concatenated with
imaginary parts, so unit-norm fingerprints stay unit-norm). Training
groups reconstructed fingerprints into chunklets by their ground-truth
dictionary atom, adds the atom itself to each chunklet, pools the
within-chunklet covariance, and whitens: W = (C + ridge I)^(-1/2).
"""

from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary
from .kspace import ImageSequence


class RankDeficiencyError(ValueError):
    def __init__(self, deficient):
        self.deficient = deficient
        super().__init__(
            f"within-chunklet covariance is rank deficient in {deficient} "
            "dimension(s); use a positive ridge")


def realify(x):
    """Map a complex vector (or batch of rows) to [Re | Im]."""
    x = np.asarray(x)
    return np.concatenate([x.real, x.imag], axis=-1)


@dataclass
class ChunkletSet:
    chunklets: list          # per chunklet, n_j x 2T real array
    labels: np.ndarray       # atom index per chunklet

    def __post_init__(self):
        if not self.chunklets:
            raise ValueError("chunklet set is empty")
        dims = {c.shape[1] for c in self.chunklets}
        if len(dims) != 1:
            raise ValueError("chunklets must share dimensionality")
        if any(c.shape[0] == 0 for c in self.chunklets):
            raise ValueError("empty chunklet")

    @property
    def dim(self):
        return self.chunklets[0].shape[1]

    @property
    def total(self):
        return sum(c.shape[0] for c in self.chunklets)

    def means(self):
        return np.array([c.mean(axis=0) for c in self.chunklets])


@dataclass
class MahalanobisMetric:
    w: np.ndarray  # 2T x 2T real whitening transform
    ridge: float = 0.0

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.ndim != 2 or self.w.shape[0] != self.w.shape[1]:
            raise ValueError("metric transform must be square")

    @property
    def dim(self):
        return self.w.shape[0]

    @classmethod
    def identity(cls, dim):
        return cls(w=np.eye(dim))


def build_chunklets(recon: ImageSequence, dictionary: Dictionary,
                    truth_assignment) -> ChunkletSet:
    """Group normalized, realified reconstructed fingerprints by their
    true atom and append the realified atom to each group.

    `truth_assignment` holds one dictionary index per voxel; negative
    entries mark background. Atoms with no assigned voxel do not form a
    chunklet. Zero fingerprints cannot be normalized and are skipped.
    """
    assignment = np.asarray(truth_assignment).ravel()
    fp = recon.fingerprints()
    if assignment.shape[0] != fp.shape[0]:
        raise ValueError("one assignment per voxel required")
    bad = assignment[assignment >= dictionary.size]
    if bad.size:
        raise ValueError(f"assignment {int(bad[0])} outside the dictionary")
    norms = np.linalg.norm(fp, axis=1)
    usable = (assignment >= 0) & (norms > 0)
    if not usable.any():
        raise ValueError("no foreground voxels to build chunklets from")

    chunklets = []
    labels = []
    for k in np.unique(assignment[usable]):
        members = np.where(usable & (assignment == k))[0]
        vectors = fp[members] / norms[members][:, None]
        group = np.concatenate([vectors, dictionary.atoms[k][None, :]], axis=0)
        chunklets.append(realify(group))
        labels.append(int(k))
    return ChunkletSet(chunklets=chunklets, labels=np.array(labels))


def within_chunklet_covariance(chunklets: ChunkletSet) -> np.ndarray:
    """Pooled covariance of deviations from each chunklet's own mean,
    normalized by the total sample count."""
    dim = chunklets.dim
    cov = np.zeros((dim, dim))
    for group in chunklets.chunklets:
        centered = group - group.mean(axis=0)
        cov += centered.T @ centered
    return cov / chunklets.total


def default_ridge(cov):
    """Well-posedness floor: 1e-8 of the mean eigenvalue."""
    return 1e-8 * np.trace(cov) / cov.shape[0]


def whitening_from_covariance(cov, ridge) -> np.ndarray:
    """(C + ridge I)^(-1/2) by symmetric eigendecomposition; eigenvalues
    are floored at the ridge. With ridge 0 a singular C is an error."""
    vals, vecs = np.linalg.eigh(cov)
    if ridge > 0:
        vals = np.maximum(vals + ridge, ridge)
    else:
        tol = max(vals.max(), 0.0) * cov.shape[0] * np.finfo(float).eps
        deficient = int(np.sum(vals <= tol))
        if deficient:
            raise RankDeficiencyError(deficient)
    return (vecs / np.sqrt(vals)) @ vecs.T


def rca_fit(chunklets: ChunkletSet, ridge=None) -> MahalanobisMetric:
    """Closed-form RCA: whiten the pooled within-chunklet covariance.

    `ridge=None` applies the default floor; pass 0 to require a full-rank
    covariance.
    """
    cov = within_chunklet_covariance(chunklets)
    if ridge is None:
        ridge = default_ridge(cov)
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    return MahalanobisMetric(w=whitening_from_covariance(cov, ridge), ridge=float(ridge))


def mahalanobis_distance(a, b, metric: MahalanobisMetric) -> float:
    """Squared learned distance ||W (a - b)||_2^2 between realified vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-D vectors of equal length")
    if a.shape[0] != metric.dim:
        raise ValueError("vector length does not match the metric dimension")
    diff = metric.w @ (a - b)
    return float(diff @ diff)
