"""Row-wise Cartesian undersampling mask generators.

Three strategies: the time-dependent draw in which rows sampled at frame
t-1 are excluded at frame t except for a protected set of center rows,
an independent variable-density baseline, and uniform EPI-style masks
with random shifts. All draw exactly R distinct rows per frame by
sequential weighted sampling without replacement, so the per-frame
sampling ratio is exact.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class MaskSequence:
    n_rows: int
    frames: list          # per frame, sorted array of sampled row indices
    center: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.int64)
        clean = []
        for t, rows in enumerate(self.frames):
            rows = np.asarray(rows, dtype=np.int64)
            if rows.size != np.unique(rows).size:
                raise ValueError(f"frame {t}: duplicate row indices")
            if rows.size and (rows.min() < 0 or rows.max() >= self.n_rows):
                raise ValueError(f"frame {t}: row index out of range")
            clean.append(np.sort(rows))
        self.frames = clean

    @property
    def length(self):
        return len(self.frames)

    def is_full(self):
        return all(f.size == self.n_rows for f in self.frames)


def center_rows(n_rows, c):
    """The c rows nearest the DC row (index n_rows // 2 in the shifted
    k-space). Stable argsort breaks distance ties toward the lower index."""
    order = np.argsort(np.abs(np.arange(n_rows) - n_rows // 2), kind="stable")
    return np.sort(order[:c])


def init_probability(n_rows, n_per_frame, power) -> np.ndarray:
    """Variable-density row probabilities, peaked at the DC row.

    p(i) is proportional to (1 - d(i)/d_max)^power with d the distance
    from the DC row and d_max chosen one past the largest distance so
    the vector stays strictly positive everywhere.
    """
    if not 1 <= n_per_frame <= n_rows:
        raise ValueError("need 1 <= rows-per-frame <= n_rows")
    if power < 0:
        raise ValueError("density power must be >= 0")
    d = np.abs(np.arange(n_rows) - n_rows // 2)
    d_max = d.max() + 1.0
    p = (1.0 - d / d_max) ** power
    return p / p.sum()


def _draw_without_replacement(rng, prob, count):
    """Sequential weighted draw of `count` distinct indices.

    Each draw renormalizes the remaining mass; single uniform variate per
    draw via inverse CDF, so the result is a deterministic function of
    the generator state.
    """
    p = np.asarray(prob, dtype=float).copy()
    chosen = np.empty(count, dtype=np.int64)
    for j in range(count):
        total = p.sum()
        if total <= 0:
            raise ValueError("probability mass exhausted before drawing enough rows")
        cdf = np.cumsum(p / total)
        cdf[-1] = 1.0
        chosen[j] = int(np.searchsorted(cdf, rng.random(), side="right"))
        p[chosen[j]] = 0.0
    return np.sort(chosen)


def draw_mask_sequence(n_rows, n_per_frame, c, length, power=4.0, seed=0) -> MaskSequence:
    """Time-dependent masks: frame t redraws from the initial density
    restricted to the center set union the complement of frame t-1.

    Consecutive frames can only share center rows; with c = n_rows no row
    is ever excluded and the frames become independent draws.
    """
    if c > n_rows or c < 0:
        raise ValueError("center size must lie in [0, n_rows]")
    if n_rows < 2 * n_per_frame - c:
        raise ValueError(
            f"infeasible: {n_per_frame} rows per frame with {c} center rows "
            f"needs n_rows >= {2 * n_per_frame - c}")
    rng = np.random.default_rng(seed)
    p1 = init_probability(n_rows, n_per_frame, power)
    center = center_rows(n_rows, c)
    keep = np.zeros(n_rows, dtype=bool)
    keep[center] = True

    frames = []
    previous = None
    for _ in range(length):
        p = p1.copy()
        if previous is not None:
            excluded = previous[~keep[previous]]
            p[excluded] = 0.0
        frames.append(_draw_without_replacement(rng, p, n_per_frame))
        previous = frames[-1]
    return MaskSequence(n_rows=n_rows, frames=frames, center=center)


def draw_independent_masks(n_rows, n_per_frame, power=4.0, length=1, seed=0) -> MaskSequence:
    """Baseline: every frame drawn i.i.d. from the initial density."""
    rng = np.random.default_rng(seed)
    p1 = init_probability(n_rows, n_per_frame, power)
    frames = [_draw_without_replacement(rng, p1, n_per_frame) for _ in range(length)]
    return MaskSequence(n_rows=n_rows, frames=frames)


def draw_epi_masks(n_rows, factor, length, seed=0) -> MaskSequence:
    """Uniform stride-`factor` masks with a fresh random shift per frame."""
    if factor < 1:
        raise ValueError("undersampling factor must be >= 1")
    rng = np.random.default_rng(seed)
    frames = [np.arange(int(rng.integers(0, factor)), n_rows, factor, dtype=np.int64)
              for _ in range(length)]
    return MaskSequence(n_rows=n_rows, frames=frames)


def full_masks(n_rows, length) -> MaskSequence:
    frames = [np.arange(n_rows, dtype=np.int64) for _ in range(length)]
    return MaskSequence(n_rows=n_rows, frames=frames)


def write_mask_text(masks: MaskSequence, path, n_per_frame=None, c=None):
    """Line-oriented mask format: header `n_rows R c T`, one frame per line."""
    with open(path, "w") as fh:
        fh.write(format_mask_text(masks, n_per_frame=n_per_frame, c=c))


def read_mask_text(path) -> MaskSequence:
    with open(path) as fh:
        text = fh.read()
    return parse_mask_text(text)


def parse_mask_text(text) -> MaskSequence:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty mask text")
    header = lines[0].split()
    if len(header) != 4:
        raise ValueError("mask header must be 'n_rows R c T'")
    n_rows, _, c, length = (int(v) for v in header)
    if length != len(lines) - 1:
        raise ValueError(f"mask text declares {length} frames, found {len(lines) - 1}")
    frames = [np.array([int(v) for v in ln.split()], dtype=np.int64) for ln in lines[1:]]
    return MaskSequence(n_rows=n_rows, frames=frames, center=center_rows(n_rows, c))


def format_mask_text(masks: MaskSequence, n_per_frame=None, c=None) -> str:
    if n_per_frame is None:
        n_per_frame = masks.frames[0].size if masks.frames else 0
    if c is None:
        c = masks.center.size
    lines = [f"{masks.n_rows} {n_per_frame} {c} {masks.length}"]
    lines += [" ".join(str(int(r)) for r in rows) for rows in masks.frames]
    return "\n".join(lines) + "\n"
