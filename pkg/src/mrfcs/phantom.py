"""Segmented label maps and per-voxel ground-truth parameter maps.

A phantom is a small integer label image plus a tissue table assigning
(T1, T2, B0, proton density) to each label. Desk-scale phantoms are
generated procedurally as nested ellipse-like zones; externally supplied
label maps can be loaded from the shared map binary format.
"""

from dataclasses import dataclass

import numpy as np

LABEL_BACKGROUND = 1


@dataclass(frozen=True)
class Tissue:
    label: int
    name: str
    t1: float       # ms
    t2: float       # ms
    b0: float       # Hz
    density: float  # unitless, in [0, 1]


@dataclass(frozen=True)
class TissueTable:
    entries: tuple[Tissue, ...]

    def __post_init__(self):
        labels = [t.label for t in self.entries]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels in tissue table")
        for t in self.entries:
            if not (0.0 <= t.density <= 1.0):
                raise ValueError(f"tissue {t.name!r}: density {t.density} outside [0, 1]")
            if t.density > 0 and not (t.t1 >= t.t2 >= 0):
                raise ValueError(f"tissue {t.name!r}: requires T1 >= T2 >= 0")
            if t.density == 0 and (t.t1, t.t2, t.b0) != (0.0, 0.0, 0.0):
                raise ValueError(f"background tissue {t.name!r} must have all-zero parameters")

    def __getitem__(self, label):
        for t in self.entries:
            if t.label == label:
                return t
        raise KeyError(f"label {label} not in tissue table")

    @property
    def labels(self):
        return {t.label for t in self.entries}


#: The seven-component segmented brain tissue table.
DEFAULT_TISSUES = TissueTable(entries=(
    Tissue(1, "background", 0.0, 0.0, 0.0, 0.0),
    Tissue(2, "csf", 4231.0, 572.0, 185.0, 1.0),
    Tissue(3, "gray-matter", 833.0, 86.0, -30.0, 0.86),
    Tissue(4, "white-matter", 500.0, 55.0, -70.0, 0.77),
    Tissue(5, "fat", 350.0, 70.0, -80.0, 0.7),
    Tissue(6, "muscle", 900.0, 47.0, -40.0, 1.0),
    Tissue(7, "muscle-skin", 2269.0, 329.0, 75.0, 1.0),
))


@dataclass
class LabelMap:
    labels: np.ndarray  # rows x cols, small integers

    def __post_init__(self):
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        if self.labels.ndim != 2:
            raise ValueError("label map must be 2-D")

    @property
    def rows(self):
        return self.labels.shape[0]

    @property
    def cols(self):
        return self.labels.shape[1]

    def validate_against(self, table: TissueTable):
        present = set(np.unique(self.labels).tolist())
        unknown = present - table.labels
        if unknown:
            raise ValueError(f"labels {sorted(unknown)} not present in tissue table")


@dataclass
class ParameterMaps:
    t1: np.ndarray       # ms per voxel
    t2: np.ndarray       # ms per voxel
    b0: np.ndarray       # Hz per voxel
    density: np.ndarray  # unitless per voxel

    def __post_init__(self):
        shapes = {a.shape for a in (self.t1, self.t2, self.b0, self.density)}
        if len(shapes) != 1:
            raise ValueError("parameter maps must share dimensions")
        fg = self.density > 0
        if not np.all(self.t1[fg] >= self.t2[fg]):
            raise ValueError("T1 < T2 at a foreground voxel")
        if not np.all(self.t2[fg] >= 0):
            raise ValueError("negative T2 at a foreground voxel")

    @property
    def rows(self):
        return self.t1.shape[0]

    @property
    def cols(self):
        return self.t1.shape[1]

    def as_dict(self):
        return {"t1": self.t1, "t2": self.t2, "b0": self.b0, "density": self.density}


@dataclass(frozen=True)
class NoiseSpec:
    """One-sided uniform perturbation intervals added to T1/T2/B0 maps."""

    t1_range: tuple[float, float] = (0.0, 50.0)  # ms
    t2_range: tuple[float, float] = (0.0, 10.0)  # ms
    b0_range: tuple[float, float] = (0.0, 10.0)  # Hz

    def __post_init__(self):
        for name, (lo, hi) in (("t1_range", self.t1_range),
                               ("t2_range", self.t2_range),
                               ("b0_range", self.b0_range)):
            if lo < 0 or hi < lo:
                raise ValueError(f"{name}: need 0 <= lo <= hi, got ({lo}, {hi})")


ZERO_NOISE = NoiseSpec((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))

# Elliptical radius fractions of the nested zones, outermost first:
# skin shell down to the white-matter bulk. CSF appears as two interior
# ventricle-like ellipses rather than a core so the brightest tissue stays
# a small image fraction, as in a real head slice.
_SHELLS = ((0.96, 7), (0.90, 6), (0.84, 5), (0.78, 3), (0.55, 4))


def synth_label_map(rows, cols, seed) -> LabelMap:
    """Procedural head-like phantom covering all seven tissue labels.

    Nested ellipse-like shells (skin, muscle, fat, gray matter, white
    matter) around two CSF ventricles, background outside. Geometry is
    jittered deterministically from `seed`; every label is present for
    maps of 64x64 and larger.
    """
    if rows < 8 or cols < 8:
        raise ValueError("label map must be at least 8x8")
    rng = np.random.default_rng(seed)
    cy, cx = rng.uniform(-0.03, 0.03, 2)
    a, b = rng.uniform(0.93, 1.0, 2)
    phase = rng.uniform(0, 2 * np.pi)
    yy, xx = np.meshgrid(np.linspace(-1, 1, rows), np.linspace(-1, 1, cols), indexing="ij")
    r = np.sqrt(((xx - cx) / a) ** 2 + ((yy - cy) / b) ** 2)
    theta = np.arctan2(yy - cy, xx - cx)
    r = r * (1 + 0.02 * np.sin(2 * theta + phase))

    labels = np.full((rows, cols), LABEL_BACKGROUND, dtype=np.int32)
    for cut, lab in _SHELLS:
        labels[r < cut] = lab
    for sign in (-1, 1):
        vx = cx + sign * rng.uniform(0.14, 0.22)
        vy = cy + rng.uniform(-0.06, 0.06)
        va = rng.uniform(0.10, 0.14)
        vb = rng.uniform(0.16, 0.22)
        rv = np.sqrt(((xx - vx) / va) ** 2 + ((yy - vy) / vb) ** 2)
        labels[(rv < 1.0) & (labels == 4)] = 2
    return LabelMap(labels)


def build_parameter_maps(labels: LabelMap, table: TissueTable = DEFAULT_TISSUES,
                         noise: NoiseSpec = NoiseSpec(), seed=0) -> ParameterMaps:
    """Assign tissue parameters per voxel and add one-sided uniform noise.

    Each non-background voxel receives its tissue row plus independent
    U(lo, hi) additive perturbations on T1, T2 and B0. Density is never
    perturbed; background voxels stay exactly zero.
    """
    labels.validate_against(table)
    shape = labels.labels.shape
    t1 = np.zeros(shape)
    t2 = np.zeros(shape)
    b0 = np.zeros(shape)
    density = np.zeros(shape)
    for tissue in table.entries:
        m = labels.labels == tissue.label
        t1[m], t2[m], b0[m], density[m] = tissue.t1, tissue.t2, tissue.b0, tissue.density

    rng = np.random.default_rng(seed)
    fg = density > 0
    for arr, (lo, hi) in ((t1, noise.t1_range), (t2, noise.t2_range), (b0, noise.b0_range)):
        draw = rng.uniform(lo, hi, size=shape)
        arr[fg] += draw[fg]
    return ParameterMaps(t1=t1, t2=t2, b0=b0, density=density)
