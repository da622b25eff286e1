"""Undersampled Fourier measurement operator, its adjoint, and acquisition.

The transform is the unitary centered 2-D DFT (DC at index n//2 on both
axes); row restriction then picks the sampled phase encodes. With this
normalization the zero-fill adjoint is the exact operator adjoint, so
energy arguments and unit Landweber steps hold without extra constants.
"""

from dataclasses import dataclass

import numpy as np

from .dictionary import simulate_fingerprints
from .phantom import ParameterMaps
from .sampling import MaskSequence
from .sequence import PulseSequence


def fft2c(x):
    """Unitary centered 2-D DFT over the trailing two axes."""
    return np.fft.fftshift(np.fft.fft2(x, norm="ortho", axes=(-2, -1)), axes=(-2, -1))


def ifft2c(k):
    return np.fft.ifft2(np.fft.ifftshift(k, axes=(-2, -1)), norm="ortho", axes=(-2, -1))


def forward(image, mask_rows):
    """F_u: centered unitary DFT restricted to the given k-space rows."""
    image = np.asarray(image)
    mask_rows = np.asarray(mask_rows, dtype=np.int64)
    if mask_rows.size and (mask_rows.min() < 0 or mask_rows.max() >= image.shape[-2]):
        raise ValueError("mask row out of range")
    return fft2c(image)[..., mask_rows, :]


def adjoint(measurement, mask_rows, rows, cols):
    """F_u^H: zero-fill the unsampled rows, inverse centered unitary DFT."""
    measurement = np.asarray(measurement)
    mask_rows = np.asarray(mask_rows, dtype=np.int64)
    if measurement.shape[-2] != mask_rows.size or measurement.shape[-1] != cols:
        raise ValueError("measurement shape does not match mask and image width")
    k = np.zeros(measurement.shape[:-2] + (rows, cols), dtype=complex)
    k[..., mask_rows, :] = measurement
    return ifft2c(k)


@dataclass
class ImageSequence:
    """T complex frames of one slice; the time profile at a voxel is its
    fingerprint."""

    data: np.ndarray  # T x rows x cols complex

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 3:
            raise ValueError("image sequence must be T x rows x cols")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("non-finite entries in image sequence")

    @property
    def length(self):
        return self.data.shape[0]

    @property
    def rows(self):
        return self.data.shape[1]

    @property
    def cols(self):
        return self.data.shape[2]

    def fingerprints(self):
        """N x T view of the voxel time profiles, row-major voxel order."""
        frames, rows, cols = self.data.shape
        return np.ascontiguousarray(self.data.transpose(1, 2, 0).reshape(rows * cols, frames))

    @classmethod
    def from_fingerprints(cls, fp, rows, cols):
        frames = fp.shape[1]
        return cls(fp.reshape(rows, cols, frames).transpose(2, 0, 1))


@dataclass
class MeasurementSet:
    masks: MaskSequence
    y: list  # per frame, complex array |frames[t]| x cols
    rows: int
    cols: int

    def __post_init__(self):
        if len(self.y) != self.masks.length:
            raise ValueError("one measurement block per mask frame required")
        for t, (block, rows_t) in enumerate(zip(self.y, self.masks.frames)):
            if block.shape != (rows_t.size, self.cols):
                raise ValueError(f"frame {t}: measurement block shape mismatch")

    @property
    def length(self):
        return self.masks.length

    def embedded(self):
        """(T, rows, cols) zero-embedded k-space and (T, rows, 1) row mask,
        the dense layout used by the batched solvers."""
        frames = self.masks.length
        k = np.zeros((frames, self.rows, self.cols), dtype=complex)
        m = np.zeros((frames, self.rows, 1))
        for t, rows_t in enumerate(self.masks.frames):
            k[t, rows_t, :] = self.y[t]
            m[t, rows_t, 0] = 1.0
        return k, m

    def zero_fill(self) -> ImageSequence:
        k, _ = self.embedded()
        return ImageSequence(ifft2c(k))


def acquire(truth: ImageSequence, masks: MaskSequence, noise_sigma=0.0, seed=0) -> MeasurementSet:
    """Sample each frame's k-space rows, adding complex Gaussian noise of
    total standard deviation `noise_sigma` (split evenly between the real
    and imaginary parts)."""
    if masks.length != truth.length:
        raise ValueError("mask sequence length must match the image sequence")
    if masks.n_rows != truth.rows:
        raise ValueError("mask row count must match the image height")
    rng = np.random.default_rng(seed)
    k = fft2c(truth.data)
    y = []
    part = noise_sigma / np.sqrt(2.0)
    for t, rows_t in enumerate(masks.frames):
        block = k[t, rows_t, :]
        if noise_sigma > 0:
            block = block + (rng.normal(0.0, part, block.shape)
                             + 1j * rng.normal(0.0, part, block.shape))
        y.append(block)
    return MeasurementSet(masks=masks, y=y, rows=truth.rows, cols=truth.cols)


def render_ground_truth(maps: ParameterMaps, seq: PulseSequence) -> ImageSequence:
    """Simulate the noiseless image sequence: per voxel the raw fingerprint
    scaled by proton density; zero-density voxels stay exactly zero."""
    rows, cols = maps.rows, maps.cols
    density = maps.density.ravel()
    fg = density > 0
    fp = np.zeros((rows * cols, seq.length), dtype=complex)
    if fg.any():
        fp[fg] = simulate_fingerprints(maps.t1.ravel()[fg], maps.t2.ravel()[fg],
                                       maps.b0.ravel()[fg], seq) * density[fg][:, None]
    return ImageSequence.from_fingerprints(fp, rows, cols)
