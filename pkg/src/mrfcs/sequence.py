"""Randomized flip-angle / repetition-time schedules.

The same schedule drives both the acquisition simulation and the
dictionary simulation, so a schedule is generated once (seeded) and
shared. Flip angles follow a repeating piecewise sinusoidal curve with
per-frame Gaussian noise; repetition times default to a constant 10 ms.
"""

from dataclasses import dataclass

import numpy as np

BASE_TR_MS = 10.0
_PERIOD = 500


@dataclass(frozen=True)
class PulseSequence:
    fa: np.ndarray  # degrees per frame
    tr: np.ndarray  # ms per frame

    def __post_init__(self):
        object.__setattr__(self, "fa", np.asarray(self.fa, dtype=float))
        object.__setattr__(self, "tr", np.asarray(self.tr, dtype=float))
        if self.fa.shape != self.tr.shape or self.fa.ndim != 1:
            raise ValueError("fa and tr must be 1-D arrays of the same length")
        if not np.all(np.isfinite(self.fa)):
            raise ValueError("flip angles must be finite")
        if not np.all(self.tr > 0):
            raise ValueError("repetition times must be positive")

    @property
    def length(self):
        return self.fa.shape[0]


def _base_flip_angle(t, variant):
    """Deterministic flip-angle curve at 1-based frame index t (vectorized).

    Periodic with period 500. The third segment of the schedule formula is
    a constant expression; `variant="literal"` evaluates it exactly as
    written while `variant="corrected"` substitutes the time-dependent
    sinusoid it resembles.
    """
    t = ((np.asarray(t) - 1) % _PERIOD) + 1
    first = 10.0 + np.sin(2 * np.pi * t / 500.0) * 50.0
    if variant == "literal":
        third = np.full_like(first, 5.0 + np.sin(2 * np.pi / 200.0 * 25.0))
    elif variant == "corrected":
        third = 5.0 + np.sin(2 * np.pi * t / 200.0) * 25.0
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return np.where(t <= 250, first, np.where(t <= 300, 10.0, third))


def generate_sequence(length, eta_sigma=5.0, seed=0, variant="literal",
                      tr_jitter=0.0) -> PulseSequence:
    """Build a seeded schedule of `length` frames.

    eta ~ N(0, eta_sigma^2) is added per frame to the sinusoidal segments
    (the flat 10-degree segment carries no noise term); the result is
    clamped at zero. `tr_jitter` adds U(-j, +j) ms around the 10 ms
    repetition time and is off by default.
    """
    if length < 1:
        raise ValueError("sequence length must be >= 1")
    if eta_sigma < 0:
        raise ValueError("eta_sigma must be >= 0")
    if not 0 <= tr_jitter < BASE_TR_MS:
        raise ValueError("tr_jitter must lie in [0, 10) ms")
    rng = np.random.default_rng(seed)
    t = np.arange(1, length + 1)
    fa = _base_flip_angle(t, variant)
    if eta_sigma > 0:
        eta = rng.normal(0.0, eta_sigma, size=length)
        base = ((t - 1) % _PERIOD) + 1
        noisy = (base <= 250) | (base > 300)
        fa = fa + np.where(noisy, eta, 0.0)
    fa = np.maximum(fa, 0.0)
    tr = np.full(length, BASE_TR_MS)
    if tr_jitter > 0:
        tr = tr + rng.uniform(-tr_jitter, tr_jitter, size=length)
    return PulseSequence(fa=fa, tr=tr)


def write_sequence_csv(seq: PulseSequence, path):
    """Dump the schedule as `t,fa_deg,tr_ms` rows for inspection."""
    with open(path, "w") as fh:
        fh.write("t,fa_deg,tr_ms\n")
        for i in range(seq.length):
            fh.write(f"{i + 1},{float(seq.fa[i])!r},{float(seq.tr[i])!r}\n")


def read_sequence_csv(path) -> PulseSequence:
    fa = []
    tr = []
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "t,fa_deg,tr_ms":
            raise ValueError(f"unexpected sequence CSV header: {header.strip()!r}")
        for line in fh:
            _, f, r = line.strip().split(",")
            fa.append(float(f))
            tr.append(float(r))
    return PulseSequence(fa=np.array(fa), tr=np.array(tr))
