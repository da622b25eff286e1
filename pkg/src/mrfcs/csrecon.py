"""Per-frame compressed-sensing reconstruction.

Minimizes  ||F_u(x) - y||_2^2 + aw * S(W x) + atv * S(D x)  by nonlinear
conjugate gradient (Polak-Ribiere+ with restart) and Armijo backtracking,
where W is the multilevel Daubechies transform, D the periodic first
differences in both directions, and S the smoothed complex-magnitude L1
sum S(z) = sum sqrt(|z_j|^2 + mu).

Everything is written against a frame *batch* (leading axis); the
single-frame entry point is a batch of one. Per-frame line-search state
is tracked with boolean masks so frames accept or backtrack
independently while sharing the vectorized transforms.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .kspace import fft2c, ifft2c
from .wavelets import WaveletTransform2D


@dataclass(frozen=True)
class CsConfig:
    alpha_wavelet: float = 1e-3
    alpha_tv: float = 1e-3
    smooth_mu: float = 1e-15
    max_iters: int = 30
    grad_tol: float = 1e-9
    initial_step: float = 1.0
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 20
    wavelet_order: int = 4
    wavelet_levels: int = 4

    def __post_init__(self):
        if self.alpha_wavelet < 0 or self.alpha_tv < 0:
            raise ValueError("regularization weights must be >= 0")
        if self.smooth_mu <= 0:
            raise ValueError("smooth_mu must be > 0")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink factor must lie in (0, 1)")
        if self.initial_step <= 0 or self.sufficient_decrease <= 0:
            raise ValueError("line-search parameters must be positive")

    def scaled(self, factor):
        """The same configuration with both weights multiplied by `factor`
        (used to tie the weights to the measurement scale)."""
        return replace(self, alpha_wavelet=self.alpha_wavelet * factor,
                       alpha_tv=self.alpha_tv * factor)


def finite_differences(x):
    """Periodic forward differences along columns and rows."""
    return np.roll(x, -1, axis=-1) - x, np.roll(x, -1, axis=-2) - x


def finite_differences_adjoint(dh, dv):
    return (np.roll(dh, 1, axis=-1) - dh) + (np.roll(dv, 1, axis=-2) - dv)


def _smooth_abs(z, mu):
    return np.sqrt(np.abs(z) ** 2 + mu)


class FrameProblem:
    """One objective/gradient pair over a batch of frames.

    y_emb is the zero-embedded k-space (B, rows, cols) and row_mask the
    0/1 sampled-row indicator (B, rows, 1); aw/atv are per-frame weights.
    """

    def __init__(self, y_emb, row_mask, cfg: CsConfig, aw=None, atv=None):
        self.y = np.asarray(y_emb, dtype=complex)
        self.mask = np.asarray(row_mask, dtype=float)
        self.cfg = cfg
        n = self.y.shape[0]
        self.aw = np.full(n, cfg.alpha_wavelet) if aw is None else np.asarray(aw, float)
        self.atv = np.full(n, cfg.alpha_tv) if atv is None else np.asarray(atv, float)
        self.wavelet = WaveletTransform2D(cfg.wavelet_order, cfg.wavelet_levels)
        rows, cols = self.y.shape[-2:]
        if rows % 2 or cols % 2:
            raise ValueError("frame sides must be even for the wavelet transform")

    def objective(self, x, sel=None):
        y = self.y if sel is None else self.y[sel]
        mask = self.mask if sel is None else self.mask[sel]
        aw = self.aw if sel is None else self.aw[sel]
        atv = self.atv if sel is None else self.atv[sel]
        mu = self.cfg.smooth_mu
        r = mask * fft2c(x) - y
        val = np.sum(np.abs(r) ** 2, axis=(-2, -1))
        if aw.any():
            w = self.wavelet.forward(x)
            val = val + aw * np.sum(_smooth_abs(w, mu), axis=(-2, -1))
        if atv.any():
            dh, dv = finite_differences(x)
            val = val + atv * (np.sum(_smooth_abs(dh, mu), axis=(-2, -1))
                               + np.sum(_smooth_abs(dv, mu), axis=(-2, -1)))
        return val

    def gradient(self, x):
        mu = self.cfg.smooth_mu
        g = 2.0 * ifft2c(self.mask * (self.mask * fft2c(x) - self.y))
        if self.aw.any():
            w = self.wavelet.forward(x)
            g = g + self.aw[:, None, None] * self.wavelet.inverse(w / _smooth_abs(w, mu))
        if self.atv.any():
            dh, dv = finite_differences(x)
            g = g + self.atv[:, None, None] * finite_differences_adjoint(
                dh / _smooth_abs(dh, mu), dv / _smooth_abs(dv, mu))
        return g


@dataclass
class SolveResult:
    images: np.ndarray
    objectives: np.ndarray        # final per-frame objective values
    grad_norms: np.ndarray
    iterations: int
    line_search_failed: np.ndarray  # per-frame flag
    trace: list = field(default_factory=list)  # per-iteration (objective, grad_norm) arrays


def solve_batch(problem: FrameProblem, x0, record_trace=False) -> SolveResult:
    """Nonlinear CG over the batch; every accepted step satisfies Armijo
    sufficient decrease, so per-frame objectives are non-increasing."""
    cfg = problem.cfg
    x = np.asarray(x0, dtype=complex).copy()
    g = problem.gradient(x)
    d = -g
    f = problem.objective(x)
    gg = np.sum(np.abs(g) ** 2, axis=(-2, -1))
    n = x.shape[0]
    t_mem = np.full(n, cfg.initial_step)
    failed = np.zeros(n, dtype=bool)
    trace = []
    if record_trace:
        trace.append((f.copy(), np.sqrt(gg)))
    it = 0
    for it in range(1, cfg.max_iters + 1):
        live = ~failed & (np.sqrt(gg) >= cfg.grad_tol)
        if not live.any():
            it -= 1
            break
        slope = np.sum((g.conj() * d).real, axis=(-2, -1))
        restart = live & (slope >= 0)
        if restart.any():
            d[restart] = -g[restart]
            slope[restart] = -gg[restart]
        t = np.minimum(t_mem / cfg.shrink, cfg.initial_step)
        pending = live.copy()
        for _ in range(cfg.max_backtracks):
            idx = np.where(pending)[0]
            xn = x[idx] + t[idx, None, None] * d[idx]
            fn = problem.objective(xn, sel=idx)
            ok = fn <= f[idx] + cfg.sufficient_decrease * t[idx] * slope[idx]
            acc = idx[ok]
            x[acc] = xn[ok]
            f[acc] = fn[ok]
            t_mem[acc] = t[acc]
            pending[acc] = False
            if not pending.any():
                break
            t[pending] *= cfg.shrink
        failed |= pending  # frames whose line search stalled are frozen
        g_new = problem.gradient(x)
        gg_new = np.sum(np.abs(g_new) ** 2, axis=(-2, -1))
        beta = np.sum((g_new.conj() * (g_new - g)).real, axis=(-2, -1))
        beta = np.maximum(beta / np.maximum(gg, np.finfo(float).tiny), 0.0)
        d = -g_new + beta[:, None, None] * d
        g, gg = g_new, gg_new
        if record_trace:
            trace.append((f.copy(), np.sqrt(gg)))
    if failed.any():
        warnings.warn(f"line search stalled on {int(failed.sum())} frame(s); "
                      "returning current iterates", RuntimeWarning)
    return SolveResult(images=x, objectives=f, grad_norms=np.sqrt(gg),
                       iterations=it, line_search_failed=failed, trace=trace)


def _embed_single(y, mask_rows, rows, cols):
    y = np.asarray(y, dtype=complex)
    mask_rows = np.asarray(mask_rows, dtype=np.int64)
    k = np.zeros((1, rows, cols), dtype=complex)
    m = np.zeros((1, rows, 1))
    k[0, mask_rows, :] = y
    m[0, mask_rows, 0] = 1.0
    return k, m


def objective(x, y, mask_rows, cfg: CsConfig):
    """Single-frame objective value (see module docstring for the form)."""
    rows, cols = np.asarray(x).shape
    k, m = _embed_single(y, mask_rows, rows, cols)
    return float(FrameProblem(k, m, cfg).objective(np.asarray(x)[None])[0])


def gradient(x, y, mask_rows, cfg: CsConfig):
    """Single-frame gradient, scaled so that for a real direction h the
    directional derivative is sum(Re(conj(g) * h))."""
    rows, cols = np.asarray(x).shape
    k, m = _embed_single(y, mask_rows, rows, cols)
    return FrameProblem(k, m, cfg).gradient(np.asarray(x, dtype=complex)[None])[0]


def reconstruct_frame(y, mask_rows, rows, cols, cfg: CsConfig, x0=None,
                      record_trace=False):
    """Reconstruct one frame; x0 defaults to the zero-fill adjoint."""
    k, m = _embed_single(y, mask_rows, rows, cols)
    if x0 is None:
        x0 = ifft2c(k * m)
    else:
        x0 = np.asarray(x0, dtype=complex)[None]
    problem = FrameProblem(k, m, cfg)
    res = solve_batch(problem, x0, record_trace=record_trace)
    return res.images[0], res


def write_trace_csv(res: SolveResult, path):
    """Iteration trace as CSV, one row per (iteration, frame)."""
    with open(path, "w") as fh:
        fh.write("iteration,frame,objective,grad_norm\n")
        for i, (fv, gv) in enumerate(res.trace):
            for j in range(len(fv)):
                fh.write(f"{i},{j},{fv[j]!r},{gv[j]!r}\n")
