"""Fractional Brownian motion: exact path generation and closed-form statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.linalg import lapack

from .core import DomainError, HurstExponent, RngStream, TimeGrid, as_hurst
from .paths import Ensemble, Model, Trajectory

#: largest grid accepted by the O(n^3) Cholesky generator
CHOLESKY_CAP = 4096
CHUNK = 1024


class NotPositiveDefinite(np.linalg.LinAlgError):
    def __init__(self, pivot: int):
        super().__init__(f"covariance is not positive definite at pivot {pivot}")
        self.pivot = pivot


class EmbeddingError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class FbmParams:
    h: HurstExponent
    var_b1: float = 1.0

    def __post_init__(self):
        if not isinstance(self.h, HurstExponent):
            object.__setattr__(self, "h", HurstExponent(self.h))
        if not self.var_b1 > 0:
            raise DomainError("var_b1 must be positive")


def _params(p) -> FbmParams:
    return p if isinstance(p, FbmParams) else FbmParams(p)


def fbm_covariance(p, t1, t2):
    p = _params(p)
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    if np.any(t1 < 0) or np.any(t2 < 0):
        raise DomainError("times must be non-negative")
    e = 2.0 * p.h.h
    out = 0.5 * p.var_b1 * (t1**e - np.abs(t1 - t2) ** e + t2**e)
    return float(out) if out.ndim == 0 else out


def fbm_kernel(h, t, u):
    """Moving-average kernel of the Mandelbrot-van Ness representation."""
    h = as_hurst(h)
    if not t > 0:
        raise DomainError("t must be positive")
    u = np.asarray(u, dtype=float)
    if np.any(u >= t):
        raise DomainError("kernel needs u < t")
    e = h - 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        past = np.where(u < 0, np.abs(u) ** e, 0.0)
    out = (t - u) ** e - past
    return float(out) if out.ndim == 0 else out


# -- generators -----------------------------------------------------------------------


def _cholesky_factor(cov):
    c, info = lapack.dpotrf(cov, lower=1, clean=1)
    if info > 0:
        n = cov.shape[0]
        jitter = 1e-12 * np.trace(cov) / n
        c, info = lapack.dpotrf(cov + jitter * np.eye(n), lower=1, clean=1)
        if info > 0:
            raise NotPositiveDefinite(int(info) - 1)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return c


def _cholesky_block(p, grid, streams):
    t = grid.times[1:]
    n = t.size
    out = np.zeros((len(streams), n + 1))
    if n == 0:
        return out
    if n + 1 > CHOLESKY_CAP:
        raise DomainError(f"grid of {n + 1} points exceeds the Cholesky cap {CHOLESKY_CAP}")
    L = _cholesky_factor(fbm_covariance(p, t[:, None], t[None, :]))
    # one product per path so a path never depends on the batch it was computed in
    for i, s in enumerate(streams):
        out[i, 1:] = L @ s.generator().standard_normal(n)
    return out


def simulate_fbm_cholesky(p: FbmParams, grid: TimeGrid, stream: RngStream) -> Trajectory:
    """Exact sample on an arbitrary grid via the Cholesky factor of the covariance."""
    return Trajectory(grid, _cholesky_block(_params(p), grid, [stream])[0])


def fgn_autocovariance(h, n, var_b1=1.0, dt=1.0):
    """Autocovariance of unit-lag increments at lags 0..n-1, scaled to step ``dt``."""
    k = np.arange(n, dtype=float)
    e = 2.0 * h
    g = 0.5 * (np.abs(k + 1) ** e - 2 * k**e + np.abs(k - 1) ** e)
    return var_b1 * dt**e * g


def circulant_eigenvalues(h, n, var_b1=1.0, dt=1.0):
    """Eigenvalues of the size-2n circulant embedding of ``n`` increments."""
    g = fgn_autocovariance(h, n + 1, var_b1, dt)
    row = np.concatenate([g, g[-2:0:-1]])
    lam = np.fft.fft(row).real
    tol = 1e-9 * lam.max()
    if lam.min() < -tol:
        raise EmbeddingError(f"circulant embedding has eigenvalue {lam.min():.3e} below -{tol:.3e}")
    return np.maximum(lam, 0.0)


def _circulant_block(p, grid, streams):
    dt = grid.step
    if dt is None:
        raise DomainError("circulant generator needs a uniform grid")
    n = len(grid) - 1
    if n < 1:
        raise DomainError("circulant generator needs at least 2 grid points")
    lam = circulant_eigenvalues(p.h.h, n, p.var_b1, dt)
    m = 2 * n
    w = np.empty((len(streams), m), dtype=complex)
    for i, s in enumerate(streams):
        z = s.generator().standard_normal(2 * m)
        w[i] = z[:m] + 1j * z[m:]
    y = np.fft.fft(np.sqrt(lam / m) * w, axis=1)
    out = np.zeros((len(streams), n + 1))
    out[:, 1:] = np.cumsum(y.real[:, :n], axis=1)
    return out


def simulate_fbm_circulant(p: FbmParams, grid: TimeGrid, stream: RngStream) -> Trajectory:
    """Davies-Harte sample on a uniform grid, O(n log n)."""
    return Trajectory(grid, _circulant_block(_params(p), grid, [stream])[0])


def simulate_fbm_ensemble(p: FbmParams, grid: TimeGrid, paths: int, seed: int,
                          method: str = "circulant", first_stream: int = 0) -> Ensemble:
    p = _params(p)
    block = {"circulant": _circulant_block, "cholesky": _cholesky_block}[method]
    if paths < 1:
        raise DomainError("need at least one path")
    out = np.empty((paths, len(grid)))
    for lo in range(0, paths, CHUNK):
        hi = min(lo + CHUNK, paths)
        out[lo:hi] = block(p, grid, [RngStream(seed, first_stream + i) for i in range(lo, hi)])
    return Ensemble(Model.FBM, p.h.h, grid, out, seed)


# -- closed forms ---------------------------------------------------------------------


def fbm_variance(p, t):
    p = _params(p)
    return p.var_b1 * t ** (2.0 * p.h.h)


def fbm_density(p, t, x, log: bool = False):
    p = _params(p)
    if not t > 0:
        raise DomainError("t must be positive")
    v = fbm_variance(p, t)
    x = np.asarray(x, dtype=float)
    out = -0.5 * x * x / v - 0.5 * math.log(2.0 * math.pi * v)
    if not log:
        out = np.exp(out)
    return float(out) if out.ndim == 0 else out


def fbm_cv_score() -> float:
    return 1.0 - 2.0 / math.pi


def fbm_kl(h, t) -> float:
    """KL divergence of the position at t from the position at 1."""
    h = as_hurst(h)
    if not t > 0:
        raise DomainError("t must be positive")
    return 0.5 * (t ** (2 * h) - 1.0) - h * math.log(t)


def fbm_increment_variance(p, t, delta) -> float:
    p = _params(p)
    if t < 0:
        raise DomainError("t must be non-negative")
    if not delta > 0:
        raise DomainError("delta must be positive")
    return p.var_b1 * delta ** (2.0 * p.h.h)


def fbm_velocity_covariance(p, t1, t2) -> float:
    p = _params(p)
    if not (t1 > 0 and t2 > 0):
        raise DomainError("times must be positive")
    if t1 == t2:
        raise DomainError("velocity covariance is singular at t1 == t2")
    h = p.h.h
    return p.var_b1 * h * (2 * h - 1) / abs(t1 - t2) ** (2 * (1 - h))


def log_fbm_tail_probability(p, t, level):
    """log P(|B(t)| > level), stable far into the tail."""
    p = _params(p)
    if not t > 0:
        raise DomainError("t must be positive")
    level = np.asarray(level, dtype=float)
    if np.any(level <= 0):
        raise DomainError("level must be positive")
    z = level / math.sqrt(fbm_variance(p, t))
    out = math.log(2.0) + special.log_ndtr(-z)
    return float(out) if out.ndim == 0 else out


def fbm_tail_probability(p, t, level):
    out = np.exp(log_fbm_tail_probability(p, t, level))
    return float(out) if np.ndim(out) == 0 else out
