"""Fractional Ito motion: dX = |X|^(1 - 1/(2H)) dB started at the origin.

Marginals are exact through the Gamma representation
``Z = 2 H^2 |X(1)|^(1/H) ~ Gamma(1 - H)``. Paths come either from an
Euler-Maruyama scheme (bootstrapped at the first grid point) or from an
exact grid sampler built on the squared-Bessel process ``Y = phi(X)^2``,
whose dimension is ``2 - 2H``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .core import (
    DomainError,
    HurstExponent,
    RngStream,
    TimeGrid,
    as_hurst,
    log_gamma,
    log_regularized_upper_incomplete_gamma,
    regularized_lower_incomplete_gamma,
)
from .paths import Ensemble, IntegrationError, Model, Trajectory

#: paths simulated per batch by the ensemble generators; bounds buffer memory
CHUNK = 1024


@dataclass(frozen=True)
class FimParams:
    h: HurstExponent

    def __post_init__(self):
        if not isinstance(self.h, HurstExponent):
            object.__setattr__(self, "h", HurstExponent(self.h))


@dataclass(frozen=True)
class EmScheme:
    """Uniform-step Euler-Maruyama settings.

    ``floor=None`` selects the default regularization: ``dt**H`` for
    sub-diffusion and ``1e-3 * dt**H`` otherwise.
    """

    dt: float
    floor: float | None = None
    bootstrap: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("scheme dt must be positive")
        if self.floor is not None and not self.floor >= 0:
            raise DomainError("scheme floor must be non-negative")

    def floor_for(self, h: float) -> float:
        if self.floor is not None:
            return float(self.floor)
        return self.dt**h if h < 0.5 else 1e-3 * self.dt**h


def _positive_time(t):
    if not t > 0:
        raise DomainError(f"time must be positive, got {t!r}")
    return float(t)


def _lam(h, t):
    return 2.0 * h * h / t


def volatility(h, x):
    """sigma(x) = |x|^(1 - 1/(2H)); infinite at 0 for H < 1/2."""
    h = as_hurst(h)
    with np.errstate(divide="ignore"):
        return np.abs(np.asarray(x, dtype=float)) ** (1.0 - 0.5 / h)


def fim_variance_at_one(h) -> float:
    """Var[X(1)] = (2H^2)^(-2H) Gamma(1+H) / Gamma(1-H)."""
    h = as_hurst(h)
    return math.exp(-2.0 * h * math.log(2.0 * h * h) + log_gamma(1.0 + h) - log_gamma(1.0 - h))


def sample_fim_marginal(h, t, stream: RngStream, size=None):
    """Exact draw(s) of X(t).

    The Gamma variate and the sign come from the same generator, gammas first.
    """
    h = as_hurst(h)
    t = _positive_time(t)
    gen = stream.generator()
    z = gen.standard_gamma(1.0 - h, size=size)
    sign = np.where(gen.random(size=size) < 0.5, -1.0, 1.0)
    out = sign * (z / _lam(h, t)) ** h
    return float(out) if size is None else out


def fim_density(h, t, x, log: bool = False):
    """Marginal density of X(t); +inf at x = 0 when H > 1/2."""
    h = as_hurst(h)
    t = _positive_time(t)
    x = np.asarray(x, dtype=float)
    lam = _lam(h, t)
    ax = np.abs(x)
    out = -math.log(2.0 * h) - log_gamma(1.0 - h) + (1.0 - h) * math.log(lam) - lam * ax ** (1.0 / h)
    if h != 0.5:
        with np.errstate(divide="ignore"):
            out = out + (1.0 / h - 2.0) * np.log(ax)
    if not log:
        out = np.exp(out)
    return float(out) if out.ndim == 0 else out


def fim_cdf(h, t, x):
    h = as_hurst(h)
    t = _positive_time(t)
    x = np.asarray(x, dtype=float)
    p = regularized_lower_incomplete_gamma(1.0 - h, _lam(h, t) * np.abs(x) ** (1.0 / h))
    out = 0.5 + 0.5 * np.sign(x) * p
    return float(out) if out.ndim == 0 else out


class Modes(NamedTuple):
    points: tuple
    diverges: bool = False


def fim_mode_locations(h, t) -> Modes:
    """Maxima of the density of X(t).

    Sub-diffusion: the two points +-(t(1-2H)/(2H^2))^H. Regular diffusion: 0.
    Super-diffusion: 0 with ``diverges=True`` since the density is unbounded there.
    """
    h = as_hurst(h)
    t = _positive_time(t)
    if h < 0.5:
        m = (t * (1.0 - 2.0 * h) / (2.0 * h * h)) ** h
        return Modes((-m, m))
    return Modes((0.0,), diverges=h > 0.5)


def fim_cv_score(h) -> float:
    h = as_hurst(h)
    return 1.0 - math.sin(math.pi * h) / (math.pi * h)


def fim_kl(h, t) -> float:
    """KL divergence of X(t) from X(1)."""
    h = as_hurst(h)
    t = _positive_time(t)
    return (1.0 - h) * (t - 1.0 - math.log(t))


def fim_increment_variance(h, t, delta) -> float:
    h = as_hurst(h)
    if t < 0:
        raise DomainError("t must be non-negative")
    if not delta > 0:
        raise DomainError("delta must be positive")
    return fim_variance_at_one(h) * ((t + delta) ** (2 * h) - t ** (2 * h))


def fim_position_covariance(h, t1, t2) -> float:
    h = as_hurst(h)
    if t1 < 0 or t2 < 0:
        raise DomainError("times must be non-negative")
    return fim_variance_at_one(h) * min(t1, t2) ** (2 * h)


def log_fim_tail_probability(h, t, level):
    h = as_hurst(h)
    t = _positive_time(t)
    level = np.asarray(level, dtype=float)
    if np.any(level <= 0):
        raise DomainError("level must be positive")
    return log_regularized_upper_incomplete_gamma(1.0 - h, _lam(h, t) * level ** (1.0 / h))


def fim_tail_probability(h, t, level):
    """P(|X(t)| > level)."""
    out = np.exp(log_fim_tail_probability(h, t, level))
    return float(out) if np.ndim(out) == 0 else out


# -- path simulation ------------------------------------------------------------------


def _uniform_step(grid: TimeGrid, scheme: EmScheme | None = None) -> float:
    dt = grid.step
    if dt is None:
        raise DomainError("this integrator needs a uniform time grid")
    if scheme is not None and not math.isclose(scheme.dt, dt, rel_tol=1e-9):
        raise DomainError(f"scheme dt {scheme.dt} does not match grid step {dt}")
    return dt


def _em_fim_block(h, scheme, grid, streams, backend=None):
    dt = _uniform_step(grid, scheme)
    n = len(grid)
    pos = np.zeros((len(streams), n))
    if n == 1:
        return pos
    noise = np.empty((len(streams), n - 1))
    for i, s in enumerate(streams):
        noise[i] = s.child(1).generator().standard_normal(n - 1)
    start = 0
    if scheme.bootstrap:
        pos[:, 1] = [sample_fim_marginal(h, grid.times[1], s.child(0)) for s in streams]
        start = 1
    bad = kernels.em_volatility(pos, noise, start, dt, h, scheme.floor_for(h), backend)
    if bad >= 0:
        raise IntegrationError(bad)
    return pos


def simulate_fim_em(p: FimParams, scheme: EmScheme, grid: TimeGrid, stream: RngStream,
                    backend=None) -> Trajectory:
    """Euler-Maruyama path of FIM on a uniform grid.

    With ``scheme.bootstrap`` the value at ``grid.times[1]`` is an exact marginal
    draw, which moves the path off the trivial solution X = 0. The volatility is
    evaluated at ``max(|x|, floor)``; a super-diffusive path sitting exactly at 0
    restarts from ``+-floor`` with the sign of the step noise.
    """
    pos = _em_fim_block(p.h.h, scheme, grid, [stream], backend)
    return Trajectory(grid, pos[0])


def simulate_fim_em_ensemble(p: FimParams, scheme: EmScheme, grid: TimeGrid, paths: int,
                             seed: int, first_stream: int = 0, backend=None) -> Ensemble:
    """``paths`` EM trajectories, path i driven by ``RngStream(seed, first_stream + i)``."""
    out = _batched(lambda ss: _em_fim_block(p.h.h, scheme, grid, ss, backend),
                   grid, paths, seed, first_stream)
    return Ensemble(Model.FIM, p.h.h, grid, out, seed)


def _batched(block, grid, paths, seed, first_stream):
    if paths < 1:
        raise DomainError("need at least one path")
    out = np.empty((paths, len(grid)))
    for lo in range(0, paths, CHUNK):
        hi = min(lo + CHUNK, paths)
        out[lo:hi] = block([RngStream(seed, first_stream + i) for i in range(lo, hi)])
    return out


def zero_hit_probability(h, a, b, dt, backend=None):
    """Probability that the Bessel image of a FIM path from |xi|=a to |xi|=b crosses 0."""
    h = as_hurst(h)
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = kernels.hit_probability(h, a.ravel(), b.ravel(), dt, backend).reshape(a.shape)
    return float(out) if out.ndim == 0 else out


def _exact_fim_block(h, grid, streams, backend=None):
    dt = _uniform_step(grid)
    n = len(grid)
    m = len(streams)
    steps = n - 1
    pos = np.zeros((m, n))
    if steps == 0:
        return pos
    extra = 2 * steps + 64
    u_pois = np.empty((m, steps))
    u_sign = np.empty((m, steps))
    nrm = np.empty((m, extra))
    unf = np.empty((m, 2 * extra))
    for i, s in enumerate(streams):
        g = s.generator()
        u_pois[i] = g.random(steps)
        u_sign[i] = g.random(steps)
        nrm[i] = g.standard_normal(extra)
        unf[i] = g.random(2 * extra)
    inrm = np.zeros(m, dtype=np.int64)
    iunf = np.zeros(m, dtype=np.int64)
    y = np.zeros(m)
    sign = np.ones(m)
    shape0 = 1.0 - h
    for k in range(steps):
        y_new = kernels.besq_step(y, shape0, dt, u_pois[:, k], nrm, unf, inrm, iunf, backend)
        q = kernels.hit_probability(h, np.sqrt(y), np.sqrt(y_new), dt, backend)
        u = u_sign[:, k]
        hit = u < q
        sign = np.where(hit, np.where(u < 0.5 * q, 1.0, -1.0), sign)
        y = y_new
        # |X| = (|xi| / 2H)^(2H) with xi^2 = y
        pos[:, k + 1] = sign * (y / (4.0 * h * h)) ** h
    return pos


def simulate_fim_exact(p: FimParams, grid: TimeGrid, stream: RngStream, backend=None) -> Trajectory:
    """FIM sampled exactly in law at the nodes of a uniform grid.

    ``phi(X)^2`` is a squared Bessel process of dimension ``2 - 2H`` whose
    transitions are Poisson mixtures of Gamma laws. The sign is kept between
    nodes unless the Bessel bridge touched zero, in which case a fair sign is
    drawn for the new excursion.
    """
    pos = _exact_fim_block(p.h.h, grid, [stream], backend)
    return Trajectory(grid, pos[0])


def simulate_fim_exact_ensemble(p: FimParams, grid: TimeGrid, paths: int, seed: int,
                                first_stream: int = 0, backend=None) -> Ensemble:
    out = _batched(lambda ss: _exact_fim_block(p.h.h, grid, ss, backend),
                   grid, paths, seed, first_stream)
    return Ensemble(Model.FIM, p.h.h, grid, out, seed)
