"""Langevin representation of FIM: diffusion in the potential (H - 1/2) ln|x|.

``xi = phi(X)`` with ``phi(x) = 2H |x|^(1/(2H)) sign(x)`` turns the
drift-less FIM equation into ``d xi = (1/2 - H)/xi dt + dB``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import DomainError, HurstExponent, RngStream, TimeGrid, as_hurst
from .fim import CHUNK, EmScheme, _uniform_step, sample_fim_marginal
from .paths import Ensemble, IntegrationError, Model, Trajectory


@dataclass(frozen=True)
class DlpParams:
    h: HurstExponent

    def __post_init__(self):
        if not isinstance(self.h, HurstExponent):
            object.__setattr__(self, "h", HurstExponent(self.h))

    @property
    def r(self) -> float:
        """Potential strength; negative exactly for sub-diffusion."""
        return self.h.h - 0.5


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


def phi(h, x):
    h = as_hurst(h)
    x = np.asarray(x, dtype=float)
    return _out(2.0 * h * np.abs(x) ** (0.5 / h) * np.sign(x))


def phi_inverse(h, y):
    h = as_hurst(h)
    y = np.asarray(y, dtype=float)
    return _out((np.abs(y) / (2.0 * h)) ** (2.0 * h) * np.sign(y))


def phi_prime(h, x):
    """phi'(x) = |x|^(1/(2H) - 1), the reciprocal of the FIM volatility."""
    h = as_hurst(h)
    with np.errstate(divide="ignore"):
        return _out(np.abs(np.asarray(x, dtype=float)) ** (0.5 / h - 1.0))


def phi_second(h, x):
    h = as_hurst(h)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return _out((0.5 / h - 1.0) * np.abs(x) ** (0.5 / h - 2.0) * np.sign(x))


def potential(h, x):
    h = as_hurst(h)
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise DomainError("the logarithmic potential is singular at 0")
    return _out((h - 0.5) * np.log(np.abs(x)))


def drift(h, x):
    """-U'(x) = (1/2 - H)/x."""
    h = as_hurst(h)
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise DomainError("the drift is singular at 0")
    return _out((0.5 - h) / x)


def default_floor(h: float, scheme: EmScheme) -> float:
    """Image under phi of the FIM scheme's volatility floor."""
    return float(phi(h, scheme.floor_for(h)))


def _langevin_block(h, scheme, grid, streams, backend=None):
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
        x1 = np.array([sample_fim_marginal(h, grid.times[1], s.child(0)) for s in streams])
        pos[:, 1] = phi(h, x1)
        start = 1
    bad = kernels.em_log_potential(pos, noise, start, dt, h, default_floor(h, scheme), backend)
    if bad >= 0:
        raise IntegrationError(bad)
    return pos


def simulate_dlp_langevin(p: DlpParams, scheme: EmScheme, grid: TimeGrid, stream: RngStream,
                          backend=None) -> Trajectory:
    """Euler-Maruyama path in xi-coordinates.

    Uses the same stream layout as :func:`fimkit.fim.simulate_fim_em`: child 0
    bootstraps the first node, child 1 drives the steps. ``1/xi`` is evaluated
    at ``sign(xi) * max(|xi|, floor)`` with the floor mapped through phi.
    """
    return Trajectory(grid, _langevin_block(p.h.h, scheme, grid, [stream], backend)[0])


def simulate_dlp_ensemble(p: DlpParams, scheme: EmScheme, grid: TimeGrid, paths: int, seed: int,
                          first_stream: int = 0, backend=None) -> Ensemble:
    """Langevin ensemble mapped back to FIM coordinates through phi_inverse."""
    if paths < 1:
        raise DomainError("need at least one path")
    h = p.h.h
    out = np.empty((paths, len(grid)))
    for lo in range(0, paths, CHUNK):
        hi = min(lo + CHUNK, paths)
        ss = [RngStream(seed, first_stream + i) for i in range(lo, hi)]
        out[lo:hi] = phi_inverse(h, _langevin_block(h, scheme, grid, ss, backend))
    return Ensemble(Model.DLP_MAPPED, h, grid, out, seed)
