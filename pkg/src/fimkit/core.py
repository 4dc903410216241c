"""Random streams, time grids, Hurst exponents and special functions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import HAS_NUMBA, njit

_U64_MAX = 2**64 - 1


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class Diffusivity(enum.Enum):
    SUB = "sub"
    REGULAR = "regular"
    SUPER = "super"


@dataclass(frozen=True)
class HurstExponent:
    h: float

    def __post_init__(self):
        h = float(self.h)
        if not (0.0 < h < 1.0) or math.isnan(h):
            raise DomainError(f"Hurst exponent must lie in (0,1), got {self.h!r}")
        object.__setattr__(self, "h", h)

    def classification(self) -> Diffusivity:
        if self.h < 0.5:
            return Diffusivity.SUB
        if self.h > 0.5:
            return Diffusivity.SUPER
        return Diffusivity.REGULAR

    def __float__(self):
        return self.h


def as_hurst(h) -> float:
    """Validate ``h`` (float or HurstExponent) and return it as a float."""
    if isinstance(h, HurstExponent):
        return h.h
    return HurstExponent(h).h


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream_id) pair naming an independent Philox stream.

    Streams are plain values: every call to :meth:`generator` restarts the
    sequence from the beginning. Sub-streams of one stream are addressed with
    :meth:`child` so that several consumers (bootstrap draw, step noise) never
    share counters.
    """

    seed: int
    stream_id: int = 0
    path: tuple = field(default=())

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _U64_MAX:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    def child(self, k: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (int(k),))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self.path)
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class TimeGrid:
    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise DomainError("time grid must be a non-empty 1-d sequence")
        if t[0] != 0.0:
            raise DomainError("time grid must start at exactly 0")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise DomainError("time grid must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, t_max: float, steps: int) -> "TimeGrid":
        if steps < 1 or not t_max > 0:
            raise DomainError("uniform grid needs steps >= 1 and t_max > 0")
        # i*dt rather than linspace so that every step is bit-identical
        dt = t_max / steps
        return cls(np.arange(steps + 1) * dt)

    def __len__(self):
        return self.times.size

    @property
    def step(self) -> float | None:
        """Common step if the grid is uniform (to 1e-9 relative), else None."""
        if self.times.size < 2:
            return None
        d = np.diff(self.times)
        if np.all(np.abs(d - d[0]) <= 1e-9 * d[0]):
            return float(d[0])
        return None

    @property
    def is_uniform(self) -> bool:
        return self.step is not None


def gaussian_stream(stream: RngStream, n: int) -> np.ndarray:
    if n < 0:
        raise DomainError("n must be non-negative")
    return stream.generator().standard_normal(n)


def gamma_sample(shape: float, stream: RngStream, size=None):
    """Gamma(shape, rate 1) draw(s).

    numpy's sampler boosts ``shape < 1`` through Gamma(shape + 1) * U**(1/shape),
    so it is valid on the whole positive axis.
    """
    if not shape > 0:
        raise DomainError(f"gamma shape must be positive, got {shape!r}")
    return stream.generator().standard_gamma(shape, size=size)


def log_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


# -- regularized incomplete gamma -------------------------------------------------

_EPS = 1e-16
_TINY = 1e-300
_MAXIT = 2000


@njit
def _gamma_series(a, x, lga):
    # P(a, x) by its power series; x < a + 1
    ap = a
    s = 1.0 / a
    d = s
    for _ in range(_MAXIT):
        ap += 1.0
        d *= x / ap
        s += d
        if abs(d) < abs(s) * _EPS:
            break
    return s * math.exp(-x + a * math.log(x) - lga)


@njit
def _log_gamma_cf(a, x, lga):
    # log Q(a, x) by modified Lentz on the Legendre continued fraction; x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    hh = d
    for i in range(1, _MAXIT):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        hh *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return -x + a * math.log(x) - lga + math.log(hh)


@njit
def _gammainc_scalar(a, x, lga):
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x, lga)
    return -math.expm1(_log_gamma_cf(a, x, lga))


@njit
def _log_gammaincc_scalar(a, x, lga):
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return math.log1p(-_gamma_series(a, x, lga))
    return _log_gamma_cf(a, x, lga)


@njit
def _gammainc_array(a, x, lga):
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = _gammainc_scalar(a, x[i], lga)
    return out


@njit
def _log_gammaincc_array(a, x, lga):
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = _log_gammaincc_scalar(a, x[i], lga)
    return out


def _series_np(a, x, lga):
    ap = np.full(x.shape, a)
    s = np.full(x.shape, 1.0 / a)
    d = s.copy()
    active = np.ones(x.shape, dtype=bool)
    for _ in range(_MAXIT):
        if not active.any():
            break
        ap[active] += 1.0
        d[active] *= x[active] / ap[active]
        s[active] += d[active]
        active &= np.abs(d) >= np.abs(s) * _EPS
    return s * np.exp(-x + a * np.log(x) - lga)


def _log_cf_np(a, x, lga):
    b = x + 1.0 - a
    c = np.full(x.shape, 1.0 / _TINY)
    d = 1.0 / b
    hh = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAXIT):
        if not active.any():
            break
        an = -i * (i - a)
        b = b + 2.0
        dn = an * d + b
        dn = np.where(np.abs(dn) < _TINY, _TINY, dn)
        cn = b + an / c
        cn = np.where(np.abs(cn) < _TINY, _TINY, cn)
        dn = 1.0 / dn
        delta = dn * cn
        d = np.where(active, dn, d)
        c = np.where(active, cn, c)
        hh = np.where(active, hh * delta, hh)
        active &= np.abs(delta - 1.0) >= _EPS
    return -x + a * np.log(x) - lga + np.log(hh)


def _incgamma_np(a, x, lga, log_upper):
    out = np.zeros(x.shape) if not log_upper else np.zeros(x.shape)
    pos = x > 0
    ser = pos & (x < a + 1.0)
    cf = pos & ~ser
    if ser.any():
        p = _series_np(a, x[ser], lga)
        out[ser] = np.log1p(-p) if log_upper else p
    if cf.any():
        lq = _log_cf_np(a, x[cf], lga)
        out[cf] = lq if log_upper else -np.expm1(lq)
    return out


def _check_incgamma_args(shape, x):
    if not shape > 0:
        raise DomainError(f"shape must be positive, got {shape!r}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("incomplete gamma needs x >= 0")
    return arr


def regularized_lower_incomplete_gamma(shape: float, x):
    """P(shape, x) = P(Z <= x) for Z ~ Gamma(shape, 1). Scalar or array ``x``."""
    arr = _check_incgamma_args(shape, x)
    lga = math.lgamma(shape)
    flat = np.ascontiguousarray(arr.ravel())
    if HAS_NUMBA:
        res = _gammainc_array(float(shape), flat, lga)
    else:
        res = _incgamma_np(float(shape), flat, lga, log_upper=False)
    res = np.clip(res, 0.0, 1.0).reshape(arr.shape)
    return float(res) if res.ndim == 0 else res


def log_regularized_upper_incomplete_gamma(shape: float, x):
    """log Q(shape, x) = log P(Z > x), accurate far into the tail."""
    arr = _check_incgamma_args(shape, x)
    lga = math.lgamma(shape)
    flat = np.ascontiguousarray(arr.ravel())
    if HAS_NUMBA:
        res = _log_gammaincc_array(float(shape), flat, lga)
    else:
        res = _incgamma_np(float(shape), flat, lga, log_upper=True)
    res = np.minimum(res, 0.0).reshape(arr.shape)
    return float(res) if res.ndim == 0 else res
