"""Hot inner loops of the path integrators.

Each kernel exists twice: a scalar double loop compiled by numba, and a
numpy version that loops over time and vectorizes over paths. ``BACKEND``
from :mod:`fimkit._accel` decides which one the public wrappers call; both
are importable directly so that they can be compared.

Kernels fill ``pos[:, start+1:]`` in place from ``pos[:, start]`` and return
the index of the first step that produced a non-finite value, or -1.
"""

import math

import numpy as np

from ._accel import HAS_NUMBA, njit
from .core import _gammainc_scalar


@njit
def _em_volatility_numba(pos, noise, start, sqrt_dt, expo, floor, super_diffusive):
    n_paths, n_cols = pos.shape
    bad = -1
    for p in range(n_paths):
        x = pos[p, start]
        for k in range(start, n_cols - 1):
            z = noise[p, k]
            if x == 0.0 and super_diffusive:
                x = floor if z >= 0.0 else -floor
            a = abs(x)
            if a < floor:
                a = floor
            x = x + a**expo * sqrt_dt * z
            if not math.isfinite(x):
                if bad < 0 or k < bad:
                    bad = k
                break
            pos[p, k + 1] = x
    return bad


def _em_volatility_numpy(pos, noise, start, sqrt_dt, expo, floor, super_diffusive):
    x = pos[:, start].copy()
    for k in range(start, pos.shape[1] - 1):
        z = noise[:, k]
        if super_diffusive:
            zero = x == 0.0
            if zero.any():
                x[zero] = np.where(z[zero] >= 0.0, floor, -floor)
        a = np.maximum(np.abs(x), floor)
        with np.errstate(over="ignore", invalid="ignore"):
            x = x + a**expo * sqrt_dt * z
        if not np.all(np.isfinite(x)):
            return k
        pos[:, k + 1] = x
    return -1


@njit
def _em_log_potential_numba(pos, noise, start, dt, sqrt_dt, coef, floor):
    n_paths, n_cols = pos.shape
    bad = -1
    for p in range(n_paths):
        y = pos[p, start]
        for k in range(start, n_cols - 1):
            z = noise[p, k]
            a = abs(y)
            if a < floor:
                a = floor
            if y > 0.0 or (y == 0.0 and z >= 0.0):
                r = a
            else:
                r = -a
            y = y + coef / r * dt + sqrt_dt * z
            if not math.isfinite(y):
                if bad < 0 or k < bad:
                    bad = k
                break
            pos[p, k + 1] = y
    return bad


def _em_log_potential_numpy(pos, noise, start, dt, sqrt_dt, coef, floor):
    y = pos[:, start].copy()
    for k in range(start, pos.shape[1] - 1):
        z = noise[:, k]
        a = np.maximum(np.abs(y), floor)
        r = np.where((y > 0.0) | ((y == 0.0) & (z >= 0.0)), a, -a)
        y = y + coef / r * dt + sqrt_dt * z
        if not np.all(np.isfinite(y)):
            return k
        pos[:, k + 1] = y
    return -1


# -- squared-Bessel transition ----------------------------------------------------
#
# Y' / (2 dt) ~ Gamma(shape0 + N),  N ~ Poisson(Y / (2 dt)), is the exact law of a
# squared Bessel process of dimension 2*shape0 after time dt. Randomness comes from
# per-path buffers: one Poisson uniform per step, and Marsaglia-Tsang normals and
# uniforms consumed through per-path cursors.


@njit
def _poisson_inv(mu, u):
    if mu <= 0.0:
        return 0
    if mu < 30.0:
        n = 0
        p = math.exp(-mu)
        cdf = p
        while cdf < u and p > 0.0:
            n += 1
            p *= mu / n
            cdf += p
        return n
    n = int(mu)
    p = math.exp(-mu + n * math.log(mu) - math.lgamma(n + 1.0))
    # P(N <= n) = 1 - P(n + 1, mu)
    cdf = 1.0 - _gammainc_scalar(n + 1.0, mu, math.lgamma(n + 1.0))
    if cdf >= u:
        while n > 0 and cdf - p >= u:
            cdf -= p
            p *= n / mu
            n -= 1
    else:
        while cdf < u and p > 0.0:
            n += 1
            p *= mu / n
            cdf += p
    return n


@njit
def _besq_step_numba(y, shape0, dt, u_pois, nrm, unf, inrm, iunf):
    n_paths = y.shape[0]
    out = np.empty(n_paths)
    for p in range(n_paths):
        k = _poisson_inv(y[p] / (2.0 * dt), u_pois[p])
        a = shape0 + k
        boost = a < 1.0
        if boost:
            a += 1.0
        d = a - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            if inrm[p] >= nrm.shape[1] or iunf[p] >= unf.shape[1]:
                return out, p
            x = nrm[p, inrm[p]]
            inrm[p] += 1
            v = 1.0 + c * x
            if v <= 0.0:
                continue
            v = v * v * v
            u = unf[p, iunf[p]]
            iunf[p] += 1
            if math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
                g = d * v
                break
        if boost:
            if iunf[p] >= unf.shape[1]:
                return out, p
            g *= unf[p, iunf[p]] ** (1.0 / (a - 1.0))
            iunf[p] += 1
        out[p] = 2.0 * dt * g
    return out, -1


@njit
def _bessel_keep_ratio(h, z):
    # I_h(z) / I_{-h}(z) by the power series; every term is positive for order > -1
    q = 0.25 * z * z
    tp = 1.0 / math.gamma(1.0 + h)
    tm = 1.0 / math.gamma(1.0 - h)
    sp = tp
    sm = tm
    k = 0
    while tp > 1e-17 * sp or tm > 1e-17 * sm:
        k += 1
        tp *= q / (k * (k + h))
        tm *= q / (k * (k - h))
        sp += tp
        sm += tm
    return (0.5 * z) ** (2.0 * h) * sp / sm


@njit
def _hit_probability_numba(h, a, b, dt):
    out = np.empty(a.size)
    for i in range(a.size):
        z = a[i] * b[i] / dt
        if z <= 0.0:
            out[i] = 1.0
        elif z >= 40.0:
            out[i] = 0.0
        else:
            out[i] = 1.0 - _bessel_keep_ratio(h, z)
    return out


def _hit_probability_numpy(h, a, b, dt):
    from scipy.special import ive

    z = a * b / dt
    q = np.where(z > 0.0, 0.0, 1.0)
    near = (z > 0.0) & (z < 40.0)
    if near.any():
        zn = z[near]
        q[near] = 1.0 - ive(h, zn) / ive(-h, zn)
    return q


def hit_probability(h, a, b, dt, backend=None):
    """P(a Bessel bridge of dimension 2 - 2h from ``a`` to ``b`` over ``dt`` touches 0).

    Equals 1 - I_h(z)/I_{-h}(z) with z = a b / dt; returned as 0 once z >= 40,
    where the exact value is below 1e-34.
    """
    fn = _pick(_hit_probability_numba, _hit_probability_numpy, backend)
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    return fn(float(h), a, b, float(dt))


def _poisson_inv_numpy(mu, u):
    from scipy.special import gammaincc, gammaln

    out = np.zeros(mu.shape, dtype=np.int64)
    small = (mu > 0.0) & (mu < 30.0)
    if small.any():
        m, uu = mu[small], u[small]
        n = np.zeros(m.shape, dtype=np.int64)
        p = np.exp(-m)
        cdf = p.copy()
        act = (cdf < uu) & (p > 0.0)
        while act.any():
            n[act] += 1
            p[act] *= m[act] / n[act]
            cdf[act] += p[act]
            act &= (cdf < uu) & (p > 0.0)
        out[small] = n
    big = mu >= 30.0
    if big.any():
        m, uu = mu[big], u[big]
        n = np.floor(m).astype(np.int64)
        nf = n.astype(float)
        p = np.exp(-m + nf * np.log(m) - gammaln(nf + 1.0))
        cdf = gammaincc(nf + 1.0, m)
        down = cdf >= uu
        act = down & (n > 0) & (cdf - p >= uu)
        while act.any():
            cdf[act] -= p[act]
            p[act] *= n[act] / m[act]
            n[act] -= 1
            act &= (n > 0) & (cdf - p >= uu)
        act = ~down & (p > 0.0)
        while act.any():
            n[act] += 1
            p[act] *= m[act] / n[act]
            cdf[act] += p[act]
            act &= (cdf < uu) & (p > 0.0)
        out[big] = n
    return out


def _besq_step_numpy(y, shape0, dt, u_pois, nrm, unf, inrm, iunf):
    k = _poisson_inv_numpy(y / (2.0 * dt), u_pois)
    a = shape0 + k
    boost = a < 1.0
    a = np.where(boost, a + 1.0, a)
    d = a - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    g = np.zeros(y.shape)
    rows = np.arange(y.shape[0])
    act = np.ones(y.shape, dtype=bool)
    while act.any():
        if np.any(inrm[act] >= nrm.shape[1]) or np.any(iunf[act] >= unf.shape[1]):
            return g, int(np.flatnonzero(act)[0])
        idx = rows[act]
        x = nrm[idx, inrm[idx]]
        inrm[idx] += 1
        v = 1.0 + c[idx] * x
        ok = v > 0.0
        idx, x, v = idx[ok], x[ok], v[ok] ** 3
        u = unf[idx, iunf[idx]]
        iunf[idx] += 1
        acc = np.log(u) < 0.5 * x * x + d[idx] - d[idx] * v + d[idx] * np.log(v)
        g[idx[acc]] = d[idx[acc]] * v[acc]
        act[idx[acc]] = False
    bi = rows[boost]
    if bi.size:
        if np.any(iunf[bi] >= unf.shape[1]):
            return g, int(bi[0])
        g[bi] *= unf[bi, iunf[bi]] ** (1.0 / (a[bi] - 1.0))
        iunf[bi] += 1
    return 2.0 * dt * g, -1


def besq_step(y, shape0, dt, u_pois, nrm, unf, inrm, iunf, backend=None):
    """Advance squared-Bessel states ``y`` by ``dt``; cursors ``inrm``/``iunf`` advance in place.

    Returns the new states. Raises if a path runs out of buffered randomness.
    """
    fn = _pick(_besq_step_numba, _besq_step_numpy, backend)
    out, bad = fn(y, float(shape0), float(dt), u_pois, nrm, unf, inrm, iunf)
    if bad >= 0:
        raise RuntimeError(f"random buffer exhausted on path {bad}")
    return out


def em_volatility(pos, noise, start, dt, h, floor, backend=None):
    """Euler-Maruyama for dX = |X|^(1 - 1/(2h)) dB, volatility evaluated at max(|X|, floor)."""
    expo = 1.0 - 1.0 / (2.0 * h)
    fn = _pick(_em_volatility_numba, _em_volatility_numpy, backend)
    return int(fn(pos, noise, int(start), math.sqrt(dt), expo, float(floor), h > 0.5))


def em_log_potential(pos, noise, start, dt, h, floor, backend=None):
    """Euler-Maruyama for dY = (1/2 - h)/Y dt + dB, with 1/Y evaluated at sign(Y) max(|Y|, floor)."""
    fn = _pick(_em_log_potential_numba, _em_log_potential_numpy, backend)
    return int(fn(pos, noise, int(start), float(dt), math.sqrt(dt), 0.5 - h, float(floor)))


def _pick(fast, slow, backend):
    if backend is None:
        backend = "numba" if HAS_NUMBA else "numpy"
    if backend == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba backend requested but numba is disabled or missing")
        return fast
    if backend == "numpy":
        # undecorated python source when numba compiled the fast one
        return slow
    raise ValueError(f"unknown backend {backend!r}")
