"""Estimators, fits and tests that turn ensembles into checkable numbers."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, special

from . import fbm, fim
from .core import DomainError, as_hurst
from .paths import Ensemble

__all__ = [
    "Ensemble",
    "PowerLawFit",
    "ConvergenceError",
    "empirical_msd",
    "fit_power_law",
    "empirical_cv_score",
    "ks_statistic",
    "ks_two_sample",
    "kl_quadrature",
    "increment_covariance",
    "covariance_stderr",
    "increment_variance",
    "tail_ratio_table",
    "divergence_ratio_table",
]


# numerator log-density below which an underflowed denominator is ignored
_NEGLIGIBLE_LOG = -200.0


class ConvergenceError(ArithmeticError):
    def __init__(self, estimate: float, error: float):
        super().__init__(f"quadrature did not converge: estimate {estimate!r}, error {error!r}")
        self.estimate = estimate
        self.error = error


class PowerLawFit(NamedTuple):
    c: float
    epsilon: float
    r_squared: float


def empirical_msd(e: Ensemble):
    """Path average of (X(t) - X(0))^2 at every grid node; returns ``(times, msd)``."""
    if len(e) < 1:
        raise DomainError("empty ensemble")
    d = e.paths - e.paths[:, :1]
    return e.grid.times.copy(), np.mean(d * d, axis=0)


def fit_power_law(times, values, skip_fraction: float = 0.0) -> PowerLawFit:
    """Least squares of ln(values) on ln(times) over the nodes with t > 0.

    ``skip_fraction`` drops that share of the positive-time nodes from the start.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    keep = t > 0
    t, y = t[keep], y[keep]
    t, y = t[int(skip_fraction * t.size):], y[int(skip_fraction * t.size):]
    if t.size < 3:
        raise DomainError("power-law fit needs at least 3 points with t > 0")
    if np.any(y <= 0):
        raise DomainError("power-law fit needs positive values")
    lt, ly = np.log(t), np.log(y)
    A = np.column_stack([np.ones_like(lt), lt])
    (a, eps), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ np.array([a, eps])
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - np.sum(resid**2) / ss_tot)
    return PowerLawFit(math.exp(a), float(eps), float(r2))


def fit_msd(e: Ensemble, skip_fraction: float = 0.1) -> PowerLawFit:
    """MSD exponent fit; the early nodes are skipped to damp small-t scheme bias."""
    return fit_power_law(*empirical_msd(e), skip_fraction=skip_fraction)


def empirical_cv_score(samples) -> float:
    w = np.asarray(samples, dtype=float)
    if w.size < 2:
        raise DomainError("need at least 2 samples")
    m1 = w.mean()
    if not m1 > 0:
        raise DomainError("CV score needs a positive mean")
    return float(1.0 - m1 * m1 / np.mean(w * w))


def ks_statistic(samples, cdf: Callable):
    """One-sample KS statistic and asymptotic Kolmogorov p-value."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 10:
        raise DomainError("KS test needs at least 10 samples")
    f = np.asarray(cdf(x), dtype=float)
    if np.any(np.diff(f) < -1e-12) or np.any((f < 0) | (f > 1)):
        raise DomainError("cdf is not monotone with values in [0, 1]")
    i = np.arange(1, n + 1)
    d = max(np.max(i / n - f), np.max(f - (i - 1) / n))
    return float(d), float(special.kolmogorov(math.sqrt(n) * d))


def ks_two_sample(a, b):
    """Two-sample KS statistic and asymptotic p-value."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size < 10 or b.size < 10:
        raise DomainError("KS test needs at least 10 samples per side")
    allv = np.concatenate([a, b])
    fa = np.searchsorted(a, allv, side="right") / a.size
    fb = np.searchsorted(b, allv, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    return d, float(special.kolmogorov(en * d))


def kl_quadrature(density_num: Callable, density_den: Callable, h_singularity=None,
                  t_num: float = 1.0, log: bool = False, tol: float = 1e-9) -> float:
    """KL divergence of the numerator law from the denominator law by quadrature.

    With ``log=True`` the callables return log-densities, which keeps the
    log-ratio finite where one density underflows; plain densities are only
    safe while neither underflows over the integration range. When ``h_singularity`` is
    given, the numerator must be the FIM law at ``(h_singularity, t_num)``; the
    integral is then taken in ``y = (2H^2/t)|x|^(1/H)``, where the numerator
    becomes the Gamma(1 - H) density and the ``|x|^(1/H - 2)`` factor disappears.
    Both densities must be symmetric in that case.
    """
    if log:
        lf, lg = density_num, density_den
    else:
        def lf(x):
            with np.errstate(divide="ignore"):
                return np.log(density_num(x))

        def lg(x):
            with np.errstate(divide="ignore"):
                return np.log(density_den(x))

    results = []
    if h_singularity is None:
        def integrand(x):
            a = lf(x)
            if a == -np.inf:
                return 0.0
            b = lg(x)
            if b == -np.inf and a < _NEGLIGIBLE_LOG:
                # denominator underflowed where the numerator has no mass left to weigh it
                return 0.0
            return math.exp(a) * (a - b)

        for lo, hi in ((-np.inf, 0.0), (0.0, np.inf)):
            results.append(integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=500))
    else:
        h = as_hurst(h_singularity)
        if not t_num > 0:
            raise DomainError("t_num must be positive")
        scale = t_num / (2.0 * h * h)
        lg1 = special.gammaln(1.0 - h)

        def ratio(y):
            # quad may probe y = 0 itself, where both log-densities are infinite
            x = (max(y, 1e-300) * scale) ** h
            return lf(x) - lg(x)

        def term(logw, y):
            # a vanishing weight also covers log-densities that underflowed to -inf
            w = math.exp(logw)
            return 0.0 if w == 0.0 else w * ratio(y)

        # weight y^-H e^-y / Gamma(1-H); the y^-H factor goes to quad's algebraic weight on [0, 1]
        results.append(integrate.quad(lambda y: term(-y - lg1, y), 0.0, 1.0,
                                      weight="alg", wvar=(-h, 0.0),
                                      epsabs=1e-13, epsrel=1e-12, limit=500))
        results.append(integrate.quad(lambda y: term(-y - lg1 - h * math.log(y), y),
                                      1.0, 800.0, epsabs=1e-13, epsrel=1e-12, limit=500))
    est = sum(r[0] for r in results)
    err = sum(r[1] for r in results)
    if not (math.isfinite(est) and err <= tol):
        raise ConvergenceError(est, err)
    return float(est)


def _interval_columns(e: Ensemble, iv):
    a, b = iv
    if not b > a:
        raise DomainError("interval must have positive length")
    return e.at(a), e.at(b)


def increment_covariance(e: Ensemble, i1, i2) -> float:
    """Sample covariance across paths of the increments over two disjoint intervals."""
    (a1, b1), (a2, b2) = i1, i2
    if max(a1, a2) < min(b1, b2):
        raise DomainError("intervals overlap")
    x0, x1 = _interval_columns(e, i1)
    y0, y1 = _interval_columns(e, i2)
    return float(np.cov(x1 - x0, y1 - y0)[0, 1])


def covariance_stderr(u, v) -> float:
    """Monte Carlo standard error of the sample covariance of ``u`` and ``v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = (u - u.mean()) * (v - v.mean())
    return float(w.std(ddof=1) / math.sqrt(w.size))


def increment_variance(e: Ensemble, t: float, delta: float):
    """Sample variance of X(t + delta) - X(t) and its Monte Carlo standard error."""
    a, b = _interval_columns(e, (t, t + delta))
    d = b - a
    d2 = (d - d.mean()) ** 2
    return float(d.var(ddof=1)), float(d2.std(ddof=1) / math.sqrt(d.size))


def tail_ratio_table(h, t: float, levels) -> list[dict]:
    """Finite-level tail ratios FBM/BM, FIM/BM and FIM/FBM (BM = standard FBM at H = 1/2).

    Ratios are carried as natural logs; ``ratio`` fields are their exponentials
    and may underflow to 0 far in the tail.
    """
    h = as_hurst(h)
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or np.any(np.diff(levels) <= 0):
        raise DomainError("levels must be increasing")
    lbm = np.atleast_1d(fbm.log_fbm_tail_probability(fbm.FbmParams(0.5), t, levels))
    lfbm = np.atleast_1d(fbm.log_fbm_tail_probability(fbm.FbmParams(h), t, levels))
    lfim = np.atleast_1d(fim.log_fim_tail_probability(h, t, levels))
    rows = []
    for i, lv in enumerate(levels):
        logs = {
            "fbm_vs_bm": float(lfbm[i] - lbm[i]),
            "fim_vs_bm": float(lfim[i] - lbm[i]),
            "fim_vs_fbm": float(lfim[i] - lfbm[i]),
        }
        rows.append({
            "level": float(lv),
            "log_ratio": logs,
            "ratio": {k: math.exp(v) for k, v in logs.items()},
        })
    return rows


def divergence_ratio_table(h, times) -> list[dict]:
    """KL-divergence ratios FBM/BM, FIM/BM and FIM/FBM at times > 1.

    FIM/BM tends to 2(1 - H) as t grows.
    """
    h = as_hurst(h)
    times = np.asarray(times, dtype=float)
    if np.any(times <= 1) or np.any(np.diff(times) <= 0):
        raise DomainError("times must be increasing and > 1")
    rows = []
    for t in times:
        d_bm = fbm.fbm_kl(0.5, t)
        d_fbm = fbm.fbm_kl(h, t)
        d_fim = fim.fim_kl(h, t)
        rows.append({
            "t": float(t),
            "ratio": {
                "fbm_vs_bm": d_fbm / d_bm,
                "fim_vs_bm": d_fim / d_bm,
                "fim_vs_fbm": d_fim / d_fbm,
            },
        })
    return rows
