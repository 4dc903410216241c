"""Closed-form quantities on grids and the model comparison report."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import dlp, fbm, fim, stats
from .core import DomainError, TimeGrid, as_hurst
from .paths import Ensemble

#: names accepted by :func:`analytic_table`
QUANTITIES = (
    "density_fbm", "density_fim", "cdf_fim",
    "cv_fbm", "cv_fim",
    "kl_fbm", "kl_fim",
    "incvar_fbm", "incvar_fim",
    "cov_fbm", "cov_fim", "velcov_fbm",
    "kernel_fbm", "volatility_fim", "potential_dlp",
)


@dataclass(frozen=True)
class AnalyticGrid:
    """Grid settings shared by every quantity.

    Positions run over ``linspace(-x_max, x_max, points)``; times over the
    ``t_points`` equally spaced values ending at ``t_max``; Hurst exponents
    over ``h_points`` equally spaced values strictly inside (0, 1).
    """

    h: float
    t_max: float = 1.0
    x_max: float = 4.0
    points: int = 201
    t_points: int = 1
    h_points: int = 99
    delta: float = 0.25

    def __post_init__(self):
        as_hurst(self.h)
        if not (self.t_max > 0 and self.x_max > 0 and self.delta > 0):
            raise DomainError("t_max, x_max and delta must be positive")
        if self.points < 2 or self.t_points < 1 or self.h_points < 2:
            raise DomainError("need points >= 2, t_points >= 1, h_points >= 2")

    def xs(self):
        return np.linspace(-self.x_max, self.x_max, self.points)

    def ts(self):
        return self.t_max * np.arange(1, self.t_points + 1) / self.t_points

    def hs(self):
        return np.arange(1, self.h_points + 1) / (self.h_points + 1)


def _heat(g, fn):
    xs = g.xs()
    rows = []
    for t in g.ts():
        rows.extend(zip(np.full(xs.size, t), xs, fn(t, xs)))
    return ["t", "x"], rows


def _pairs(g, fn, skip_diagonal=False):
    ts = g.ts()
    return [(a, b, fn(a, b)) for a in ts for b in ts if not (skip_diagonal and a == b)]


def analytic_table(name: str, g: AnalyticGrid):
    """Header and rows of one closed-form quantity."""
    h = g.h
    if name == "density_fbm":
        cols, rows = _heat(g, lambda t, x: fbm.fbm_density(h, t, x))
    elif name == "density_fim":
        cols, rows = _heat(g, lambda t, x: fim.fim_density(h, t, x))
    elif name == "cdf_fim":
        cols, rows = _heat(g, lambda t, x: fim.fim_cdf(h, t, x))
    elif name == "cv_fbm":
        cols, rows = ["h"], [(v, fbm.fbm_cv_score()) for v in g.hs()]
    elif name == "cv_fim":
        cols, rows = ["h"], [(v, fim.fim_cv_score(v)) for v in g.hs()]
    elif name == "kl_fbm":
        cols, rows = ["t"], [(t, fbm.fbm_kl(h, t)) for t in g.ts()]
    elif name == "kl_fim":
        cols, rows = ["t"], [(t, fim.fim_kl(h, t)) for t in g.ts()]
    elif name == "incvar_fbm":
        cols = ["t", "delta"]
        rows = [(t, g.delta, fbm.fbm_increment_variance(h, t, g.delta)) for t in np.r_[0.0, g.ts()]]
    elif name == "incvar_fim":
        cols = ["t", "delta"]
        rows = [(t, g.delta, fim.fim_increment_variance(h, t, g.delta)) for t in np.r_[0.0, g.ts()]]
    elif name == "cov_fbm":
        cols, rows = ["t1", "t2"], _pairs(g, lambda a, b: fbm.fbm_covariance(h, a, b))
    elif name == "cov_fim":
        cols, rows = ["t1", "t2"], _pairs(g, lambda a, b: fim.fim_position_covariance(h, a, b))
    elif name == "velcov_fbm":
        cols = ["t1", "t2"]
        rows = _pairs(g, lambda a, b: fbm.fbm_velocity_covariance(h, a, b), skip_diagonal=True)
    elif name == "kernel_fbm":
        t = g.t_max
        us = np.linspace(-t, t, g.points, endpoint=False)
        cols, rows = ["t", "u"], [(t, u, fbm.fbm_kernel(h, t, u)) for u in us]
    elif name == "volatility_fim":
        xs = g.xs()
        cols, rows = ["x"], list(zip(xs, fim.volatility(h, xs)))
    elif name == "potential_dlp":
        xs = g.xs()
        xs = xs[xs != 0]
        cols, rows = ["x"], list(zip(xs, dlp.potential(h, xs)))
    else:
        raise KeyError(name)
    return cols + [name], rows


# -- comparison report ----------------------------------------------------------------


def _direction(values, tol=1e-12):
    d = np.diff(np.asarray(values, dtype=float))
    if np.all(np.abs(d) <= tol):
        return "constant"
    if np.all(d > 0):
        return "increasing"
    if np.all(d < 0):
        return "decreasing"
    return "mixed"


_TAIL_VERDICT = {"decreasing": "lighter", "increasing": "heavier", "constant": "equal", "mixed": "mixed"}
_PAIRS = ("fbm_vs_bm", "fim_vs_bm", "fim_vs_fbm")


def tail_comparison(h, t=1.5, levels=(2.0, 4.0, 8.0, 16.0)) -> dict:
    """Finite-level tail ratios; a ratio falling with the level means the first law's tail is lighter.

    With unit BM variance, FBM and BM coincide at t = 1. Over levels 2..16 the
    three ratios are monotone for 1 < t < ~1.87 at H = 0.25 and H = 0.75; beyond
    that the H = 0.75 FIM/FBM ratio first dips before rising.
    """
    rows = stats.tail_ratio_table(h, t, levels)
    verdicts = {k: _TAIL_VERDICT[_direction([r["log_ratio"][k] for r in rows])] for k in _PAIRS}
    return {"t": float(t), "rows": rows, "verdicts": verdicts}


def divergence_limits(h) -> dict:
    """Large-t limits of the three KL ratios, from the leading terms of the closed forms."""
    h = as_hurst(h)
    if h == 0.5:
        return {"fbm_vs_bm": 1.0, "fim_vs_bm": 1.0, "fim_vs_fbm": 1.0}
    return {
        "fbm_vs_bm": 0.0 if h < 0.5 else math.inf,
        "fim_vs_bm": 2.0 * (1.0 - h),
        "fim_vs_fbm": math.inf if h < 0.5 else 0.0,
    }


def divergence_comparison(h, times=(1e1, 1e2, 1e3, 1e4, 1e5, 1e6)) -> dict:
    rows = stats.divergence_ratio_table(h, times)
    return {
        "rows": rows,
        "fim_vs_bm_constant": 2.0 * (1.0 - as_hurst(h)),
        "directions": {k: _direction([r["ratio"][k] for r in rows]) for k in _PAIRS},
        "limits": divergence_limits(h),
    }


#: two-sided 1% normal quantile used by the property battery
Z_CRIT = float(special.ndtri(0.995))
ALPHA = 0.01


def property_battery(e: Ensemble, variance_at_one: float) -> dict:
    """Empirical Gaussianity, increment stationarity and increment correlation.

    Needs a grid on ``[0, T]`` with nodes at T/4, T/2, 3T/4. Gaussianity is a KS
    test of X(T) against the centred normal of the model's variance;
    stationarity compares the increments over the first and the last quarter;
    correlation is the covariance of the two middle quarters.
    """
    T = float(e.grid.times[-1])
    q = [0.0, T / 4, T / 2, 3 * T / 4, T]
    sd = math.sqrt(variance_at_one * T ** (2.0 * e.h))
    _, p_gauss = stats.ks_statistic(e.at(T), lambda x: special.ndtr(x / sd))
    first = e.at(q[1]) - e.at(q[0])
    last = e.at(q[4]) - e.at(q[3])
    _, p_stat = stats.ks_two_sample(first, last)
    u = e.at(q[2]) - e.at(q[1])
    v = e.at(q[3]) - e.at(q[2])
    cov = stats.increment_covariance(e, (q[1], q[2]), (q[2], q[3]))
    se = stats.covariance_stderr(u, v)
    z = cov / se if se > 0 else 0.0
    return {
        "gaussian": {"value": bool(p_gauss > ALPHA), "p_value": p_gauss},
        "stationary_increments": {"value": bool(p_stat > ALPHA), "p_value": p_stat},
        "uncorrelated_increments": {"value": bool(abs(z) < Z_CRIT), "covariance": cov, "z": z},
    }


def property_matrix(h, paths: int, seed: int, t_max: float = 1.0, steps: int = 4) -> dict:
    """Property battery for BM, FBM and FIM; FIM paths come from the exact sampler."""
    h = as_hurst(h)
    if steps % 4:
        raise DomainError("property battery needs steps divisible by 4")
    grid = TimeGrid.uniform(t_max, steps)
    bm = fbm.simulate_fbm_ensemble(fbm.FbmParams(0.5), grid, paths, seed, first_stream=0)
    fb = fbm.simulate_fbm_ensemble(fbm.FbmParams(h), grid, paths, seed, first_stream=paths)
    fi = fim.simulate_fim_exact_ensemble(fim.FimParams(h), grid, paths, seed, first_stream=2 * paths)
    return {
        "paths": paths,
        "seed": seed,
        "alpha": ALPHA,
        "models": {
            "bm": property_battery(bm, 1.0),
            "fbm": property_battery(fb, 1.0),
            "fim": property_battery(fi, fim.fim_variance_at_one(h)),
        },
    }


def compare_report(h, paths: int, seed: int, tail_t: float = 1.5, steps: int = 4) -> dict:
    return {
        "h": as_hurst(h),
        "tails": tail_comparison(h, tail_t),
        "divergences": divergence_comparison(h),
        "properties": property_matrix(h, paths, seed, steps=steps),
    }
