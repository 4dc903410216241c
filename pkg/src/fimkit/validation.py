"""The acceptance battery: every check reports measured vs expected and its tolerance.

Checks use fixed stream ids under one seed, so a report is a pure function of
the seed. ``TOLERANCES`` is module state on purpose: tests corrupt an entry to
confirm that a failing check turns the exit status red.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize

from . import dlp, fbm, fim, output, pipeline, stats, tables
from .core import RngStream, TimeGrid

DEFAULT_SEED = 12345
HS = (0.25, 0.75)

TOLERANCES = {
    "cv_half": 1e-12,
    "cv_limit": 1e-3,
    "cv_sample": 0.01,
    "moment_rel": 0.02,
    "p_min": 0.01,
    "kl_abs": 1e-6,
    "kl_at_one": 1e-12,
    "kl_ratio_rel": 0.01,
    "mass": 1e-8,
    "gauss_density": 1e-12,
    "mode": 1e-6,
    "msd_eps": 0.05,
    "incvar_se": 3.0,
    "aging_se": 2.0,
    "fim_cov_se": 4.0,
    "fbm_cov_se": 2.0,
    "fbm_cov12_se": 3.0,
    "round_trip": 1e-12,
    "chain_rule": 1e-8,
}


@dataclass
class Check:
    criterion: int
    name: str
    measured: object
    expected: object
    tolerance: object
    rule: str
    passed: bool
    detail: dict = field(default_factory=dict)


def _abs(c, name, measured, expected, tol, **detail):
    ok = bool(abs(measured - expected) <= tol)
    return Check(c, name, float(measured), float(expected), tol, "abs_diff<=tol", ok, detail)


def _rel(c, name, measured, expected, tol, **detail):
    ok = bool(abs(measured / expected - 1.0) <= tol)
    return Check(c, name, float(measured), float(expected), tol, "rel_diff<=tol", ok, detail)


def _p(c, name, p, **detail):
    tol = TOLERANCES["p_min"]
    return Check(c, name, float(p), None, tol, "p_value>tol", bool(p > tol), detail)


def _z(c, name, value, se, bound, sign=0, **detail):
    """``sign=0``: |value| < bound*se; ``sign=+-1``: sign*value > bound*se."""
    if sign == 0:
        ok, rule = abs(value) < bound * se, "abs(value)<tol*se"
    else:
        ok, rule = sign * value > bound * se, ("value>tol*se" if sign > 0 else "value<-tol*se")
    return Check(c, name, float(value), 0.0, bound, rule, bool(ok), dict(detail, se=float(se)))


def _stream(c, k=0):
    return c * 10**7 + k * 10**6


# -- criteria -----------------------------------------------------------------------


def check_cv_scores(seed):
    hs = np.linspace(0.001, 0.999, 99)
    cv = np.array([fim.fim_cv_score(h) for h in hs])
    d = np.diff(cv)
    # straight-line extrapolation of the two outermost grid points to H = 0 and H = 1
    lo = cv[0] - hs[0] * (cv[1] - cv[0]) / (hs[1] - hs[0])
    hi = cv[-1] + (1.0 - hs[-1]) * (cv[-1] - cv[-2]) / (hs[-1] - hs[-2])
    tol = TOLERANCES["cv_limit"]
    return [
        _abs(1, "cv_fim_at_half", fim.fim_cv_score(0.5), 1.0 - 2.0 / math.pi, TOLERANCES["cv_half"]),
        Check(1, "cv_fim_strictly_increasing", float(d.min()), 0.0, None, "min_step>0", bool(d.min() > 0)),
        _abs(1, "cv_fim_limit_h0", lo, 0.0, tol, value_at_grid_end=float(cv[0])),
        _abs(1, "cv_fim_limit_h1", hi, 1.0, tol, value_at_grid_end=float(cv[-1])),
    ]


def check_exact_marginal(seed, n=10**5):
    out = []
    for i, h in enumerate((0.25, 0.5, 0.75)):
        x = fim.sample_fim_marginal(h, 1.0, RngStream(seed, _stream(2, i)), size=n)
        a = np.abs(x)
        out.append(_abs(2, f"marginal_cv_h{h}", stats.empirical_cv_score(a), fim.fim_cv_score(h),
                        TOLERANCES["cv_sample"]))
        out.append(_rel(2, f"marginal_moment_h{h}", np.mean(a ** (1.0 / h)),
                        (1.0 - h) / (2.0 * h * h), TOLERANCES["moment_rel"]))
        _, p = stats.ks_statistic(x, lambda v: fim.fim_cdf(h, 1.0, v))
        out.append(_p(2, f"marginal_ks_h{h}", p))
    return out


def _kl_numeric(model, h, t):
    if model == "fbm":
        return stats.kl_quadrature(lambda x: fbm.fbm_density(h, t, x, log=True),
                                   lambda x: fbm.fbm_density(h, 1.0, x, log=True), log=True)
    return stats.kl_quadrature(lambda x: fim.fim_density(h, t, x, log=True),
                               lambda x: fim.fim_density(h, 1.0, x, log=True),
                               h_singularity=h, t_num=t, log=True)


def check_kl(seed):
    out = []
    tol = TOLERANCES["kl_abs"]
    for h in (0.25, 0.5, 0.75):
        for t in (0.5, 2.0, 8.0):
            out.append(_abs(3, f"kl_fbm_h{h}_t{t:g}", _kl_numeric("fbm", h, t), fbm.fbm_kl(h, t), tol))
            out.append(_abs(3, f"kl_fim_h{h}_t{t:g}", _kl_numeric("fim", h, t), fim.fim_kl(h, t), tol))
        out.append(_abs(3, f"kl_fbm_h{h}_at_one", fbm.fbm_kl(h, 1.0), 0.0, TOLERANCES["kl_at_one"]))
        out.append(_abs(3, f"kl_fim_h{h}_at_one", fim.fim_kl(h, 1.0), 0.0, TOLERANCES["kl_at_one"]))
    return out


def check_kl_constant(seed):
    out = []
    for h in HS:
        r = stats.divergence_ratio_table(h, [1e6])[0]["ratio"]["fim_vs_bm"]
        out.append(_rel(4, f"kl_ratio_fim_bm_h{h}", r, 2.0 * (1.0 - h), TOLERANCES["kl_ratio_rel"]))
    return out


def density_mass(h, t):
    """Total mass of the FIM density; the |x|^(1/H - 2) factor near 0 goes to quad's weight."""
    a = 1.0 / h - 2.0

    def smooth(x):
        return math.exp(fim.fim_density(h, t, max(x, 1e-300), log=True) - a * math.log(max(x, 1e-300)))

    near, e1 = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(a, 0.0), epsabs=1e-14, epsrel=1e-13)
    far, e2 = integrate.quad(lambda x: fim.fim_density(h, t, x), 1.0, np.inf, epsabs=1e-14, epsrel=1e-13)
    return 2.0 * (near + far)


def check_density(seed):
    out = []
    for h in HS:
        for t in (1.0, 2.0):
            out.append(_abs(5, f"density_mass_h{h}_t{t:g}", density_mass(h, t), 1.0, TOLERANCES["mass"]))
    x = np.linspace(-5.0, 5.0, 50)
    for t in (1.0, 2.0):
        gauss = np.exp(-x * x / (2 * t)) / math.sqrt(2 * math.pi * t)
        err = float(np.max(np.abs(fim.fim_density(0.5, t, x) - gauss)))
        out.append(_abs(5, f"density_gaussian_t{t:g}", err, 0.0, TOLERANCES["gauss_density"]))
    for h in (0.1, 0.25, 0.4):
        for t in (1.0, 2.0):
            m = fim.fim_mode_locations(h, t).points[1]
            res = optimize.minimize_scalar(lambda v: -fim.fim_density(h, t, v, log=True),
                                           bounds=(1e-6, 4.0 * m), method="bounded",
                                           options={"xatol": 1e-12})
            out.append(_abs(5, f"mode_h{h}_t{t:g}", res.x, m, TOLERANCES["mode"]))
    return out


def _exact_reference(seed, c, h, n):
    return fim.sample_fim_marginal(h, 1.0, RngStream(seed, _stream(c, 9)), size=n)


def check_em_fidelity(seed, paths=10**4, steps=1024):
    out = []
    grid = TimeGrid.uniform(1.0, steps)
    for i, h in enumerate(HS):
        e = fim.simulate_fim_em_ensemble(fim.FimParams(h), fim.EmScheme(1.0 / steps), grid, paths,
                                         seed, first_stream=_stream(6, i))
        ref = _exact_reference(seed, 6, h, paths)
        _, p = stats.ks_two_sample(e.at(1.0), ref)
        out.append(_p(6, f"em_terminal_ks_h{h}", p,
                      var_em=float(e.at(1.0).var()), var_exact=fim.fim_variance_at_one(h)))
        fit = stats.fit_msd(e)
        out.append(_abs(6, f"em_msd_exponent_h{h}", fit.epsilon, 2 * h, TOLERANCES["msd_eps"],
                        r_squared=fit.r_squared))
        v, se = stats.increment_variance(e, 0.5, 0.25)
        expect = fim.fim_increment_variance(h, 0.5, 0.25)
        out.append(_z(6, f"em_increment_variance_h{h}", v - expect, se, TOLERANCES["incvar_se"],
                      variance=v, expected_variance=expect))
    return out


def _exact_ensemble(seed, c, k, h, paths, steps=4):
    return fim.simulate_fim_exact_ensemble(fim.FimParams(h), TimeGrid.uniform(1.0, steps), paths,
                                           seed, first_stream=_stream(c, k))


def check_aging(seed, paths=10**4):
    out = []
    starts = (0.25, 0.5, 0.75)
    for i, h in enumerate(HS):
        e = _exact_ensemble(seed, 7, i, h, paths)
        vs = [stats.increment_variance(e, s, 0.25) for s in starts]
        sign = -1 if h < 0.5 else 1
        for (s0, (v0, se0)), (s1, (v1, se1)) in zip(zip(starts, vs), zip(starts[1:], vs[1:])):
            out.append(_z(7, f"aging_h{h}_{s0:g}_to_{s1:g}", v1 - v0, math.hypot(se0, se1),
                          TOLERANCES["aging_se"], sign=sign, var_start=v0, var_next=v1))
    return out


def check_correlations(seed, paths=10**4):
    out = []
    i1, i2 = (0.25, 0.5), (0.5, 0.75)
    for i, h in enumerate(HS):
        e = _exact_ensemble(seed, 8, i, h, paths)
        u, v = e.at(0.5) - e.at(0.25), e.at(0.75) - e.at(0.5)
        out.append(_z(8, f"fim_increment_cov_h{h}", stats.increment_covariance(e, i1, i2),
                      stats.covariance_stderr(u, v), TOLERANCES["fim_cov_se"]))
        b = fbm.simulate_fbm_ensemble(fbm.FbmParams(h), TimeGrid.uniform(1.0, 4), paths, seed,
                                      first_stream=_stream(8, 5 + i))
        u, v = b.at(0.5) - b.at(0.25), b.at(0.75) - b.at(0.5)
        out.append(_z(8, f"fbm_increment_cov_h{h}", stats.increment_covariance(b, i1, i2),
                      stats.covariance_stderr(u, v), TOLERANCES["fbm_cov_se"],
                      sign=-1 if h < 0.5 else 1))
    return out


def check_fbm_generators(seed, paths=10**4, steps=256):
    grid = TimeGrid.uniform(2.0, steps)
    p = fbm.FbmParams(0.25)
    ch = fbm.simulate_fbm_ensemble(p, grid, paths, seed, method="cholesky", first_stream=_stream(9, 0))
    ci = fbm.simulate_fbm_ensemble(p, grid, paths, seed, method="circulant", first_stream=_stream(9, 1))
    _, pv = stats.ks_two_sample(ch.at(2.0), ci.at(2.0))
    b = fbm.simulate_fbm_ensemble(fbm.FbmParams(0.75), grid, paths, seed, first_stream=_stream(9, 2))
    x1, x2 = b.at(1.0), b.at(2.0)
    cov = float(np.cov(x1, x2)[0, 1])
    expect = fbm.fbm_covariance(0.75, 1.0, 2.0)
    return [
        _p(9, "fbm_cholesky_vs_circulant_ks", pv),
        _z(9, "fbm_cov_1_2_h0.75", cov - expect, stats.covariance_stderr(x1, x2),
           TOLERANCES["fbm_cov12_se"], covariance=cov, expected_covariance=expect),
    ]


def check_dlp(seed, paths=10**4, steps=1024):
    out = []
    x = np.concatenate([-np.logspace(-6, 2, 100), [0.0], np.logspace(-6, 2, 100)])
    for h in (0.25, 0.5, 0.75):
        rt = dlp.phi_inverse(h, dlp.phi(h, x))
        err = float(np.max(np.abs(rt - x) / np.maximum(1.0, np.abs(x))))
        out.append(_abs(10, f"phi_round_trip_h{h}", err, 0.0, TOLERANCES["round_trip"]))
    xs = x[x != 0]
    for h in HS:
        lhs = 0.5 * dlp.phi_second(h, xs) * fim.volatility(h, xs) ** 2
        rhs = (0.5 - h) / dlp.phi(h, xs)
        err = float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))
        out.append(_abs(10, f"chain_rule_h{h}", err, 0.0, TOLERANCES["chain_rule"]))
    grid = TimeGrid.uniform(1.0, steps)
    for i, h in enumerate(HS):
        e = dlp.simulate_dlp_ensemble(dlp.DlpParams(h), fim.EmScheme(1.0 / steps), grid, paths, seed,
                                      first_stream=_stream(10, i))
        _, p = stats.ks_two_sample(e.at(1.0), _exact_reference(seed, 10, h, paths))
        out.append(_p(10, f"dlp_terminal_ks_h{h}", p, var_dlp=float(e.at(1.0).var()),
                      var_exact=fim.fim_variance_at_one(h)))
    return out


def check_tails(seed):
    out = []
    for h in HS:
        cmp = tables.tail_comparison(h)
        want = "decreasing" if h < 0.5 else "increasing"
        for k in ("fbm_vs_bm", "fim_vs_bm", "fim_vs_fbm"):
            got = tables._direction([r["log_ratio"][k] for r in cmp["rows"]])
            out.append(Check(11, f"tail_{k}_h{h}", got, want, None, "direction==expected", got == want,
                             {"t": cmp["t"], "log_ratios": [r["log_ratio"][k] for r in cmp["rows"]]}))
    return out


DETERMINISM_CONFIG = pipeline.RunConfig(model="fim", h=0.75, t_max=1.0, steps=1024, paths=100, seed=7)


def check_determinism(seed):
    out = []
    for fmt in ("csv", "json"):
        a = pipeline.render(DETERMINISM_CONFIG, fmt)
        b = pipeline.render(DETERMINISM_CONFIG, fmt)
        out.append(Check(12, f"simulate_bytes_identical_{fmt}", len(a[0]), len(b[0]), None,
                         "bytes_equal", a == b))
    return out


CRITERIA = {
    1: check_cv_scores,
    2: check_exact_marginal,
    3: check_kl,
    4: check_kl_constant,
    5: check_density,
    6: check_em_fidelity,
    7: check_aging,
    8: check_correlations,
    9: check_fbm_generators,
    10: check_dlp,
    11: check_tails,
    12: check_determinism,
}


def run_checks(seed: int = DEFAULT_SEED, criteria=None) -> list[Check]:
    out = []
    for c in sorted(criteria or CRITERIA):
        out.extend(CRITERIA[c](seed))
    return out


def report(checks, seed: int) -> dict:
    by = {}
    for ch in checks:
        by.setdefault(ch.criterion, []).append(ch.passed)
    return {
        "schema_version": output.SCHEMA_VERSION,
        "seed": seed,
        "passed": all(ch.passed for ch in checks),
        "criteria": {str(c): all(v) for c, v in sorted(by.items())},
        "checks": [asdict(ch) for ch in checks],
    }
