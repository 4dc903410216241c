import math

import numpy as np
import pytest
from scipy import integrate, stats as sps

from fimkit import fbm
from fimkit.core import DomainError, RngStream, TimeGrid
from fimkit.stats import ks_two_sample


def test_covariance_diagonal_and_symmetry():
    p = fbm.FbmParams(0.3)
    assert fbm.fbm_covariance(p, 2.0, 2.0) == pytest.approx(2.0**0.6)
    assert fbm.fbm_covariance(p, 1.0, 3.0) == fbm.fbm_covariance(p, 3.0, 1.0)
    assert fbm.fbm_covariance(0.5, 1.0, 3.0) == pytest.approx(1.0)


def test_covariance_scales_with_b():
    assert fbm.fbm_covariance(fbm.FbmParams(0.7, 2.5), 1.0, 2.0) == pytest.approx(
        2.5 * fbm.fbm_covariance(0.7, 1.0, 2.0))


def test_params_reject():
    with pytest.raises(DomainError):
        fbm.FbmParams(0.5, 0.0)
    with pytest.raises(DomainError):
        fbm.fbm_covariance(0.5, -1.0, 1.0)


def test_kernel_at_half_is_indicator():
    u = np.array([-3.0, -0.1, 0.0, 0.4, 0.99])
    assert np.array_equal(fbm.fbm_kernel(0.5, 1.0, u), [0, 0, 1, 1, 1])
    with pytest.raises(DomainError):
        fbm.fbm_kernel(0.3, 1.0, 1.0)


@pytest.mark.parametrize("h", [0.3, 0.7])
def test_kernel_square_integral_is_selfsimilar(h):
    def sq(t):
        f = lambda u: fbm.fbm_kernel(h, t, u) ** 2
        return (integrate.quad(f, -np.inf, -1.0, limit=200)[0]
                + integrate.quad(f, -1.0, 0.0, limit=200)[0]
                + integrate.quad(f, 0.0, t, limit=200)[0])

    assert sq(2.0) / sq(1.0) == pytest.approx(2.0 ** (2 * h), rel=1e-6)


def test_velocity_covariance_is_mixed_derivative():
    h, t1, t2, e = 0.7, 1.0, 2.5, 1e-4
    c = lambda a, b: fbm.fbm_covariance(h, a, b)
    fd = (c(t1 + e, t2 + e) - c(t1 + e, t2 - e) - c(t1 - e, t2 + e) + c(t1 - e, t2 - e)) / (4 * e * e)
    assert fbm.fbm_velocity_covariance(h, t1, t2) == pytest.approx(fd, rel=1e-5)
    assert fbm.fbm_velocity_covariance(0.25, 1.0, 2.0) < 0 < fbm.fbm_velocity_covariance(0.75, 1.0, 2.0)
    with pytest.raises(DomainError):
        fbm.fbm_velocity_covariance(h, 1.0, 1.0)


def test_density_and_tail_against_scipy():
    p = fbm.FbmParams(0.35)
    sd = 3.0**0.35
    x = np.linspace(-5, 5, 11)
    assert np.allclose(fbm.fbm_density(p, 3.0, x), sps.norm.pdf(x, scale=sd), rtol=1e-13)
    assert np.allclose(fbm.fbm_density(p, 3.0, x, log=True), sps.norm.logpdf(x, scale=sd), rtol=1e-13)
    lv = np.array([0.5, 2.0, 9.0])
    assert np.allclose(fbm.fbm_tail_probability(p, 3.0, lv), 2 * sps.norm.sf(lv, scale=sd), rtol=1e-12)
    # log form stays finite where the probability underflows
    assert math.isfinite(fbm.log_fbm_tail_probability(p, 1.0, 60.0))


@pytest.mark.parametrize("h,t", [(0.25, 0.5), (0.75, 2.0), (0.5, 8.0)])
def test_kl_against_numerical_oracle(h, t):
    f = sps.norm(scale=t**h)
    g = sps.norm(scale=1.0)
    kl = integrate.quad(lambda x: f.pdf(x) * (f.logpdf(x) - g.logpdf(x)), -np.inf, np.inf)[0]
    assert fbm.fbm_kl(h, t) == pytest.approx(kl, abs=1e-9)
    assert fbm.fbm_kl(h, 1.0) == 0.0


def test_circulant_eigenvalues_nonnegative():
    for h in (0.05, 0.25, 0.5, 0.75, 0.95):
        assert fbm.circulant_eigenvalues(h, 512).min() >= 0.0


def test_embedding_error(monkeypatch):
    # lag-one autocovariance above the variance cannot come from a stationary sequence
    monkeypatch.setattr(fbm, "fgn_autocovariance", lambda h, n, v=1.0, dt=1.0: np.r_[1.0, 2.0, np.zeros(n - 2)])
    with pytest.raises(fbm.EmbeddingError):
        fbm.circulant_eigenvalues(0.5, 8)


def test_not_positive_definite_reports_pivot():
    cov = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 2.0], [0.0, 2.0, 1.0]])
    with pytest.raises(fbm.NotPositiveDefinite) as exc:
        fbm._cholesky_factor(cov)
    assert exc.value.pivot == 2


def test_cholesky_cap_and_grid_checks():
    with pytest.raises(DomainError):
        fbm.simulate_fbm_cholesky(0.5, TimeGrid.uniform(1.0, fbm.CHOLESKY_CAP), RngStream(0))
    with pytest.raises(DomainError):
        fbm.simulate_fbm_circulant(0.5, TimeGrid(np.array([0.0, 0.1, 0.3])), RngStream(0))


def test_cholesky_handles_nonuniform_grid():
    g = TimeGrid(np.array([0.0, 0.1, 0.5, 2.0]))
    tr = fbm.simulate_fbm_cholesky(fbm.FbmParams(0.3), g, RngStream(1))
    assert tr.positions[0] == 0.0 and tr.positions.shape == (4,)


@pytest.mark.parametrize("method", ["circulant", "cholesky"])
def test_single_path_equals_ensemble_row(method):
    p, g = fbm.FbmParams(0.3), TimeGrid.uniform(1.0, 32)
    e = fbm.simulate_fbm_ensemble(p, g, 5, seed=11, method=method)
    single = {"circulant": fbm.simulate_fbm_circulant, "cholesky": fbm.simulate_fbm_cholesky}[method]
    for i in range(5):
        assert np.array_equal(single(p, g, RngStream(11, i)).positions, e.paths[i])


@pytest.mark.parametrize("method", ["circulant", "cholesky"])
def test_sample_covariance_matches(method):
    h = 0.3
    g = TimeGrid.uniform(2.0, 8)
    e = fbm.simulate_fbm_ensemble(fbm.FbmParams(h), g, 20_000, seed=3, method=method)
    emp = np.cov(e.paths[:, 1:].T)
    t = g.times[1:]
    want = fbm.fbm_covariance(h, t[:, None], t[None, :])
    # loose bound: a few standard errors at 2e4 paths
    assert np.max(np.abs(emp - want)) < 0.06


def test_generators_agree_in_law():
    g = TimeGrid.uniform(1.0, 64)
    p = fbm.FbmParams(0.7)
    a = fbm.simulate_fbm_ensemble(p, g, 5000, seed=5, method="circulant")
    b = fbm.simulate_fbm_ensemble(p, g, 5000, seed=5, method="cholesky", first_stream=5000)
    assert ks_two_sample(a.at(0.5), b.at(0.5))[1] > 0.01
