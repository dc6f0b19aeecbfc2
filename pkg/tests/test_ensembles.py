import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wignerfluct.ensembles import (
    ContractError,
    EnsembleSpec,
    SeedDerivation,
    cumulants,
    derive_seed,
    gaussian,
    goe,
    gue,
    marginal_from_dict,
    rademacher,
    sample_iid_vector,
    sample_wigner,
    shifted_exponential,
    three_point,
    uniform,
)

MARGINALS = [gaussian(1.0), rademacher(1.0), uniform(1.0), shifted_exponential(1.0), three_point(2.0, 1.0),
             gaussian(2.0), uniform(0.5)]


def test_cumulant_examples():
    assert cumulants(gaussian()) == pytest.approx((1.0, 0.0, 0.0))
    assert cumulants(rademacher()) == pytest.approx((1.0, 0.0, -2.0))
    assert cumulants(uniform()) == pytest.approx((1.0, 0.0, -1.2))
    assert cumulants(shifted_exponential()) == pytest.approx((1.0, 2.0, 6.0))
    assert three_point(2.0).cumulant(4) == pytest.approx(2.0)


@pytest.mark.parametrize("d", MARGINALS, ids=lambda d: f"{d.name}-{d.variance:g}")
def test_marginal_moments_match_samples(d):
    rng = np.random.default_rng(7)
    x = d.sample(rng, 1_000_000)
    assert d.moment(1) == 0.0
    se1 = np.std(x) / np.sqrt(x.size)
    assert abs(x.mean()) <= 5 * se1
    x4 = x ** 4
    assert abs(x4.mean() - d.moment(4)) <= 5 * x4.std() / np.sqrt(x.size)
    assert d.cumulant(4) == pytest.approx(d.moment(4) - 3 * d.variance ** 2)
    assert d.cumulant(2) == pytest.approx(d.variance)


def test_marginal_parsing():
    assert marginal_from_dict("rademacher").name == "rademacher"
    d = marginal_from_dict({"name": "gaussian", "variance": 2.0})
    assert d.variance == pytest.approx(2.0)
    assert marginal_from_dict(d.to_dict()).variance == pytest.approx(2.0)
    with pytest.raises((KeyError, ValueError)):
        marginal_from_dict("cauchy")


def test_three_point_floor():
    with pytest.raises(ValueError):
        three_point(-2.5)


def test_spec_kappa4_conventions():
    assert goe().kappa4 == pytest.approx(0.0)
    assert gue().kappa4 == pytest.approx(0.0)
    real_rad = EnsembleSpec("real_symmetric", rademacher(), gaussian(2.0))
    assert real_rad.kappa4 == pytest.approx(-2.0)
    herm_rad = EnsembleSpec("hermitian", rademacher(), gaussian(1.0))
    # E|W12|^4 = (m4 + sigma^4)/2 = 1, minus 2 sigma^4
    assert herm_rad.kappa4 == pytest.approx(-1.0)
    assert goe().diag_variance == pytest.approx(2.0)


def test_spec_round_trip():
    for spec in (goe(1.3), gue(), EnsembleSpec("real_symmetric", three_point(1.0, 2.0), uniform(1.0))):
        back = EnsembleSpec.from_dict(spec.to_dict())
        assert back.to_dict() == spec.to_dict()
    assert EnsembleSpec.from_dict("gue").hermitian
    s = EnsembleSpec.from_dict({"preset": "goe", "offdiag": "rademacher"})
    assert s.offdiag.name == "rademacher" and s.diag.variance == pytest.approx(2.0)


def test_sample_small_goe_symmetric():
    X = sample_wigner(goe(), 2, 5)
    assert X.matrix.shape == (2, 2)
    assert np.array_equal(X.matrix, X.matrix.T)


def test_sample_rademacher_support():
    spec = EnsembleSpec("real_symmetric", rademacher(), gaussian(1.0))
    X = sample_wigner(spec, 1000, 3)
    off = X.matrix[~np.eye(1000, dtype=bool)]
    assert np.allclose(np.abs(off), 1 / np.sqrt(1000), rtol=0, atol=1e-15)


def test_sample_hermitian():
    X = sample_wigner(gue(), 500, 1)
    assert np.array_equal(X.matrix, X.matrix.conj().T)
    assert np.all(np.diag(X.matrix).imag == 0)


def test_spectral_radius_sanity():
    hits = [np.max(np.abs(sample_wigner(goe(), 500, SeedDerivation(0, i, "radius")).eigvalsh())) <= 3.0
            for i in range(20)]
    assert all(hits)


def test_seed_determinism():
    a = sample_wigner(gue(), 50, SeedDerivation(9, 4, "x"))
    b = sample_wigner(gue(), 50, SeedDerivation(9, 4, "x"))
    c = sample_wigner(gue(), 50, SeedDerivation(9, 5, "x"))
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, c.matrix)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(0, 10 ** 6), st.text(max_size=8))
def test_derive_seed_stable(m, i, label):
    s = derive_seed(m, i, label)
    assert s == derive_seed(m, i, label)
    assert 0 <= s < 2 ** 64


def test_eigh_cache():
    X = sample_wigner(goe(), 30, 0)
    vals, vecs = X.eigh()
    assert X.eigh()[0] is vals
    assert np.allclose(vecs @ np.diag(vals) @ vecs.T, X.matrix, atol=1e-12)


def test_iid_vector_examples():
    u = sample_iid_vector(gaussian(), 1_000_000, 1)
    se = np.std(u ** 2) / np.sqrt(u.size)
    assert abs(np.mean(u ** 2) - 1) <= 5 * se
    r = sample_iid_vector(rademacher(), 4, 2)
    assert set(np.abs(r)) == {1.0}
    c = sample_iid_vector(gaussian(), 100_000, 3, "complex")
    a2 = np.abs(c) ** 2
    assert abs(a2.mean() - 1) <= 5 * a2.std() / np.sqrt(a2.size)
    assert abs(np.var(c.real) - np.var(c.imag)) < 0.02


def test_iid_vector_contract():
    with pytest.raises(ContractError):
        sample_iid_vector(gaussian(2.0), 10, 0)
    with pytest.raises(ContractError):
        sample_wigner(goe(), 0, 0)
