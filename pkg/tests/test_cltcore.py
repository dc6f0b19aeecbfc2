import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from wignerfluct import functionals as fn
from wignerfluct.cltcore import (
    QuadraticFormSpec,
    decoupling_check,
    decoupling_constant,
    qf_clt_experiment,
    qf_sample,
    quadratic_form_stat,
)
from wignerfluct.ensembles import gaussian, rademacher, sample_iid_vector, shifted_exponential, uniform


def test_stat_basic():
    u = np.array([1.0, -1.0, 1.0, 1.0])
    assert quadratic_form_stat(u, u, np.ones(4), True) == 0.0
    M = np.arange(16.0).reshape(4, 4)
    v = np.array([0.5, 2.0, -1.0, 0.0])
    assert quadratic_form_stat(u, v, M, False) == pytest.approx(u @ M @ v / 2)
    with pytest.raises(ValueError):
        quadratic_form_stat(u, v[:3], M, False)


def test_stat_conjugate_linear():
    rng = np.random.default_rng(0)
    u = rng.normal(size=5) + 1j * rng.normal(size=5)
    v = rng.normal(size=5) + 1j * rng.normal(size=5)
    M = rng.normal(size=(5, 5))
    assert quadratic_form_stat(u, v, M, False) == pytest.approx(np.conj(u) @ M @ v / np.sqrt(5))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(-3, 3), st.floats(-3, 3))
def test_stat_linear_in_matrix(seed, a, b):
    rng = np.random.default_rng(seed)
    n = 12
    u = rng.normal(size=n)
    A, B = rng.normal(size=(n, n)), rng.normal(size=(n, n))
    lhs = quadratic_form_stat(u, u, a * A + b * B, True)
    rhs = a * quadratic_form_stat(u, u, A, True) + b * quadratic_form_stat(u, u, B, True)
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(lhs)))


def test_operator_forms_agree():
    rng = np.random.default_rng(1)
    n = 30
    u = rng.normal(size=n)
    d = rng.normal(size=n)
    dense = quadratic_form_stat(u, u, np.diag(d), True)
    assert quadratic_form_stat(u, u, d, True) == pytest.approx(dense)
    assert quadratic_form_stat(u, u, sp.diags(d).tocsr(), True) == pytest.approx(dense)


def test_spec_quantities():
    n = 100
    P = (np.arange(n) < 50).astype(float)
    spec = QuadraticFormSpec({(0, 0): P, (1, 1): 1 - P, (0, 1): np.ones(n)}, 2)
    assert spec.sigma2(0, 0) == pytest.approx(0.5)
    assert spec.gamma(1) == pytest.approx(0.5)
    assert spec.predicted_variance(0, 0, -2.0) == pytest.approx(0.0)
    assert spec.predicted_variance(0, 0, 0.0) == pytest.approx(1.0)
    assert spec.predicted_variance(0, 1, 0.0) == pytest.approx(1.0)
    c = QuadraticFormSpec.identity(n, 1, "complex")
    assert c.predicted_variance(0, 0, -1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        QuadraticFormSpec({(0, 1): np.ones(n)}, 2)


def test_rademacher_identity_is_zero():
    spec = QuadraticFormSpec.identity(1000)
    for i in range(10):
        assert qf_sample(spec, rademacher(), 3, i)[0, 0] == 0.0


def test_gaussian_identity_variance():
    rep = qf_clt_experiment(QuadraticFormSpec.identity(2000), gaussian(), 2000, 5)
    row = rep.entries[0]
    assert row["predicted"] == pytest.approx(2.0)
    assert abs(row["variance"] - 2.0) <= 0.1 * 2.0
    assert row["ks"] <= row["ks_threshold"]


def test_zero_diagonal_rademacher():
    n = 20_000
    off = np.ones(n - 1)
    M = sp.diags([off, off], [-1, 1], format="csr")
    spec = QuadraticFormSpec({(0, 0): M}, 1)
    rep = qf_clt_experiment(spec, rademacher(), 1500, 6)
    assert rep.entries[0]["predicted"] == pytest.approx(2 * spec.sigma2(0, 0))
    assert rep.entries[0]["variance_ok"]


def test_complex_identity():
    spec = QuadraticFormSpec.identity(2000, 1, "complex")
    rep = qf_clt_experiment(spec, gaussian(), 1500, 7)
    assert rep.entries[0]["predicted"] == pytest.approx(1.0)
    assert rep.entries[0]["variance_ok"]


def test_projection_blocks_independent():
    n = 2000
    P = (np.arange(n) < n // 2).astype(float)
    spec = QuadraticFormSpec({(0, 0): P, (1, 1): 1 - P}, 2)
    rep = qf_clt_experiment(spec, uniform(), 1500, 8)
    assert rep.correlations and all(c["ok"] for c in rep.correlations)
    assert rep.passed


def test_symmetric_marginal_mean_zero():
    rep = qf_clt_experiment(QuadraticFormSpec({(0, 0): np.where(np.arange(500) % 2, 1.0, -1.0)}, 1),
                            uniform(), 1000, 9)
    row = rep.entries[0]
    assert abs(row["mean"]) <= 5 * np.sqrt(row["variance"] / 1000)


def test_decoupling_constant_values():
    assert decoupling_constant(0) == pytest.approx(1 + 3 ** 2)
    assert decoupling_constant(1) == pytest.approx((1 + 5 ** 3) / 2)


def test_decoupling_gaussian_stein():
    rep = decoupling_check(gaussian(), fn.sine(1.0), 1, 200_000, 1, method="mc")
    assert abs(rep.residual) <= 5 * rep.stderr
    exact = decoupling_check(gaussian(), fn.sine(1.0), 1, 0, 1, method="exact")
    assert abs(exact.residual) <= 1e-10


def test_decoupling_rademacher_enumeration():
    phi = fn.exponential(0.7)
    rep = decoupling_check(rademacher(), phi, 3, method="exact")
    assert rep.method == "enumeration"
    assert rep.lhs == pytest.approx((phi(1.0) - phi(-1.0)) / 2, abs=1e-15)
    d1 = (phi.derivative(1, 1.0) + phi.derivative(1, -1.0)) / 2
    d3 = (phi.derivative(3, 1.0) + phi.derivative(3, -1.0)) / 2
    assert rep.expansion == pytest.approx(d1 - 2.0 / 6.0 * d3, abs=1e-15)
    assert rep.passed and abs(rep.residual) > 0


def test_decoupling_uniform_lorentzian():
    rep = decoupling_check(uniform(), fn.lorentzian(), 3, method="exact")
    assert rep.passed
    assert rep.fitted_constant <= rep.constant


def test_decoupling_exponential_quadrature():
    rep = decoupling_check(shifted_exponential(), fn.sine(0.5), 2, method="exact")
    assert rep.passed


def test_decoupling_errors():
    with pytest.raises(ValueError):
        decoupling_check(gaussian(), fn.sine(), 4)
    low = fn.TestFunction("low", fn.sine().taylor, 2, 2)
    with pytest.raises(ValueError):
        decoupling_check(gaussian(), low, 3)


def test_iid_vector_feeds_qf():
    u = sample_iid_vector(gaussian(), 50_000, 2)
    val = quadratic_form_stat(u, u, np.ones(u.size), True)
    assert abs(val) < 8
