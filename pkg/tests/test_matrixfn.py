import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wignerfluct import functionals as fn
from wignerfluct.ensembles import SeedDerivation, goe, gue, sample_wigner
from wignerfluct.matrixfn import (
    AlmostAnalyticExtension,
    HSGrid,
    NearSingularError,
    ResolventRequest,
    apply_function_entries,
    dbar_bound_ratio,
    hs_reconstruct_entries,
    hs_scalar,
    resolvent_block,
    resolvent_block_spectral,
    resolvent_derivative_check,
    resolvent_entries,
    schur_blocks,
    schur_field,
    spectrum_within,
)
from wignerfluct.semicircle import stieltjes_g


def _X(n, seed=0, spec=None):
    return sample_wigner(spec or goe(), n, SeedDerivation(seed, 0, "matrixfn-test"))


def test_apply_identity_and_constant():
    X = _X(40)
    assert np.max(np.abs(apply_function_entries(X, fn.monomial(1), 4, "spectral") - X.matrix[:4, :4])) <= 1e-12
    assert np.max(np.abs(apply_function_entries(X, fn.monomial(0), 4, "spectral") - np.eye(4))) <= 1e-12


def test_apply_square_matches_dense():
    X = _X(3, 1)
    sq = X.matrix @ X.matrix
    for method in ("spectral", "polynomial", "auto"):
        assert np.allclose(apply_function_entries(X, fn.monomial(2), 3, method), sq, atol=1e-12)


def test_apply_polynomial_path_agrees():
    X = _X(80, 2, gue())
    f = fn.polynomial([0.5, -1.0, 0.3, 2.0])
    a = apply_function_entries(X, f, 3, "spectral")
    b = apply_function_entries(X, f, 3, "polynomial")
    assert np.max(np.abs(a - b)) <= 1e-12
    assert np.allclose(a, a.conj().T)


def test_apply_cut_function_uses_guard():
    X = _X(200, 3)
    f = fn.builtin_catalog()["x3_cut"]
    assert spectrum_within(X, -2.5, 2.5)
    a = apply_function_entries(X, f, 2, "auto")
    b = apply_function_entries(X, f, 2, "spectral")
    assert np.max(np.abs(a - b)) <= 1e-12
    big = sample_wigner(goe(), 10, 0)
    big.matrix[0, 0] = 10.0
    assert not spectrum_within(big, -2.5, 2.5)
    with pytest.raises(ValueError):
        apply_function_entries(X, fn.sine(), 2, "polynomial")


def test_resolvent_zero_matrix():
    Z = np.zeros((5, 5))
    R = resolvent_block(Z, 2.0, 5)
    assert np.allclose(R, 0.5 * np.eye(5), atol=1e-15)


def test_resolvent_bound_complex_z():
    X = _X(50, 4)
    R = resolvent_block(X, 3j, 50)
    assert np.max(np.abs(R)) <= 1 / 3 + 1e-12


def test_resolvent_spectral_vs_solve():
    for spec in (goe(), gue()):
        X = _X(60, 5, spec)
        for z in (0.3 + 0.2j, 2.7, -1 - 1j):
            a = resolvent_block(X, z, 60)
            b = resolvent_block_spectral(X, z, 60)
            assert np.max(np.abs(a - b)) <= 1e-10
            lam = X.eigvalsh()
            gap = np.min(np.abs(complex(z) - lam))
            assert np.linalg.norm(a, 2) <= 1 / gap + 1e-9


def test_resolvent_identity():
    X1, X2 = _X(30, 6).matrix, _X(30, 7).matrix
    z = 2j
    R1, R2 = resolvent_block(X1, z, 30), resolvent_block(X2, z, 30)
    assert np.max(np.abs(R1 - R2 - R1 @ (X1 - X2) @ R2)) <= 1e-10


def test_resolvent_entries_and_request():
    X = _X(40, 8)
    req = ResolventRequest(1 + 1j, [(0, 0), (3, 1), (1, 3)])
    vals = resolvent_entries(X, req)
    R = resolvent_block_spectral(X, 1 + 1j, 40)
    assert np.allclose(vals, [R[0, 0], R[3, 1], R[1, 3]], atol=1e-12)
    with pytest.raises(IndexError):
        resolvent_entries(X, ResolventRequest(1j, [(40, 0)]))


def test_near_singular():
    X = _X(20, 9)
    lam = X.eigvalsh()[3]
    with pytest.raises(NearSingularError):
        resolvent_block(X, lam, 2)


@pytest.mark.parametrize("kl,pq,comp,spec", [
    ((0, 1), (2, 3), "re", goe()),
    ((1, 1), (2, 2), "re", goe()),
    ((0, 2), (0, 2), "re", goe()),
    ((0, 1), (2, 3), "re", gue()),
    ((0, 1), (2, 3), "im", gue()),
    ((3, 3), (1, 3), "im", gue()),
])
def test_resolvent_derivative(kl, pq, comp, spec):
    X = _X(20, 10, spec)
    assert resolvent_derivative_check(X, 0.4 + 1j, kl, pq, comp) <= 1e-6


def test_extension_matches_f_on_axis():
    f = fn.poly_bump(4.0, 8) * fn.monomial(1)
    ext = AlmostAnalyticExtension(f, 3)
    x = np.linspace(-3.9, 3.9, 17)
    assert np.allclose(ext.value(x, np.zeros_like(x)), f(x), atol=1e-15)
    with pytest.raises(ValueError):
        AlmostAnalyticExtension(f, f.max_order)


def test_dbar_polynomial_inner_strip():
    # for a polynomial of degree <= l the inner-strip dbar vanishes identically
    f = fn.polynomial([1.0, -2.0, 0.5])
    ext = AlmostAnalyticExtension(f, 3)
    x = np.linspace(-2, 2, 9)
    assert np.max(np.abs(ext.dbar(x, np.full_like(x, 0.3)))) == 0.0
    g = fn.monomial(5)
    ext = AlmostAnalyticExtension(g, 3)
    y = 0.25
    expect = 0.5 * g.derivative(4, x) * (1j * y) ** 3 / 6.0
    assert np.allclose(ext.dbar(x, np.full_like(x, y)), expect, atol=1e-13)


def test_hs_scalar_reconstruction():
    f = fn.poly_bump(4.0, 8) * fn.cosine(1.0)
    ext = AlmostAnalyticExtension(f, 4)
    lam = np.linspace(-2.5, 2.5, 11)
    assert np.max(np.abs(hs_scalar(ext, lam, HSGrid(200, 200)) - f(lam))) <= 1e-6


def test_hs_entries_converge_and_order_independent():
    X = _X(100, 11)
    f = fn.make_function({"kind": "bump_times", "f": "x1"})
    exact = apply_function_entries(X, f, 3, "spectral")
    devs = []
    for g in (100, 200, 400):
        devs.append(np.max(np.abs(hs_reconstruct_entries(X, AlmostAnalyticExtension(f, 3), 3, HSGrid(g, g)) - exact)))
    assert devs[-1] <= 1e-6
    assert all(b <= 2 * a for a, b in zip(devs[:-1], devs[1:]))
    r5 = hs_reconstruct_entries(X, AlmostAnalyticExtension(f, 5), 3, HSGrid(400, 400))
    assert np.max(np.abs(r5 - exact)) <= 1e-6
    assert np.isfinite(dbar_bound_ratio(AlmostAnalyticExtension(f, 3)))


def test_hs_solve_path_small():
    X = _X(12, 12)
    f = fn.poly_bump(4.0, 8)
    ext = AlmostAnalyticExtension(f, 3)
    grid = HSGrid(48, 48)
    a = hs_reconstruct_entries(X, ext, 2, grid, "solve")
    b = hs_reconstruct_entries(X, ext, 2, grid, "spectral")
    assert np.max(np.abs(a - b)) <= 1e-10


def test_hs_needs_compact_support():
    X = _X(10, 0)
    with pytest.raises(ValueError):
        hs_reconstruct_entries(X, AlmostAnalyticExtension(fn.sine(), 3), 2)


def test_schur_corner_identity():
    for spec in (goe(), gue()):
        X = _X(200, 13, spec)
        for z in (3.0, 1 + 0.5j):
            sb = schur_blocks(X, z, 3)
            R = resolvent_block_spectral(X, z, 3)
            assert np.max(np.abs(sb.R_corner - R)) <= 1e-10
            g = complex(stieltjes_g(z))
            assert np.allclose(sb.upsilon, np.sqrt(200) * (R - g * np.eye(3)), atol=1e-9)


def test_schur_empty_quadratic_form():
    A = np.diag(np.linspace(-1, 1, 10))
    Y = schur_field(A, 3.0, 1)
    g = complex(stieltjes_g(3.0))
    assert Y[0, 0] == pytest.approx(-np.sqrt(10) * g, abs=1e-14)


def test_upsilon_assembly_error_bounded():
    z = 3.0
    g = complex(stieltjes_g(z))
    med = []
    for n in (500, 1000, 2000):
        errs = []
        for r in range(12):
            sb = schur_blocks(sample_wigner(goe(), n, SeedDerivation(1, r, f"ups{n}")), z, 2)
            lin = g * g * (np.sqrt(n) * sb.corner + sb.Y)
            errs.append(np.linalg.norm(sb.upsilon - lin) * np.sqrt(n))
        med.append(np.median(errs))
    assert all(b <= 2 * a for a, b in zip(med[:-1], med[1:]))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(0.1, 3))
def test_resolvent_paths_agree_property(seed, x, y):
    X = sample_wigner(goe(), 25, seed)
    z = complex(x, y)
    assert np.max(np.abs(resolvent_block(X, z, 4) - resolvent_block_spectral(X, z, 4))) <= 1e-10
