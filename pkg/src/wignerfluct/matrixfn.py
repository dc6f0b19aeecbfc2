"""Matrix entries of ``f(X)`` and of resolvents of a sampled Wigner matrix.

Three independent routes to ``f(X)_{ij}``:

* spectral: ``sum_k f(lambda_k) u_ik conj(u_jk)`` from a dense eigendecomposition;
* polynomial: Horner's rule on the first ``m`` rows, valid whenever ``f``
  coincides with a polynomial on an interval that provably contains the
  spectrum (checked by two Cholesky factorizations);
* Helffer-Sjostrand: ``f(X) = -(1/pi) iint dbar f~(z) R(z) dx dy`` with an
  almost-analytic extension ``f~``.

The Schur-complement helpers split ``X`` into the top-left ``m x m`` corner,
the off-diagonal block ``B`` and the complementary block ``X~``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.linalg as sla

from .ensembles import WignerSample
from .functionals import TestFunction, smooth_step_jet
from .semicircle import SpectralPoint, _check_off_cut, stieltjes_g

__all__ = [
    "NumericError",
    "NearSingularError",
    "ResolventRequest",
    "apply_function_entries",
    "spectrum_within",
    "resolvent_entries",
    "resolvent_block",
    "resolvent_block_spectral",
    "resolvent_derivative",
    "resolvent_derivative_check",
    "AlmostAnalyticExtension",
    "HSGrid",
    "hs_reconstruct_entries",
    "hs_scalar",
    "dbar_bound_ratio",
    "SchurBlocks",
    "schur_blocks",
    "schur_field",
]

NEAR_SINGULAR_TOL = 1e-12


class NumericError(ArithmeticError):
    """A dense factorization failed."""


class NearSingularError(NumericError):
    """The spectral parameter (numerically) coincides with an eigenvalue."""


def _matrix(X) -> np.ndarray:
    return X.matrix if isinstance(X, WignerSample) else np.asarray(X)


def _eigh(X):
    if isinstance(X, WignerSample):
        try:
            return X.eigh()
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigendecomposition failed for n={X.n}: {exc}") from exc
    try:
        return np.linalg.eigh(np.asarray(X))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc


def _eigvals(X):
    if isinstance(X, WignerSample):
        return X.eigvalsh()
    return np.linalg.eigvalsh(np.asarray(X))


# --------------------------------------------------------------------------
# f(X)
# --------------------------------------------------------------------------

def _is_pd(A) -> bool:
    try:
        sla.cho_factor(A, check_finite=False)
        return True
    except np.linalg.LinAlgError:
        return False


def spectrum_within(X, a: float, b: float) -> bool:
    """True when every eigenvalue of ``X`` lies strictly inside ``(a, b)``.

    Decided by attempting Cholesky factorizations of ``bI - X`` and ``X - aI``,
    which is several times cheaper than computing eigenvalues.
    """
    A = _matrix(X)
    idx = np.diag_indices(A.shape[0])
    upper = -A.copy()
    upper[idx] += b
    if not _is_pd(upper):
        return False
    lower = A.copy()
    lower[idx] -= a
    return _is_pd(lower)


def _horner_rows(A, coeffs, m):
    n = A.shape[0]
    rows = np.zeros((m, n), dtype=A.dtype)
    rows[np.arange(m), np.arange(m)] = coeffs[-1]
    for c in coeffs[-2::-1]:
        rows = rows @ A
        rows[np.arange(m), np.arange(m)] += c
    return rows


def apply_function_entries(X, f: TestFunction, m: int, method: str = "auto") -> np.ndarray:
    """Top-left ``m x m`` block of ``f(X)``.

    ``method`` is ``"spectral"``, ``"polynomial"`` or ``"auto"`` (polynomial
    when ``f`` is a polynomial, or agrees with one on an interval shown to
    contain the spectrum; spectral otherwise).
    """
    A = _matrix(X)
    n = A.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"block size m={m} outside 1..{n}")
    use_poly = False
    if method == "polynomial":
        if f.poly_coeffs is None:
            raise ValueError(f"{f.name} has no polynomial form")
        use_poly = True
    elif method == "auto" and f.poly_coeffs is not None:
        use_poly = f.poly_interval is None or spectrum_within(X, *f.poly_interval)
    elif method not in ("auto", "spectral"):
        raise ValueError(f"unknown method {method!r}")

    if use_poly:
        rows = _horner_rows(A, np.asarray(f.poly_coeffs, dtype=float), m)
        return rows[:, :m]
    vals, vecs = _eigh(X)
    U = vecs[:m]
    return (U * f(vals)) @ U.conj().T


# --------------------------------------------------------------------------
# Resolvents
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ResolventRequest:
    z: complex
    indices: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z.z if isinstance(self.z, SpectralPoint) else self.z))
        object.__setattr__(self, "indices", tuple((int(i), int(j)) for i, j in self.indices))

    def validate(self, n: int):
        for i, j in self.indices:
            if not (0 <= i < n and 0 <= j < n):
                raise IndexError(f"index ({i}, {j}) outside a {n}x{n} matrix")


def _check_not_eigenvalue(X, z: complex):
    if z.imag == 0.0:
        gap = np.min(np.abs(_eigvals(X) - z.real))
        if gap < NEAR_SINGULAR_TOL:
            raise NearSingularError(f"z={z.real!r} within {gap:.3g} of an eigenvalue")


def _shifted(A, z):
    n = A.shape[0]
    dtype = np.result_type(A.dtype, complex if z.imag != 0.0 else float)
    M = -A.astype(dtype, copy=True)
    M[np.diag_indices(n)] += z if dtype.kind == "c" else z.real
    return M


def _solve_shifted(A, z: complex, rhs):
    """Solve ``(zI - A) Y = rhs`` (``A`` symmetric/Hermitian)."""
    M = _shifted(A, z)
    if z.imag == 0.0:
        # outside the spectrum zI - A is definite; Cholesky is the cheap path
        for sign in (1.0, -1.0):
            try:
                c = sla.cho_factor(sign * M, check_finite=False)
                return sign * sla.cho_solve(c, rhs, check_finite=False)
            except np.linalg.LinAlgError:
                pass
    try:
        return sla.solve(M, rhs, check_finite=False)
    except (np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
        raise NumericError(f"shifted solve failed at z={z}: {exc}") from exc


def resolvent_block(X, z, m: int) -> np.ndarray:
    """Top-left ``m x m`` block of ``R(z) = (zI - X)^{-1}`` by a linear solve."""
    A = _matrix(X)
    z = complex(z.z if isinstance(z, SpectralPoint) else z)
    _check_not_eigenvalue(X, z)
    rhs = np.zeros((A.shape[0], m))
    rhs[np.arange(m), np.arange(m)] = 1.0
    return _solve_shifted(A, z, rhs)[:m]


def resolvent_block_spectral(X, z, m: int) -> np.ndarray:
    vals, vecs = _eigh(X)
    U = vecs[:m]
    return (U / (complex(z) - vals)) @ U.conj().T


def resolvent_entries(X, req: ResolventRequest) -> np.ndarray:
    """Requested entries ``R_ij(z)``; one solve per distinct column ``j``."""
    A = _matrix(X)
    n = A.shape[0]
    req.validate(n)
    _check_not_eigenvalue(X, req.z)
    cols = sorted({j for _, j in req.indices})
    rhs = np.zeros((n, len(cols)))
    rhs[cols, np.arange(len(cols))] = 1.0
    sol = _solve_shifted(A, req.z, rhs)
    where = {j: k for k, j in enumerate(cols)}
    return np.array([sol[i, where[j]] for i, j in req.indices], dtype=complex)


def _full_resolvent(A, z):
    return _solve_shifted(A, complex(z), np.eye(A.shape[0]))


def resolvent_derivative(R, kl, pq, component: str = "re"):
    """Analytic derivative of ``R_kl`` w.r.t. the entry pair ``X_pq = conj(X_qp)``.

    ``component="re"`` perturbs ``Re X_pq`` (both mirror entries move
    together); ``"im"`` perturbs ``Im X_pq`` (Hermitian matrices only).  For
    ``p == q`` only the real component exists.
    """
    k, l = kl
    p, q = pq
    if p == q:
        if component != "re":
            raise ValueError("diagonal entries have no imaginary part")
        return R[k, p] * R[p, l]
    if component == "re":
        return R[k, p] * R[q, l] + R[k, q] * R[p, l]
    if component == "im":
        return 1j * (R[k, p] * R[q, l] - R[k, q] * R[p, l])
    raise ValueError("component must be 're' or 'im'")


def resolvent_derivative_check(X, z, kl, pq, component: str = "re", step: float = 1e-6) -> float:
    """``|analytic derivative - central finite difference|`` for one entry."""
    A = _matrix(X)
    z = complex(z)
    if z.imag == 0.0:
        raise ValueError("the derivative check needs a non-real z")
    p, q = pq
    D = np.zeros_like(A, dtype=complex if (component == "im" or np.iscomplexobj(A)) else float)
    if p == q:
        D[p, p] = 1.0
    elif component == "re":
        D[p, q] = D[q, p] = 1.0
    else:
        D[p, q], D[q, p] = 1j, -1j
    k, l = kl
    plus = _full_resolvent(A + step * D, z)[k, l]
    minus = _full_resolvent(A - step * D, z)[k, l]
    fd = (plus - minus) / (2 * step)
    exact = resolvent_derivative(_full_resolvent(A, z), kl, pq, component)
    return float(abs(exact - fd))


# --------------------------------------------------------------------------
# Helffer-Sjostrand
# --------------------------------------------------------------------------

def _cutoff(y):
    """Even C-infinity profile: 1 for |y| <= 1/2, 0 for |y| >= 1; returns (value, derivative)."""
    y = np.asarray(y, dtype=float)
    t = 2.0 * (1.0 - np.abs(y))
    jet = smooth_step_jet(t, 1)
    return jet[0], jet[1] * (-2.0 * np.sign(y))


@dataclass(frozen=True)
class AlmostAnalyticExtension:
    """``f~(x + iy) = cutoff(y) * sum_{n <= l} f^(n)(x) (iy)^n / n!``."""

    f: TestFunction
    order_l: int = 3

    def __post_init__(self):
        if self.order_l < 0 or self.order_l > self.f.max_order - 1:
            raise ValueError(f"order_l must lie in 0..{self.f.max_order - 1} for {self.f.name}")

    def value(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        jet = self.f.taylor(x, self.order_l)
        s, _ = _cutoff(y)
        iy = 1j * y
        return s * sum(jet[n] * iy ** n for n in range(self.order_l + 1))

    def dbar(self, x, y):
        """``(1/2)(d/dx + i d/dy) f~``, exactly."""
        l = self.order_l
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        jet = self.f.taylor(x, l + 1)
        s, ds = _cutoff(y)
        iy = 1j * y
        series = sum(jet[n] * iy ** n for n in range(l + 1))
        top = jet[l + 1] * (l + 1) * iy ** l  # f^(l+1)(x) (iy)^l / l!
        return 0.5 * (s * top + 1j * ds * series)


@dataclass(frozen=True)
class HSGrid:
    """Tensor Gauss-Legendre grid over ``support x [y_min, 1]`` (upper half only).

    ``x`` uses ``x_panels`` equal panels; ``y`` uses panels with geometrically
    graded breakpoints between ``y_min`` and ``1/2`` plus the panel ``[1/2, 1]``
    where the cutoff varies.
    """

    nx: int = 400
    ny: int = 400
    y_min: float = 1e-4
    x_panels: int = 8
    y_panels: int = 8

    def _gl(self, breaks, total):
        per = max(total // (len(breaks) - 1), 1)
        t, w = np.polynomial.legendre.leggauss(per)
        xs, ws = [], []
        for a, b in zip(breaks[:-1], breaks[1:]):
            xs.append(0.5 * (b - a) * t + 0.5 * (a + b))
            ws.append(0.5 * (b - a) * w)
        return np.concatenate(xs), np.concatenate(ws)

    def nodes(self, support):
        a, b = support
        xb = np.linspace(a, b, self.x_panels + 1)
        yb = np.concatenate([np.geomspace(self.y_min, 0.5, self.y_panels), [1.0]])
        x, wx = self._gl(xb, self.nx)
        y, wy = self._gl(yb, self.ny)
        return x, wx, y, wy


def hs_scalar(ext: AlmostAnalyticExtension, lam, grid: HSGrid | None = None, chunk: int = 64):
    """``f(lambda)`` reconstructed as ``-(2/pi) Re iint_{y>0} dbar f~(z) / (z - lambda)``.

    The lower half-plane contributes the complex conjugate of the upper half
    for real ``f`` and real ``lambda``, hence the factor 2 and the real part.
    """
    if not ext.f.compact:
        raise ValueError(f"{ext.f.name} is not compactly supported")
    grid = grid or HSGrid()
    x, wx, y, wy = grid.nodes(ext.f.support_hint)
    X, Y = np.meshgrid(x, y, indexing="ij")
    weight = (ext.dbar(X, Y) * np.outer(wx, wy)).ravel()
    Z = (X + 1j * Y).ravel()
    keep = weight != 0
    weight, Z = weight[keep], Z[keep]
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.empty(lam.shape)
    for s in range(0, lam.size, chunk):
        L = lam[s:s + chunk]
        out[s:s + chunk] = np.real((weight[None, :] / (Z[None, :] - L[:, None])).sum(axis=1))
    return -(2.0 / np.pi) * out


def hs_reconstruct_entries(X, ext: AlmostAnalyticExtension, m: int, grid: HSGrid | None = None,
                           method: str = "spectral") -> np.ndarray:
    """Top-left ``m x m`` block of ``f(X)`` by the Helffer-Sjostrand integral.

    ``method="spectral"`` integrates the resolvent diagonalized once
    (``R(z) = U (z - Lambda)^{-1} U*``); ``method="solve"`` forms
    ``R(z)[:, :m]`` by a linear solve at every grid node (slow, independent
    of any eigendecomposition).
    """
    if not ext.f.compact:
        raise ValueError(f"{ext.f.name} is not compactly supported")
    grid = grid or HSGrid()
    if method == "spectral":
        vals, vecs = _eigh(X)
        U = vecs[:m]
        return (U * hs_scalar(ext, vals, grid)) @ U.conj().T
    if method != "solve":
        raise ValueError(f"unknown method {method!r}")
    A = _matrix(X)
    n = A.shape[0]
    x, wx, y, wy = grid.nodes(ext.f.support_hint)
    acc = np.zeros((m, m), dtype=complex)
    rhs = np.zeros((n, m))
    rhs[np.arange(m), np.arange(m)] = 1.0
    for j, yj in enumerate(y):
        d = ext.dbar(x, np.full_like(x, yj)) * wx * wy[j]
        for i in np.nonzero(d)[0]:
            z = complex(x[i], yj)
            Rz = sla.solve(z * np.eye(n) - A, rhs, check_finite=False)[:m]
            # lower half-plane: dbar f~(conj z) = conj(dbar f~(z)), R(conj z) = R(z)^*
            acc += d[i] * Rz + np.conj(d[i]) * Rz.conj().T
    out = -acc / np.pi
    return out.real if not np.iscomplexobj(A) else out


def dbar_bound_ratio(ext: AlmostAnalyticExtension, grid: HSGrid | None = None) -> float:
    """``max |dbar f~(x+iy)| / (||f||_{C^{l+1}} |y|^l)`` over the grid nodes."""
    grid = grid or HSGrid()
    x, _, y, _ = grid.nodes(ext.f.support_hint)
    X, Y = np.meshgrid(x, y, indexing="ij")
    norm = ext.f.c_norm(ext.order_l + 1, ext.f.support_hint)
    return float(np.max(np.abs(ext.dbar(X, Y)) / (norm * np.abs(Y) ** ext.order_l)))


# --------------------------------------------------------------------------
# Schur complement
# --------------------------------------------------------------------------

@dataclass
class SchurBlocks:
    """Quadratic form ``Q = B* R~(z) B``, the field ``Y_N``, corner resolvent and ``Upsilon_N``."""

    z: complex
    n: int
    Q: np.ndarray
    Y: np.ndarray
    R_corner: np.ndarray
    upsilon: np.ndarray
    corner: np.ndarray


def schur_blocks(X, z, m: int, sigma: float | None = None) -> SchurBlocks:
    """Schur-complement decomposition of the top-left ``m x m`` corner at ``z``.

    ``Y = sqrt(N) (Q - sigma^2 g(z) I)`` with ``Q_ij = <x^(i), R~(z) x^(j)>``
    (conjugate-linear in the first slot), and
    ``R^(m)(z) = (z - X^(m) - Q)^{-1}``, ``Upsilon = sqrt(N)(R^(m) - g(z) I)``.
    """
    A = _matrix(X)
    n = A.shape[0]
    if sigma is None:
        sigma = X.sigma if isinstance(X, WignerSample) else 1.0
    z = complex(z.z if isinstance(z, SpectralPoint) else z)
    _check_off_cut(z, sigma)
    if not 1 <= m < n:
        raise ValueError(f"block size m={m} outside 1..{n - 1}")
    corner = A[:m, :m]
    B = A[m:, :m]
    tilde = A[m:, m:]
    if z.imag == 0.0:
        gap = np.min(np.abs(np.linalg.eigvalsh(tilde) - z.real)) if n - m <= 64 else np.inf
        if gap < NEAR_SINGULAR_TOL:
            raise NearSingularError(f"z={z.real!r} within {gap:.3g} of an eigenvalue of the block")
    sol = _solve_shifted(tilde, z, B)
    Q = B.conj().T @ sol
    g = stieltjes_g(z, sigma)
    eye = np.eye(m)
    root = np.sqrt(n)
    Y = root * (Q - sigma * sigma * g * eye)
    try:
        R_corner = np.linalg.inv(z * eye - corner - Q)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"corner inversion failed at z={z}: {exc}") from exc
    ups = root * (R_corner - g * eye)
    return SchurBlocks(z, n, Q, Y, R_corner, ups, corner)


def schur_field(X, z, m: int, sigma: float | None = None) -> np.ndarray:
    """The ``m x m`` matrix ``Y_N(z)``."""
    return schur_blocks(X, z, m, sigma).Y
