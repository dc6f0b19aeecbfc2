"""Deterministic analytics of the Wigner semicircle law.

The semicircle law of scale ``sigma`` has density

    rho(x) = sqrt(4 sigma^2 - x^2) / (2 pi sigma^2),   |x| <= 2 sigma,

and Stieltjes transform ``g(z) = int rho(x) dx / (z - x)``, the decaying root of
``sigma^2 g^2 - z g + 1 = 0``.  This module also provides the two-point kernels
``phi``, ``phi_pp``, ``phi_mm``, ``phi_pm`` that build every covariance of the
limiting resolvent field, and a Gauss-Chebyshev (second kind) rule that
integrates exactly against the semicircle weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
from scipy.special import roots_chebyu

__all__ = [
    "DomainError",
    "SpectralParams",
    "SpectralPoint",
    "QuadratureRule",
    "density",
    "stieltjes_g",
    "stieltjes_g_prime",
    "phi",
    "phi_pp",
    "phi_mm",
    "phi_pm",
    "semicircle_expect",
    "semicircle_moment",
    "catalan",
]

DEFAULT_NODES = 2048
CONFLUENCE_TOL = 1e-8


class DomainError(ValueError):
    """Raised when a spectral point lies on the cut [-2 sigma, 2 sigma]."""


@dataclass(frozen=True)
class SpectralParams:
    """Scale of the semicircle law; the support is ``[-2 sigma, 2 sigma]``."""

    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma must be a positive finite number, got {self.sigma!r}")

    @property
    def edge(self) -> float:
        return 2.0 * self.sigma


@dataclass(frozen=True)
class SpectralPoint:
    """A point of the spectral plane, tagged with whether it sits on the cut."""

    z: complex
    sigma: float = 1.0

    @property
    def on_cut(self) -> bool:
        z = complex(self.z)
        return z.imag == 0.0 and abs(z.real) <= 2.0 * self.sigma


def _as_params(p) -> SpectralParams:
    if p is None:
        return SpectralParams()
    if isinstance(p, SpectralParams):
        return p
    return SpectralParams(float(p))


def _as_z(z):
    if isinstance(z, SpectralPoint):
        return complex(z.z)
    return z


def _check_off_cut(z, sigma: float):
    z = np.asarray(z, dtype=complex)
    bad = (z.imag == 0.0) & (np.abs(z.real) <= 2.0 * sigma)
    if np.any(bad):
        raise DomainError(f"spectral point(s) {z[bad] if z.ndim else z} lie on the cut "
                          f"[-{2 * sigma:g}, {2 * sigma:g}]")
    return z


def _scalar_or_array(out, like):
    if np.ndim(like) == 0:
        return complex(out)
    return out


def density(x, p: SpectralParams | float | None = None):
    """Semicircle density at ``x`` (vectorized); zero outside the support."""
    sigma = _as_params(p).sigma
    x = np.asarray(x, dtype=float)
    s2 = 4.0 * sigma * sigma - x * x
    out = np.where(s2 > 0.0, np.sqrt(np.clip(s2, 0.0, None)) / (2.0 * np.pi * sigma * sigma), 0.0)
    return float(out) if out.ndim == 0 else out


def _sqrt_branch(z, sigma):
    # z * sqrt(1 - 4 sigma^2 / z^2) with the principal root behaves like z at infinity
    # on both half-planes and on the real axis away from the cut.
    return z * np.sqrt(1.0 - 4.0 * sigma * sigma / (z * z))


def stieltjes_g(z, p: SpectralParams | float | None = None):
    """Stieltjes transform of the semicircle law, ``int rho(x) dx / (z - x)``.

    Vectorized over ``z``.  Raises :class:`DomainError` for points on the cut.
    """
    sigma = _as_params(p).sigma
    z0 = _as_z(z)
    zz = _check_off_cut(z0, sigma)
    s = _sqrt_branch(zz, sigma)
    # (z - s)/(2 sigma^2) cancels catastrophically for large |z|; use 2/(z + s) instead.
    out = 2.0 / (zz + s)
    return _scalar_or_array(out, z0)


def stieltjes_g_prime(z, p: SpectralParams | float | None = None):
    """Derivative ``g'(z)``; equals ``-int rho(x) dx / (z - x)^2``."""
    sigma = _as_params(p).sigma
    z0 = _as_z(z)
    zz = _check_off_cut(z0, sigma)
    g = 2.0 / (zz + _sqrt_branch(zz, sigma))
    # Differentiating sigma^2 g^2 - z g + 1 = 0 gives g' = g / (2 sigma^2 g - z) = -g / s.
    out = g / (2.0 * sigma * sigma * g - zz)
    return _scalar_or_array(out, z0)


def phi(z, w, p: SpectralParams | float | None = None):
    """Two-point kernel ``E[1/((z - eta)(w - eta))]`` for semicircular ``eta``.

    Uses the difference quotient ``-(g(w) - g(z))/(w - z)`` and switches to
    ``-g'(z)`` when ``|z - w| < 1e-8 * max(1, |z|)``.
    """
    sigma = _as_params(p).sigma
    z0, w0 = _as_z(z), _as_z(w)
    zz = np.asarray(z0, dtype=complex)
    ww = np.asarray(w0, dtype=complex)
    zz, ww = np.broadcast_arrays(zz, ww)
    gz = np.asarray(stieltjes_g(zz, sigma), dtype=complex)
    gw = np.asarray(stieltjes_g(ww, sigma), dtype=complex)
    diff = ww - zz
    close = np.abs(diff) < CONFLUENCE_TOL * np.maximum(1.0, np.abs(zz))
    safe = np.where(close, 1.0, diff)
    out = np.where(close, 0.0, -(gw - gz) / safe)
    if np.any(close):
        out = np.where(close, -np.asarray(stieltjes_g_prime(zz, sigma)), out)
    if np.ndim(z0) == 0 and np.ndim(w0) == 0:
        return complex(out)
    return out


def _four(z, w, sigma):
    z = np.asarray(_as_z(z), dtype=complex)
    w = np.asarray(_as_z(w), dtype=complex)
    zc, wc = np.conj(z), np.conj(w)
    return (phi(z, w, sigma), phi(zc, wc, sigma), phi(zc, w, sigma), phi(z, wc, sigma))


def _real_out(val, z, w):
    val = np.real_if_close(np.asarray(val), tol=1e6)
    val = np.real(val)
    if np.ndim(_as_z(z)) == 0 and np.ndim(_as_z(w)) == 0:
        return float(val)
    return val


def phi_pp(z, w, p: SpectralParams | float | None = None):
    """``E[Re(1/(z - eta)) Re(1/(w - eta))]``."""
    sigma = _as_params(p).sigma
    a, b, c, d = _four(z, w, sigma)
    return _real_out(0.25 * (a + b + c + d), z, w)


def phi_mm(z, w, p: SpectralParams | float | None = None):
    """``E[Im(1/(z - eta)) Im(1/(w - eta))]``."""
    sigma = _as_params(p).sigma
    a, b, c, d = _four(z, w, sigma)
    return _real_out(-0.25 * (a + b - c - d), z, w)


def phi_pm(z, w, p: SpectralParams | float | None = None):
    """``E[Re(1/(z - eta)) Im(1/(w - eta))]``."""
    sigma = _as_params(p).sigma
    a, b, c, d = _four(z, w, sigma)
    return _real_out(-0.25j * (a + c - b - d), z, w)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Chebyshev rule of the second kind mapped onto ``[-2 sigma, 2 sigma]``.

    Weights already include the semicircle density, so ``sum(w * f(x))``
    approximates ``int f d mu_sc``; exact for polynomials of degree
    ``<= 2 * node_count - 1``.
    """

    node_count: int = DEFAULT_NODES

    def __post_init__(self):
        if int(self.node_count) < 1:
            raise ValueError("node_count must be positive")

    def nodes_weights(self, p: SpectralParams | float | None = None):
        sigma = _as_params(p).sigma
        t, w = _cheb_u(int(self.node_count))
        # weight sqrt(1 - t^2) integrates to pi/2; the semicircle measure has mass 1
        return 2.0 * sigma * t, w * (2.0 / np.pi)


@lru_cache(maxsize=16)
def _cheb_u(n: int):
    t, w = roots_chebyu(n)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def semicircle_expect(f, p: SpectralParams | float | None = None, q: QuadratureRule | None = None):
    """``int f d mu_sc`` by Gauss-Chebyshev quadrature.

    ``f`` is any vectorized callable (a :class:`TestFunction` works).
    """
    q = q or QuadratureRule()
    x, w = q.nodes_weights(p)
    return float(np.dot(w, np.asarray(f(x), dtype=float)))


@lru_cache(maxsize=None)
def catalan(m: int) -> int:
    return comb(2 * m, m) // (m + 1)


def semicircle_moment(k: int, p: SpectralParams | float | None = None) -> float:
    """``E eta^k``: zero for odd ``k`` and ``C_m sigma^(2m)`` for ``k = 2m``."""
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    if k % 2:
        return 0.0
    sigma = _as_params(p).sigma
    return float(catalan(k // 2)) * sigma ** k
