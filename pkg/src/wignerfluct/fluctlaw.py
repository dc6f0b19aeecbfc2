"""Predicted limiting laws.

* :class:`EntryFluctuationLaw`: the limit of ``sqrt(N)(f(X)_ij - centering)``,
  i.e. ``a * W_ij + Gaussian`` with ``a = alpha(f)/sigma`` and Gaussian
  variance ``v1sq``/``v2sq`` (diagonal) or ``d2`` (off-diagonal).
* :class:`ResolventFieldLaw`: covariances of the Gaussian field ``Y(z)`` and of
  ``Upsilon(z) = g(z)^2 (W^(m) + Y(z))``, the limit of
  ``sqrt(N)(R^(m)(z) - g(z) I)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import sqrt

import numpy as np
from scipy import special

from . import functionals as fn
from .ensembles import EnsembleSpec, MarginalDistribution, as_rng, marginal_from_dict
from .functionals import TestFunction
from .semicircle import QuadratureRule, _check_off_cut, phi_mm, phi_pm, phi_pp, stieltjes_g, stieltjes_g_prime

__all__ = [
    "EntryFluctuationLaw",
    "CDFResult",
    "predict_entry_law",
    "law_cdf",
    "law_cdf_detailed",
    "law_sample",
    "ResolventFieldLaw",
    "y_cov",
    "upsilon_cov",
    "predict_resolvent_cov",
    "consistency_resolvent_vs_entry",
]

PAIRS = ("ReRe", "ImIm", "ReIm", "ImRe")
MIN_SMOOTHNESS = 4
GH_NODES = 64
MC_DRAWS = 10 ** 6


@dataclass(frozen=True)
class EntryFluctuationLaw:
    """``a * w + G`` with ``w`` a matrix-entry draw and ``G`` an independent centred Gaussian.

    For ``field == "complex"`` the entry is ``w = (xi + i xi')/sqrt(2)`` with
    ``xi, xi'`` i.i.d. from ``entry_marginal`` and ``G`` has i.i.d. real and
    imaginary parts of variance ``gaussian_variance / 2`` each.
    """

    coefficient: float
    entry_marginal: MarginalDistribution
    gaussian_variance: float
    field: str = "real"
    entry: str = "offdiag"

    def __post_init__(self):
        if self.field not in ("real", "complex"):
            raise ValueError("field must be 'real' or 'complex'")
        if self.gaussian_variance < 0:
            raise ValueError("gaussian_variance must be nonnegative")

    @property
    def total_variance(self) -> float:
        # E|w|^2 equals the marginal variance in both fields
        return self.coefficient ** 2 * self.entry_marginal.variance + self.gaussian_variance

    def component_variance(self) -> float:
        """Variance of the real (or imaginary) part."""
        if self.field == "real":
            return self.total_variance
        return 0.5 * self.total_variance

    def to_dict(self) -> dict:
        return {
            "coefficient": self.coefficient,
            "gaussian_variance": self.gaussian_variance,
            "marginal": self.entry_marginal.to_dict(),
            "field": self.field,
            "entry": self.entry,
            "total_variance": self.total_variance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EntryFluctuationLaw":
        return cls(float(d["coefficient"]), marginal_from_dict(d["marginal"]),
                   float(d["gaussian_variance"]), d.get("field", "real"), d.get("entry", "offdiag"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def predict_entry_law(f: TestFunction, spec: EnsembleSpec, entry: str = "offdiag",
                      q: QuadratureRule | None = None) -> EntryFluctuationLaw:
    """Limit law of a normalized diagonal or off-diagonal entry of ``f(X)``."""
    if f.smoothness_class < MIN_SMOOTHNESS:
        raise ValueError(f"{f.name} is only C^{f.smoothness_class}; at least C^{MIN_SMOOTHNESS} is needed")
    p = spec.params
    a = fn.alpha(f, p, q) / p.sigma
    if entry == "diag":
        if spec.hermitian:
            v = fn.v2sq(f, spec.kappa4, p, q)
        else:
            v = fn.v1sq(f, spec.kappa4, p, q)
        return EntryFluctuationLaw(a, spec.diag, v, "real", "diag")
    if entry == "offdiag":
        return EntryFluctuationLaw(a, spec.offdiag, fn.d2(f, p, q),
                                   "complex" if spec.hermitian else "real", "offdiag")
    raise ValueError("entry must be 'diag' or 'offdiag'")


# --------------------------------------------------------------------------
# CDF and sampling
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CDFResult:
    value: np.ndarray
    method: str
    stderr: float = 0.0


def _component_parts(law: EntryFluctuationLaw, component: str):
    """(scale multiplying a marginal draw, Gaussian variance) of the selected component."""
    if law.field == "real":
        if component not in ("value", "re"):
            raise ValueError("a real law has only the 'value' component")
        return law.coefficient, law.gaussian_variance
    if component not in ("re", "im"):
        raise ValueError("a complex law has components 're' and 'im'")
    return law.coefficient / sqrt(2.0), 0.5 * law.gaussian_variance


def law_cdf_detailed(law: EntryFluctuationLaw, t, component: str = "value", seed=0) -> CDFResult:
    """CDF of one real component of the law, with the evaluation method recorded.

    Methods: exact enumeration for lattice marginals, 64-node Gauss-Hermite for
    a Gaussian marginal, fixed high-order quadrature against the density for
    the uniform and centred-exponential marginals, Monte Carlo otherwise.
    """
    scale, v = _component_parts(law, component)
    d = law.entry_marginal
    t = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t).ravel()

    if v == 0.0 or scale == 0.0:
        if scale == 0.0:
            if v == 0.0:
                out = (flat >= 0).astype(float)
            else:
                out = special.ndtr(flat / sqrt(v))
            return CDFResult(out.reshape(t.shape), "closed_form")
        if scale > 0:
            out = d.cdf(flat / scale)
        else:
            # P(scale * w <= t) = P(w >= t/scale) = 1 - P(w < t/scale)
            out = 1.0 - _cdf_left(d, flat / scale)
        return CDFResult(np.asarray(out, dtype=float).reshape(t.shape), "entry_law")

    sd = sqrt(v)
    support = d.discrete_support()
    if support is not None:
        vals, probs = support
        nodes, weights, method = vals, probs, "enumeration"
    elif d.name == "gaussian":
        x, w = special.roots_hermitenorm(GH_NODES)
        nodes, weights, method = d.scale * x, w / sqrt(2 * np.pi), "gauss_hermite"
    elif d.name == "uniform":
        x, w = np.polynomial.legendre.leggauss(400)
        c = sqrt(3.0) * d.scale
        nodes, weights, method = c * x, 0.5 * w, "gauss_legendre"
    elif d.name == "exponential":
        x, w = special.roots_laguerre(200)
        nodes, weights, method = d.scale * (x - 1.0), w, "gauss_laguerre"
    else:
        draws = d.sample(as_rng(seed), MC_DRAWS)
        mean = np.empty(flat.shape)
        stderr = 0.0
        for i, s in enumerate(flat):
            vals = special.ndtr((s - scale * draws) / sd)
            mean[i] = vals.mean()
            stderr = max(stderr, float(vals.std()) / sqrt(draws.size))
        return CDFResult(mean.reshape(t.shape), "monte_carlo", stderr)

    out = np.empty(flat.shape)
    for s in range(0, flat.size, 2048):
        blk = flat[s:s + 2048]
        out[s:s + 2048] = special.ndtr((blk[:, None] - scale * nodes[None, :]) / sd) @ weights
    return CDFResult(out.reshape(t.shape), method)


def _cdf_left(d: MarginalDistribution, x):
    """``P(w < x)``: differs from the CDF only at atoms."""
    support = d.discrete_support()
    if support is None:
        return d.cdf(x)
    vals, probs = support
    x = np.asarray(x, dtype=float)
    return np.sum(probs * (x[..., None] > vals), axis=-1)


def law_cdf(law: EntryFluctuationLaw, t, component: str = "value"):
    out = law_cdf_detailed(law, t, component).value
    return float(out) if np.ndim(out) == 0 else out


def law_sample(law: EntryFluctuationLaw, seed, size=None):
    """Draws of ``a * w + G``; complex for a complex law."""
    rng = as_rng(seed)
    n = 1 if size is None else size
    d = law.entry_marginal
    if law.field == "real":
        out = law.coefficient * d.sample(rng, n) + sqrt(law.gaussian_variance) * rng.standard_normal(n)
    else:
        w = (d.sample(rng, n) + 1j * d.sample(rng, n)) / sqrt(2.0)
        s = sqrt(0.5 * law.gaussian_variance)
        out = law.coefficient * w + s * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    if size is None:
        return out[0].item()
    return out


# --------------------------------------------------------------------------
# Resolvent field
# --------------------------------------------------------------------------

def _re_im(v, part):
    return np.real(v) if part == "Re" else np.imag(v)


def y_cov(z, w, sigma: float, kappa4: float, symmetry: str, entry: str, pair: str) -> float:
    """``Cov(A Y_ij(z), B Y_ij(w))`` for ``pair = "AB"`` with ``A, B`` in ``{Re, Im}``."""
    if pair not in PAIRS:
        raise ValueError(f"pair must be one of {PAIRS}")
    if pair == "ImRe":
        return y_cov(w, z, sigma, kappa4, symmetry, entry, "ReIm")
    _check_off_cut(z, sigma)
    _check_off_cut(w, sigma)
    s4 = sigma ** 4
    kern = {"ReRe": phi_pp, "ImIm": phi_mm, "ReIm": phi_pm}[pair]
    if entry == "diag":
        gz, gw = stieltjes_g(z, sigma), stieltjes_g(w, sigma)
        weight = 2.0 * s4 if symmetry == "real_symmetric" else s4
        return float(kappa4 * _re_im(gz, pair[:2]) * _re_im(gw, pair[2:]) + weight * kern(z, w, sigma))
    if entry != "offdiag":
        raise ValueError("entry must be 'diag' or 'offdiag'")
    if symmetry == "real_symmetric":
        return float(s4 * kern(z, w, sigma))
    if pair == "ReIm":
        return float(0.5 * s4 * (phi_pm(z, w, sigma) - phi_pm(w, z, sigma)))
    return float(0.5 * s4 * (phi_pp(z, w, sigma) + phi_mm(z, w, sigma)))


def _entry_cov(spec: EnsembleSpec, entry: str) -> np.ndarray:
    """2x2 covariance of ``(Re W_ij, Im W_ij)``."""
    if entry == "diag":
        return np.array([[spec.diag_variance, 0.0], [0.0, 0.0]])
    s2 = spec.sigma ** 2
    if spec.hermitian:
        return np.diag([0.5 * s2, 0.5 * s2])
    return np.array([[s2, 0.0], [0.0, 0.0]])


def _y_block(z, w, spec: EnsembleSpec, entry: str) -> np.ndarray:
    C = np.empty((2, 2))
    for a, A in enumerate(("Re", "Im")):
        for b, B in enumerate(("Re", "Im")):
            C[a, b] = y_cov(z, w, spec.sigma, spec.kappa4, spec.symmetry, entry, A + B)
    return C


def _mult_matrix(c: complex) -> np.ndarray:
    # (Re, Im) of c * v as a linear map of (Re v, Im v)
    return np.array([[c.real, -c.imag], [c.imag, c.real]])


def upsilon_cov(z, w, spec: EnsembleSpec, entry: str, pair: str) -> float:
    """Covariance of the limit of ``sqrt(N)(R_ij - g delta_ij)`` at ``z`` and ``w``."""
    i, j = ("Re", "Im").index(pair[:2]), ("Re", "Im").index(pair[2:])
    return float(_upsilon_block(z, w, spec, entry)[i, j])


def _upsilon_block(z, w, spec, entry):
    sigma = spec.sigma
    Cv = _entry_cov(spec, entry) + _y_block(z, w, spec, entry)
    Lz = _mult_matrix(complex(stieltjes_g(z, sigma)) ** 2)
    Lw = _mult_matrix(complex(stieltjes_g(w, sigma)) ** 2)
    return Lz @ Cv @ Lw.T


def predict_resolvent_cov(z, w, spec: EnsembleSpec, entry: str, pair: str, field: str = "Y") -> float:
    """Covariance of ``Y`` (``field="Y"``) or ``Upsilon`` (``field="upsilon"``) components."""
    if field == "Y":
        return y_cov(z, w, spec.sigma, spec.kappa4, spec.symmetry, entry, pair)
    if field == "upsilon":
        return upsilon_cov(z, w, spec, entry, pair)
    raise ValueError("field must be 'Y' or 'upsilon'")


@dataclass(frozen=True)
class ResolventFieldLaw:
    """Gaussian field law at finitely many spectral points for one entry class.

    Distinct index pairs are independent, so :meth:`cross_index_cov` is zero.
    """

    points: tuple
    spec: EnsembleSpec
    entry: str = "diag"

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(complex(p) for p in self.points))
        for p in self.points:
            _check_off_cut(p, self.spec.sigma)

    def cov(self, i: int, j: int, pair: str, field: str = "Y") -> float:
        return predict_resolvent_cov(self.points[i], self.points[j], self.spec, self.entry, pair, field)

    def covariance_matrix(self, field: str = "Y") -> np.ndarray:
        """Covariance of ``(Re F(z_1), Im F(z_1), ..., Re F(z_k), Im F(z_k))``."""
        k = len(self.points)
        C = np.empty((2 * k, 2 * k))
        for a in range(k):
            for b in range(k):
                za, zb = self.points[a], self.points[b]
                if field == "Y":
                    blk = _y_block(za, zb, self.spec, self.entry)
                else:
                    blk = _upsilon_block(za, zb, self.spec, self.entry)
                C[2 * a:2 * a + 2, 2 * b:2 * b + 2] = blk
        return C

    def min_eigenvalue(self, field: str = "Y") -> float:
        C = self.covariance_matrix(field)
        return float(np.min(np.linalg.eigvalsh(0.5 * (C + C.T))))

    @staticmethod
    def cross_index_cov(*_args) -> float:
        return 0.0

    def to_dict(self) -> dict:
        return {"points": [[p.real, p.imag] for p in self.points], "entry": self.entry,
                "ensemble": self.spec.to_dict(), "covariance_Y": self.covariance_matrix("Y").tolist(),
                "covariance_upsilon": self.covariance_matrix("upsilon").tolist()}


def consistency_resolvent_vs_entry(z: float, spec: EnsembleSpec, tol: float = 1e-9,
                                   q: QuadratureRule | None = None) -> dict:
    """Compare the entry-law functionals of ``f_z(x) = 1/(z - x)`` with resolvent closed forms."""
    sigma = spec.sigma
    z = float(z)
    _check_off_cut(z, sigma)
    g = stieltjes_g(z, sigma).real
    gp = stieltjes_g_prime(z, sigma).real
    f = fn.resolvent_function(z, sigma)
    s4 = sigma ** 4
    k4 = spec.kappa4
    a = fn.alpha(f, sigma, q) / sigma
    d2 = fn.d2(f, sigma, q)
    rows = {
        "coefficient": (a, g * g),
        "d2": (d2, -s4 * g ** 4 * gp),
    }
    if spec.hermitian:
        rows["v2sq"] = (fn.v2sq(f, k4, sigma, q), k4 * g ** 6 - s4 * g ** 4 * gp)
    else:
        rows["v1sq"] = (fn.v1sq(f, k4, sigma, q), k4 * g ** 6 - 2 * s4 * g ** 4 * gp)
    report = {k: {"entry_law": v[0], "resolvent": v[1], "residual": abs(v[0] - v[1])} for k, v in rows.items()}
    worst = max(r["residual"] for r in report.values())
    return {"z": z, "kappa4": k4, "checks": report, "max_residual": worst, "ok": worst <= tol}
