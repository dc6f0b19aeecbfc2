"""Marginal laws, Wigner samplers and reproducible random streams.

Conventions
-----------
* ``EnsembleSpec.offdiag`` is the law ``mu`` of an off-diagonal entry in the real
  symmetric case, and the common law of ``sqrt(2) Re W_jk`` and
  ``sqrt(2) Im W_jk`` in the Hermitian case.  Either way ``E|W_jk|^2 = sigma^2``.
* ``EnsembleSpec.diag`` is the law of ``W_ii`` itself.  (The law of
  ``W_11 / sqrt(2)`` is what some texts call ``mu_1``; a GOE then has diagonal
  variance ``2 sigma^2`` here.)
* Matrices are returned already scaled, ``X = W / sqrt(n)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from math import gamma, sqrt

import numpy as np
from scipy import integrate, special

from .semicircle import SpectralParams

__all__ = [
    "ContractError",
    "MarginalDistribution",
    "gaussian",
    "rademacher",
    "uniform",
    "shifted_exponential",
    "three_point",
    "marginal_from_dict",
    "EnsembleSpec",
    "goe",
    "gue",
    "SeedDerivation",
    "derive_seed",
    "replica_rng",
    "as_rng",
    "WignerSample",
    "sample_wigner",
    "cumulants",
    "sample_iid_vector",
]


class ContractError(ValueError):
    """An input violates a documented precondition."""


# standardized (unit variance) raw moments m_0..m_6
_STD_MOMENTS = {
    "gaussian": (1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0),
    "rademacher": (1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0),
    "uniform": (1.0, 0.0, 1.0, 0.0, 9.0 / 5.0, 0.0, 27.0 / 7.0),
    "exponential": (1.0, 0.0, 1.0, 2.0, 9.0, 44.0, 265.0),
}


@dataclass(frozen=True)
class MarginalDistribution:
    """A centred law on the real line, scaled to standard deviation ``scale``.

    ``name`` is one of ``gaussian``, ``rademacher``, ``uniform`` (centred,
    symmetric), ``exponential`` (``Exp(1) - 1``, skewed) and ``three_point``
    (``0`` or ``+-a``; ``kappa4_std`` tunes its standardized fourth cumulant
    anywhere in ``[-2, inf)``).
    """

    name: str
    scale: float = 1.0
    kappa4_std: float | None = None

    def __post_init__(self):
        if self.name not in (*_STD_MOMENTS, "three_point"):
            raise ValueError(f"unknown marginal {self.name!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.name == "three_point":
            if self.kappa4_std is None or self.kappa4_std < -2.0:
                raise ValueError("three_point needs kappa4_std >= -2")

    # -- moments ---------------------------------------------------------
    @property
    def _p(self) -> float:
        # P(W != 0) for the three-point law; kappa4_std = 1/p - 3
        return 1.0 / (3.0 + self.kappa4_std)

    def _std_moment(self, k: int) -> float:
        if self.name == "three_point":
            if k == 0:
                return 1.0
            return 0.0 if k % 2 else self._p ** (1 - k // 2)
        return _STD_MOMENTS[self.name][k]

    @property
    def variance(self) -> float:
        return self.scale ** 2

    def moment(self, k: int) -> float:
        if not 0 <= k <= 6:
            raise ValueError("moments are declared up to order 6")
        return self._std_moment(k) * self.scale ** k

    def cumulant(self, k: int) -> float:
        m = [self.moment(j) for j in range(5)]
        if k == 1:
            return 0.0
        if k == 2:
            return m[2]
        if k == 3:
            return m[3]
        if k == 4:
            return m[4] - 3.0 * m[2] ** 2
        raise ValueError("cumulants are declared up to order 4")

    def abs_moment(self, k: float) -> float:
        """``E|W|^k``."""
        s = self.scale ** k
        if self.name == "gaussian":
            return s * 2.0 ** (k / 2) * gamma((k + 1) / 2) / sqrt(np.pi)
        if self.name == "rademacher":
            return s
        if self.name == "uniform":
            return s * sqrt(3.0) ** k / (k + 1)
        if self.name == "three_point":
            return s * self._p * (1.0 / sqrt(self._p)) ** k
        val = integrate.quad(lambda x: abs(x - 1.0) ** k * np.exp(-x), 0, 1)[0]
        val += integrate.quad(lambda x: abs(x - 1.0) ** k * np.exp(-x), 1, np.inf)[0]
        return s * val

    @property
    def symmetric(self) -> bool:
        return self.name != "exponential"

    # -- sampling --------------------------------------------------------
    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        s = self.scale
        if self.name == "gaussian":
            return rng.standard_normal(size) * s
        if self.name == "rademacher":
            return (2.0 * rng.integers(0, 2, size=size, dtype=np.int8) - 1.0) * s
        if self.name == "uniform":
            c = sqrt(3.0) * s
            return rng.uniform(-c, c, size)
        if self.name == "exponential":
            return (rng.standard_exponential(size) - 1.0) * s
        p = self._p
        a = s / sqrt(p)
        u = rng.random(size)
        return np.where(u < 0.5 * p, a, np.where(u < p, -a, 0.0))

    # -- distribution function -------------------------------------------
    def discrete_support(self):
        """``(values, probabilities)`` for lattice laws, else ``None``."""
        s = self.scale
        if self.name == "rademacher":
            return np.array([-s, s]), np.array([0.5, 0.5])
        if self.name == "three_point":
            p = self._p
            a = s / sqrt(p)
            if p >= 1.0:
                return np.array([-a, a]), np.array([0.5, 0.5])
            return np.array([-a, 0.0, a]), np.array([0.5 * p, 1.0 - p, 0.5 * p])
        return None

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        s = self.scale
        if self.name == "gaussian":
            return special.ndtr(t / s)
        if self.name == "uniform":
            c = sqrt(3.0) * s
            return np.clip((t + c) / (2 * c), 0.0, 1.0)
        if self.name == "exponential":
            y = t / s + 1.0
            return np.where(y > 0, -np.expm1(-np.maximum(y, 0.0)), 0.0)
        vals, probs = self.discrete_support()
        return np.sum(probs * (t[..., None] >= vals), axis=-1)

    def to_dict(self) -> dict:
        out = {"name": self.name, "scale": self.scale}
        if self.kappa4_std is not None:
            out["kappa4_std"] = self.kappa4_std
        return out


def gaussian(variance: float = 1.0) -> MarginalDistribution:
    return MarginalDistribution("gaussian", sqrt(variance))


def rademacher(variance: float = 1.0) -> MarginalDistribution:
    return MarginalDistribution("rademacher", sqrt(variance))


def uniform(variance: float = 1.0) -> MarginalDistribution:
    return MarginalDistribution("uniform", sqrt(variance))


def shifted_exponential(variance: float = 1.0) -> MarginalDistribution:
    return MarginalDistribution("exponential", sqrt(variance))


def three_point(kappa4_std: float, variance: float = 1.0) -> MarginalDistribution:
    return MarginalDistribution("three_point", sqrt(variance), float(kappa4_std))


def marginal_from_dict(d) -> MarginalDistribution:
    """Accepts ``"gaussian"`` or ``{"name": ..., "variance": ..., "kappa4_std": ...}``."""
    if isinstance(d, MarginalDistribution):
        return d
    if isinstance(d, str):
        d = {"name": d}
    d = dict(d)
    name = d.pop("name")
    if "variance" in d:
        scale = sqrt(float(d.pop("variance")))
    else:
        scale = float(d.pop("scale", 1.0))
    k4 = d.pop("kappa4_std", None)
    if d:
        raise KeyError(f"unexpected marginal fields {sorted(d)}")
    return MarginalDistribution(name, scale, None if k4 is None else float(k4))


def cumulants(d: MarginalDistribution) -> tuple[float, float, float]:
    """``(kappa2, kappa3, kappa4)`` of a centred marginal."""
    return d.cumulant(2), d.cumulant(3), d.cumulant(4)


@dataclass(frozen=True)
class EnsembleSpec:
    symmetry: str
    offdiag: MarginalDistribution
    diag: MarginalDistribution

    def __post_init__(self):
        if self.symmetry not in ("real_symmetric", "hermitian"):
            raise ValueError("symmetry must be 'real_symmetric' or 'hermitian'")

    @property
    def hermitian(self) -> bool:
        return self.symmetry == "hermitian"

    @property
    def sigma(self) -> float:
        return self.offdiag.scale

    @property
    def params(self) -> SpectralParams:
        return SpectralParams(self.sigma)

    @property
    def diag_variance(self) -> float:
        return self.diag.variance

    @property
    def offdiag_abs_m4(self) -> float:
        """``E|W_12|^4``."""
        if self.hermitian:
            m4, s2 = self.offdiag.moment(4), self.offdiag.variance
            return 0.5 * (m4 + s2 * s2)
        return self.offdiag.moment(4)

    @property
    def kappa4(self) -> float:
        """Fourth cumulant in the convention of the symmetry class."""
        s4 = self.sigma ** 4
        if self.hermitian:
            return self.offdiag_abs_m4 - 2.0 * s4
        return self.offdiag.moment(4) - 3.0 * s4

    def to_dict(self) -> dict:
        return {"symmetry": self.symmetry, "offdiag": self.offdiag.to_dict(), "diag": self.diag.to_dict()}

    @classmethod
    def from_dict(cls, d) -> "EnsembleSpec":
        if isinstance(d, cls):
            return d
        if isinstance(d, str):
            presets = {"goe": goe, "gue": gue}
            return presets[d.lower()]()
        d = dict(d)
        preset = d.pop("preset", None)
        if preset:
            base = EnsembleSpec.from_dict(preset)
            return cls(d.get("symmetry", base.symmetry),
                       marginal_from_dict(d["offdiag"]) if "offdiag" in d else base.offdiag,
                       marginal_from_dict(d["diag"]) if "diag" in d else base.diag)
        return cls(d.get("symmetry", "real_symmetric"), marginal_from_dict(d["offdiag"]),
                   marginal_from_dict(d["diag"]))


def goe(sigma: float = 1.0) -> EnsembleSpec:
    return EnsembleSpec("real_symmetric", gaussian(sigma ** 2), gaussian(2.0 * sigma ** 2))


def gue(sigma: float = 1.0) -> EnsembleSpec:
    return EnsembleSpec("hermitian", gaussian(sigma ** 2), gaussian(sigma ** 2))


# --------------------------------------------------------------------------
# Seeds
# --------------------------------------------------------------------------

def derive_seed(master_seed: int, replica_index: int, stream_label: str = "") -> int:
    """Stable 64-bit seed for one replica stream; independent of execution order."""
    h = hashlib.blake2b(f"{int(master_seed)}|{int(replica_index)}|{stream_label}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def replica_rng(master_seed: int, replica_index: int, stream_label: str = "") -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, replica_index, stream_label)))


@dataclass(frozen=True)
class SeedDerivation:
    master_seed: int
    replica_index: int = 0
    stream_label: str = ""

    @property
    def seed(self) -> int:
        return derive_seed(self.master_seed, self.replica_index, self.stream_label)

    def rng(self) -> np.random.Generator:
        return replica_rng(self.master_seed, self.replica_index, self.stream_label)


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedDerivation):
        return seed.rng()
    return np.random.Generator(np.random.PCG64(seed))


# --------------------------------------------------------------------------
# Samplers
# --------------------------------------------------------------------------

@lru_cache(maxsize=4)
def _upper_indices(n: int):
    iu = np.triu_indices(n, 1)
    for a in iu:
        a.setflags(write=False)
    return iu


@dataclass
class WignerSample:
    """A sampled, already normalized Wigner matrix ``X = W / sqrt(n)``."""

    matrix: np.ndarray
    spec: EnsembleSpec
    _eig: tuple | None = field(default=None, repr=False)
    _eigvals: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def sigma(self) -> float:
        return self.spec.sigma

    def eigh(self):
        """Cached ``(eigenvalues, eigenvectors)``."""
        if self._eig is None:
            vals, vecs = np.linalg.eigh(self.matrix)
            self._eig = (vals, vecs)
            self._eigvals = vals
        return self._eig

    def eigvalsh(self) -> np.ndarray:
        if self._eigvals is None:
            self._eigvals = np.linalg.eigvalsh(self.matrix)
        return self._eigvals

    @property
    def W(self) -> np.ndarray:
        return self.matrix * np.sqrt(self.n)


def sample_wigner(spec: EnsembleSpec, n: int, seed) -> WignerSample:
    """Draw ``X = W / sqrt(n)`` with i.i.d. entries on and above the diagonal.

    Draw order (part of the reproducibility contract): upper-triangle real
    parts in row-major order, then (Hermitian only) imaginary parts, then the
    diagonal.
    """
    if n < 1:
        raise ContractError("n must be at least 1")
    rng = as_rng(seed)
    iu = _upper_indices(n)
    m = iu[0].size
    if spec.hermitian:
        re = spec.offdiag.sample(rng, m)
        im = spec.offdiag.sample(rng, m)
        W = np.zeros((n, n), dtype=complex)
        W[iu] = (re + 1j * im) / sqrt(2.0)
        W += W.conj().T
    else:
        W = np.zeros((n, n))
        W[iu] = spec.offdiag.sample(rng, m)
        W += W.T
    W[np.diag_indices(n)] = spec.diag.sample(rng, n)
    W *= 1.0 / sqrt(n)
    return WignerSample(W, spec)


def sample_iid_vector(d: MarginalDistribution, n: int, seed, field: str = "real") -> np.ndarray:
    """``n`` i.i.d. unit-variance coordinates; complex coordinates are ``(a + i b)/sqrt(2)``."""
    if abs(d.variance - 1.0) > 1e-12:
        raise ContractError(f"coordinates must have unit variance, got {d.variance}")
    rng = as_rng(seed)
    if field == "real":
        return d.sample(rng, n)
    if field == "complex":
        re = d.sample(rng, n)
        im = d.sample(rng, n)
        return (re + 1j * im) / sqrt(2.0)
    raise ValueError("field must be 'real' or 'complex'")
