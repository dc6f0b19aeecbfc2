"""Random sesquilinear forms and the cumulant (decoupling) expansion.

Sesquilinear forms
------------------
For i.i.d. unit-variance vectors ``u_1, ..., u_m`` in R^N or C^N and
deterministic matrices ``M^(p,q)`` (with ``M^(q,p) = M^(p,q)*``) the matrix

    g_pq = N^{-1/2} (<u_p, M^(p,q) u_q> - delta_pq Tr M^(p,p))

is asymptotically Gaussian with independent entries (``p <= q``) and

* real:    ``Var g_ss = 2 s2_ss + kappa4 gamma_s``, ``Var g_pq = s2_pq``;
* complex: ``E|g_ss|^2 = s2_ss + kappa4 gamma_s / 2``, ``E|g_pq|^2 = s2_pq``,

where ``s2_pq = tr_N(M^(p,q) M^(q,p))``, ``gamma_s = N^{-1} sum_i |M^(s,s)_ii|^2``
and ``kappa4`` is the fourth cumulant of a real coordinate (complex
coordinates are ``(a + i b)/sqrt(2)`` with ``a, b`` of that law).

Decoupling
----------
``E xi phi(xi) = sum_{a=0}^{p} kappa_{a+1}/a! E phi^(a)(xi) + eps`` with
``|eps| <= C_p sup|phi^(p+1)| E|xi|^(p+2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import partial
from math import factorial, sqrt

import numpy as np
import scipy.sparse as sp
from scipy import integrate, special

from .ensembles import MarginalDistribution, replica_rng, sample_iid_vector
from .functionals import TestFunction
from .parallel import replica_map
from .stats import correlation, ks_statistic, ks_threshold, mean_estimate, variance_estimate

__all__ = [
    "QuadraticFormSpec",
    "quadratic_form_stat",
    "qf_sample",
    "QFReport",
    "qf_clt_experiment",
    "decoupling_constant",
    "DecouplingReport",
    "decoupling_check",
]


def _as_operator(M):
    if sp.issparse(M):
        return M.tocsr()
    M = np.asarray(M)
    if M.ndim not in (1, 2):
        raise ValueError("M must be a vector (diagonal) or a matrix")
    return M


def _dim(M) -> int:
    return M.shape[0]


def _apply(M, v):
    if sp.issparse(M):
        return M @ v
    if M.ndim == 1:
        return M * v
    return M @ v


def _trace(M) -> complex:
    if sp.issparse(M):
        return complex(M.diagonal().sum())
    return complex(M.sum() if M.ndim == 1 else np.trace(M))


def _diag(M):
    if sp.issparse(M):
        return M.diagonal()
    return M if M.ndim == 1 else np.diag(M)


def _adjoint(M):
    if sp.issparse(M):
        return M.conj().T.tocsr()
    return np.conj(M) if M.ndim == 1 else M.conj().T


def _tr_n_product(A, B) -> complex:
    """``N^{-1} Tr(A B)``."""
    n = _dim(A)
    if sp.issparse(A) or sp.issparse(B):
        A_ = sp.diags(A) if not sp.issparse(A) and A.ndim == 1 else sp.csr_matrix(A)
        B_ = sp.diags(B) if not sp.issparse(B) and B.ndim == 1 else sp.csr_matrix(B)
        return complex(A_.multiply(B_.T).sum()) / n
    if A.ndim == 1 and B.ndim == 1:
        return complex(np.sum(A * B)) / n
    A_ = np.diag(A) if A.ndim == 1 else A
    B_ = np.diag(B) if B.ndim == 1 else B
    return complex(np.sum(A_ * B_.T)) / n


def quadratic_form_stat(u_p, u_q, M, same: bool):
    """``N^{-1/2}(<u_p, M u_q> - delta Tr M)``; conjugate-linear in ``u_p``.

    ``M`` may be dense, a 1-D array holding a diagonal, or a scipy sparse
    matrix.  Returns a real number for real inputs.
    """
    M = _as_operator(M)
    u_p = np.asarray(u_p)
    u_q = np.asarray(u_q)
    n = u_p.shape[0]
    if u_q.shape[0] != n or _dim(M) != n or (M.ndim == 2 and M.shape[1] != n):
        raise ValueError(f"dimension mismatch: u_p {u_p.shape}, u_q {u_q.shape}, M {M.shape}")
    val = np.vdot(u_p, _apply(M, u_q))
    if same:
        val = val - _trace(M)
    val = val / sqrt(n)
    if np.isrealobj(u_p) and np.isrealobj(u_q) and np.isrealobj(M if not sp.issparse(M) else M.data):
        return float(np.real(val))
    return complex(val)


@dataclass
class QuadraticFormSpec:
    """Blocks ``M^(s,t)`` for ``1 <= s <= t <= m`` (0-based keys); lower blocks are adjoints.

    ``field`` is ``"real"`` or ``"complex"``.
    """

    blocks: dict
    m: int
    field: str = "real"
    _sigma2: dict = dc_field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.field not in ("real", "complex"):
            raise ValueError("field must be 'real' or 'complex'")
        blocks = {}
        for (s, t), M in self.blocks.items():
            if not (0 <= s < self.m and 0 <= t < self.m):
                raise ValueError(f"block index ({s}, {t}) outside 0..{self.m - 1}")
            blocks[(s, t)] = _as_operator(M)
        for s in range(self.m):
            if (s, s) not in blocks:
                raise ValueError(f"missing diagonal block ({s}, {s})")
        for (s, t) in list(blocks):
            if (t, s) not in blocks:
                blocks[(t, s)] = _adjoint(blocks[(s, t)])
        self.blocks = blocks
        dims = {_dim(M) for M in blocks.values()}
        if len(dims) != 1:
            raise ValueError("all blocks must share the dimension N")

    @property
    def n(self) -> int:
        return _dim(self.blocks[(0, 0)])

    @classmethod
    def identity(cls, n: int, m: int = 1, field: str = "real") -> "QuadraticFormSpec":
        return cls({(s, s): np.ones(n) for s in range(m)}, m, field)

    def sigma2(self, s: int, t: int) -> float:
        """``tr_N(M^(s,t) M^(t,s))``."""
        key = (s, t)
        if key not in self._sigma2:
            self._sigma2[key] = _tr_n_product(self.blocks[(s, t)], self.blocks[(t, s)]).real
        return self._sigma2[key]

    def gamma(self, s: int) -> float:
        d = _diag(self.blocks[(s, s)])
        return float(np.sum(np.abs(d) ** 2) / self.n)

    def predicted_variance(self, s: int, t: int, kappa4: float) -> float:
        """``Var g_st`` (real) or ``E|g_st|^2`` (complex) in the limit."""
        if s != t:
            if (s, t) not in self.blocks:
                return 0.0
            return self.sigma2(s, t)
        if self.field == "real":
            return 2.0 * self.sigma2(s, s) + kappa4 * self.gamma(s)
        return self.sigma2(s, s) + 0.5 * kappa4 * self.gamma(s)


def qf_sample(spec: QuadraticFormSpec, marginal: MarginalDistribution, master_seed: int, index: int) -> np.ndarray:
    """One replica of the ``m x m`` matrix ``(g_pq)``; unset blocks give zero."""
    rng = replica_rng(master_seed, index, "qf")
    us = [sample_iid_vector(marginal, spec.n, rng, spec.field) for _ in range(spec.m)]
    G = np.zeros((spec.m, spec.m), dtype=complex if spec.field == "complex" else float)
    for (s, t), M in spec.blocks.items():
        G[s, t] = quadratic_form_stat(us[s], us[t], M, s == t)
    return G


@dataclass
class QFReport:
    field: str
    n: int
    replicas: int
    kappa4: float
    entries: list
    correlations: list
    passed: bool

    def to_dict(self) -> dict:
        return {"field": self.field, "n": self.n, "replicas": self.replicas, "kappa4": self.kappa4,
                "entries": self.entries, "correlations": self.correlations, "passed": self.passed}


def qf_clt_experiment(spec: QuadraticFormSpec, marginal: MarginalDistribution, replicas: int, seed: int,
                      workers: int = 1, var_rtol: float = 0.10, samples: np.ndarray | None = None) -> QFReport:
    """Compare replicas of ``(g_pq)`` against the Gaussian limit.

    Per diagonal entry: variance (within ``var_rtol``), KS distance to the
    predicted normal law; per off-diagonal entry: variance; across distinct
    index pairs: correlations, expected below ``3/sqrt(replicas)``.
    """
    if samples is None:
        samples = np.array(replica_map(partial(qf_sample, spec, marginal, seed), range(replicas), workers))
    kappa4 = marginal.cumulant(4) / marginal.variance ** 2
    entries, series = [], {}
    passed = True
    for s in range(spec.m):
        for t in range(s, spec.m):
            if (s, t) not in spec.blocks:
                continue
            vals = samples[:, s, t]
            pred = spec.predicted_variance(s, t, kappa4)
            comps = [("value", np.real(vals), pred)] if spec.field == "real" else \
                [("re", vals.real, pred / 2), ("im", vals.imag, pred / 2)]
            if spec.field == "complex" and s == t:
                comps = [("value", vals.real, pred)]  # g_ss is real for Hermitian M^(s,s)
            for comp, x, pv in comps:
                v = variance_estimate(x)
                row = {"entry": [s, t], "component": comp, "variance": v.estimate, "stderr": v.stderr,
                       "predicted": pv, "zscore": v.zscore(pv), "mean": mean_estimate(x).estimate}
                row["variance_ok"] = bool(abs(v.estimate - pv) <= var_rtol * pv) if pv > 0 else \
                    bool(np.max(np.abs(x)) <= 1e-9)
                if pv > 0:
                    row["ks"] = ks_statistic(x, lambda q, sd=sqrt(pv): special.ndtr(q / sd))
                    row["ks_threshold"] = ks_threshold(len(x))
                    row["ks_ok"] = bool(row["ks"] <= row["ks_threshold"])
                passed &= row["variance_ok"] and row.get("ks_ok", True)
                entries.append(row)
                series[(s, t, comp)] = x
    corrs = []
    keys = list(series)
    bound = 3.0 / sqrt(replicas)
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            if keys[i][:2] == keys[j][:2]:
                continue
            a, b = series[keys[i]], series[keys[j]]
            if np.std(a) == 0 or np.std(b) == 0:
                continue
            c = correlation(a, b)
            corrs.append({"a": list(keys[i]), "b": list(keys[j]), "corr": c, "bound": bound, "ok": abs(c) <= bound})
            passed &= abs(c) <= bound
    return QFReport(spec.field, spec.n, replicas, kappa4, entries, corrs, bool(passed))


# --------------------------------------------------------------------------
# Decoupling
# --------------------------------------------------------------------------

def decoupling_constant(p: int) -> float:
    """Explicit ``C_p`` with ``|eps| <= C_p sup|phi^(p+1)| E|xi|^(p+2)``.

    From the Taylor remainders of ``xi phi(xi)`` and of ``phi^(a)`` combined
    with ``|kappa_a| <= (2a)^a E|xi|^a``-type cumulant bounds; deliberately
    generous, it only has to hold.
    """
    return (1.0 + (3.0 + 2.0 * p) ** (p + 2)) / factorial(p + 1)


@dataclass
class DecouplingReport:
    p_order: int
    method: str
    lhs: float
    expansion: float
    residual: float
    stderr: float
    bound: float
    sup_derivative: float
    abs_moment: float
    constant: float
    terms: list = dc_field(default_factory=list)

    @property
    def fitted_constant(self) -> float:
        """``|residual| / (sup|phi^(p+1)| E|xi|^(p+2))``: the constant the data require."""
        denom = self.sup_derivative * self.abs_moment
        return abs(self.residual) / denom if denom > 0 else 0.0

    @property
    def passed(self) -> bool:
        return abs(self.residual) <= 5.0 * self.stderr + self.bound

    def to_dict(self) -> dict:
        return {"p_order": self.p_order, "method": self.method, "lhs": self.lhs, "expansion": self.expansion,
                "residual": self.residual, "stderr": self.stderr, "bound": self.bound,
                "sup_derivative": self.sup_derivative, "abs_moment": self.abs_moment,
                "constant": self.constant, "fitted_constant": self.fitted_constant,
                "terms": self.terms, "passed": self.passed}


def _exact_expectation(d: MarginalDistribution, h):
    """``E h(xi)`` by enumeration or quadrature against the density, or ``None``."""
    support = d.discrete_support()
    if support is not None:
        vals, probs = support
        return float(np.dot(probs, h(vals))), "enumeration"
    s = d.scale
    if d.name == "uniform":
        c = sqrt(3.0) * s
        return integrate.quad(lambda x: h(np.array(x)) / (2 * c), -c, c, limit=200)[0], "quadrature"
    if d.name == "gaussian":
        dens = lambda x: np.exp(-0.5 * (x / s) ** 2) / (s * sqrt(2 * np.pi))
        return integrate.quad(lambda x: h(np.array(x)) * dens(x), -np.inf, np.inf, limit=200)[0], "quadrature"
    if d.name == "exponential":
        dens = lambda x: np.exp(-(x / s + 1.0)) / s
        return integrate.quad(lambda x: h(np.array(x)) * dens(x), -s, np.inf, limit=200)[0], "quadrature"
    return None, None


def _sup_range(d: MarginalDistribution):
    support = d.discrete_support()
    if support is not None:
        v = np.abs(support[0]).max()
        return -v, v
    s = d.scale
    if d.name == "uniform":
        return -sqrt(3.0) * s, sqrt(3.0) * s
    if d.name == "exponential":
        return -s, 40.0 * s
    return -12.0 * s, 12.0 * s


def decoupling_check(marginal: MarginalDistribution, phi: TestFunction, p_order: int = 1,
                     sample_count: int = 0, seed: int = 0, method: str = "auto") -> DecouplingReport:
    """Residual of the order-``p`` cumulant expansion of ``E xi phi(xi)``.

    ``method="exact"`` (or ``"auto"`` with ``sample_count == 0``) evaluates
    every expectation by enumeration/quadrature; ``"mc"`` uses
    ``sample_count`` draws, and the residual is the mean of the per-draw
    difference ``xi phi(xi) - sum_a kappa_{a+1}/a! phi^(a)(xi)`` with its
    standard error.  ``sup|phi^(p+1)|`` is taken over the support of the
    marginal (``+-12`` standard deviations for a Gaussian).
    """
    if not 0 <= p_order <= 3:
        raise ValueError("p_order must be between 0 and 3")
    if phi.max_order < p_order + 1:
        raise ValueError(f"{phi.name} lacks derivative {p_order + 1}")
    kappas = [0.0] + [marginal.cumulant(k) for k in range(1, p_order + 2)]

    def integrand(x):
        return x * phi(x)

    def expansion(x):
        tot = 0.0
        for a in range(p_order + 1):
            tot = tot + kappas[a + 1] / factorial(a) * phi.derivative(a, x)
        return tot

    use_mc = method == "mc" or (method == "auto" and sample_count > 0)
    terms = []
    if use_mc:
        rng = replica_rng(seed, 0, "decoupling")
        xi = marginal.sample(rng, int(sample_count))
        lhs_v = integrand(xi)
        rhs_v = expansion(xi)
        diff = mean_estimate(lhs_v - rhs_v)
        lhs, rhs, residual, stderr, used = float(lhs_v.mean()), float(rhs_v.mean()), diff.estimate, diff.stderr, "mc"
        for a in range(p_order + 1):
            terms.append({"a": a, "kappa": kappas[a + 1], "E_derivative": float(np.mean(phi.derivative(a, xi)))})
    else:
        lhs, used = _exact_expectation(marginal, integrand)
        if lhs is None:
            raise ValueError(f"no exact expectation for marginal {marginal.name!r}; use method='mc'")
        rhs = 0.0
        for a in range(p_order + 1):
            e = _exact_expectation(marginal, lambda x, a=a: phi.derivative(a, x))[0]
            terms.append({"a": a, "kappa": kappas[a + 1], "E_derivative": e})
            rhs += kappas[a + 1] / factorial(a) * e
        residual, stderr = lhs - rhs, 0.0
    lo, hi = _sup_range(marginal)
    grid = np.linspace(lo, hi, 20001)
    sup = float(np.max(np.abs(phi.derivative(p_order + 1, grid))))
    moment = marginal.abs_moment(p_order + 2)
    C = decoupling_constant(p_order)
    return DecouplingReport(p_order, used, float(lhs), float(rhs), float(residual), float(stderr),
                            C * sup * moment, sup, moment, C, terms)
