"""Monte Carlo experiments confronting sampled matrices with the predicted laws.

Every runner takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` whose ``checks`` decide the CLI exit code.  Replica
``r`` of an experiment draws from the stream ``(master_seed, r, label)``, so
results do not depend on worker count or scheduling.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from functools import lru_cache
from math import sqrt

import numpy as np
import scipy.linalg as sla
from scipy import special

from .. import functionals as fn
from ..cltcore import QuadraticFormSpec, decoupling_check, qf_clt_experiment
from ..ensembles import EnsembleSpec, SeedDerivation, marginal_from_dict, sample_wigner
from ..fluctlaw import law_cdf_detailed, predict_entry_law, predict_resolvent_cov, ResolventFieldLaw, \
    consistency_resolvent_vs_entry
from ..matrixfn import AlmostAnalyticExtension, HSGrid, apply_function_entries, dbar_bound_ratio, \
    hs_reconstruct_entries, resolvent_block, schur_blocks
from ..parallel import replica_map
from ..semicircle import QuadratureRule, semicircle_expect, stieltjes_g
from ..stats import correlation, covariance_estimate, ks_statistic, ks_threshold, loglog_slope, \
    mean_estimate, skewness, variance_estimate
from .config import ExperimentConfig, parse_point
from .results import ExperimentResult, write_samples_csv

__all__ = [
    "run",
    "run_entry_mc",
    "run_resolvent_field",
    "run_schur_field",
    "run_qf_clt",
    "run_decoupling",
    "run_decay",
    "run_hs_check",
    "run_predict",
    "entry_samples",
    "field_samples",
]

VANISH_TOL = 1e-9
SEED_DERIVATION = "blake2b-64(master_seed|replica_index|label) -> PCG64"


@lru_cache(maxsize=64)
def _function_cached(key, sigma):
    return fn.make_function(json.loads(key), sigma)


def _function(spec, sigma):
    """Build (and cache) a test function from a picklable config entry."""
    if isinstance(spec, fn.TestFunction):
        return spec
    return _function_cached(json.dumps(spec, sort_keys=True), sigma)


def _new_result(cfg: ExperimentConfig, labels) -> ExperimentResult:
    return ExperimentResult(kind=cfg.kind, config=cfg.to_dict(),
                            seeds={"master_seed": cfg.master_seed, "derivation": SEED_DERIVATION,
                                   "labels": list(labels)})


def _finish(res: ExperimentResult, cfg: ExperimentConfig, t0: float) -> ExperimentResult:
    res.wall_time = time.perf_counter() - t0
    if cfg.output:
        res.save(cfg.output)
    return res


def _entry_index(m: int, entry: str):
    if entry == "diag":
        return [(i, i) for i in range(m)]
    return [(i, j) for i in range(m) for j in range(i + 1, m)]


# --------------------------------------------------------------------------
# Replica kernels (module-level so that worker processes can unpickle them)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _EntryJob:
    spec: EnsembleSpec
    f_spec: object
    n: int
    m: int
    seed: int
    label: str

    def __call__(self, idx: int) -> np.ndarray:
        X = sample_wigner(self.spec, self.n, SeedDerivation(self.seed, idx, self.label))
        return apply_function_entries(X, _function(self.f_spec, self.spec.sigma), self.m)


@dataclass(frozen=True)
class _FieldJob:
    spec: EnsembleSpec
    n: int
    m: int
    points: tuple
    seed: int
    label: str
    route: str  # "solve" (Upsilon only) or "schur" (Y and Upsilon)

    def __call__(self, idx: int) -> np.ndarray:
        X = sample_wigner(self.spec, self.n, SeedDerivation(self.seed, idx, self.label))
        out = np.zeros((len(self.points), 2, self.m, self.m), dtype=complex)
        root = sqrt(self.n)
        for a, z in enumerate(self.points):
            if self.route == "schur":
                sb = schur_blocks(X, z, self.m, self.spec.sigma)
                out[a, 0] = sb.Y
                out[a, 1] = sb.upsilon
            else:
                g = stieltjes_g(z, self.spec.sigma)
                out[a, 1] = root * (resolvent_block(X, z, self.m) - g * np.eye(self.m))
        return out


def entry_samples(cfg: ExperimentConfig, n: int, label: str | None = None) -> np.ndarray:
    """Raw ``f(X)`` top-left blocks, shape ``(replicas, block, block)``."""
    job = _EntryJob(cfg.ensemble, cfg.function, n, cfg.block, cfg.master_seed, label or f"entry:n={n}")
    return np.array(replica_map(job, range(cfg.replicas), cfg.workers))


def field_samples(cfg: ExperimentConfig, n: int, route: str, label: str | None = None) -> np.ndarray:
    """Shape ``(replicas, points, 2, block, block)``: index 0 of axis 2 is ``Y``, index 1 is ``Upsilon``."""
    job = _FieldJob(cfg.ensemble, n, cfg.block, cfg.points, cfg.master_seed, label or f"{route}:n={n}", route)
    return np.array(replica_map(job, range(cfg.replicas), cfg.workers))


# --------------------------------------------------------------------------
# Entry laws
# --------------------------------------------------------------------------

def _components(values, field):
    if field == "real":
        return [("value", np.real(values))]
    return [("re", np.real(values)), ("im", np.imag(values))]


def run_entry_mc(cfg: ExperimentConfig, samples: np.ndarray | None = None) -> ExperimentResult:
    """Fluctuations of ``sqrt(N)(f(X)_ij - centering)`` against :func:`predict_entry_law`."""
    t0 = time.perf_counter()
    n = cfg.n
    label = f"entry:n={n}"
    res = _new_result(cfg, [label])
    spec = cfg.ensemble
    f = _function(cfg.function, spec.sigma)
    if samples is None:
        samples = entry_samples(cfg, n, label)
    M = samples.shape[0]
    if cfg.centering == "empirical_mean":
        center = samples.mean(axis=0)
    elif cfg.centering == "semicircle_integral":
        center = semicircle_expect(f, spec.params) * np.eye(cfg.block)
    else:
        center = np.zeros((cfg.block, cfg.block))
    vals = sqrt(n) * (samples - center)
    thr = ks_threshold(M, cfg.ks_slack)
    series = {}
    for entry in cfg.entries:
        law = predict_entry_law(f, spec, entry)
        res.extra.setdefault("laws", {})[entry] = law.to_dict()
        field = law.field
        for (i, j) in _entry_index(cfg.block, entry):
            for comp, x in _components(vals[:, i, j], field):
                pv = law.component_variance()
                v = variance_estimate(x)
                name = f"{entry}[{i},{j}].{comp}"
                res.add_statistic(f"variance {name}", v.estimate, v.stderr, pv, skewness=skewness(x),
                                  mean=mean_estimate(x).estimate)
                res.add_check(f"variance {name}", abs(v.estimate - pv) <= cfg.var_rtol * pv,
                              estimate=v.estimate, predicted=pv, rtol=cfg.var_rtol)
                cdf = law_cdf_detailed(law, np.sort(x), comp)
                ks = ks_statistic(np.sort(x), lambda _t, c=cdf.value: c)
                res.ks.append({"name": name, "ks": ks, "threshold": thr, "method": cdf.method, "n_samples": M})
                res.add_check(f"ks {name}", ks <= thr, ks=ks, threshold=thr)
                series[(i, j, comp)] = x
    _correlation_checks(res, series, M)
    if cfg.options.get("samples_csv"):
        write_samples_csv(cfg.options["samples_csv"], vals)
    return _finish(res, cfg, t0)


def _correlation_checks(res: ExperimentResult, series: dict, M: int, prefix: str = ""):
    bound = 3.0 / sqrt(M)
    keys = list(series)
    for a in range(len(keys)):
        for b in range(a + 1, len(keys)):
            ka, kb = keys[a], keys[b]
            if ka[:-1] == kb[:-1]:
                continue  # same entry: not an independence claim
            x, y = series[ka], series[kb]
            if np.std(x) == 0 or np.std(y) == 0:
                continue
            c = correlation(x, y)
            res.add_check(f"{prefix}corr {ka} vs {kb}", abs(c) <= bound, corr=c, bound=bound)


# --------------------------------------------------------------------------
# Resolvent and Schur fields
# --------------------------------------------------------------------------

def _field_analysis(res: ExperimentResult, cfg: ExperimentConfig, data: np.ndarray, field: str):
    """Covariance, KS and independence checks for ``Y`` (``field="Y"``) or ``Upsilon``."""
    spec = cfg.ensemble
    M = data.shape[0]
    pts = cfg.points
    thr = ks_threshold(M, cfg.ks_slack)
    for entry in cfg.entries:
        idx = _entry_index(cfg.block, entry)
        if not idx:
            continue

        def pooled(a, part):
            cols = [data[:, a, i, j] for i, j in idx]
            arr = np.concatenate(cols)
            return arr.real if part == "Re" else arr.imag

        def pred(a, b, pair):
            return predict_resolvent_cov(pts[a], pts[b], spec, entry, pair, field)

        for a in range(len(pts)):
            for b in range(a, len(pts)):
                pairs = ["ReRe", "ImIm", "ReIm"] + (["ImRe"] if a != b else [])
                for pair in pairs:
                    x, y = pooled(a, pair[:2]), pooled(b, pair[2:])
                    p = pred(a, b, pair)
                    name = f"{field} {entry} cov {pair} z={_fmt(pts[a])},w={_fmt(pts[b])}"
                    if _vanishes(x) or _vanishes(y):
                        res.add_check(f"{name} (vanishing component)", abs(p) <= 1e-12, predicted=p)
                        continue
                    est = covariance_estimate(x, y)
                    res.add_statistic(name, est.estimate, est.stderr, p)
                    scale = sqrt(abs(pred(a, a, pair[:2] * 2)) * abs(pred(b, b, pair[2:] * 2)))
                    if abs(p) > 0.05 * scale:
                        ok = abs(est.estimate - p) <= cfg.field_rtol * abs(p)
                        res.add_check(name, ok, estimate=est.estimate, predicted=p, rtol=cfg.field_rtol)
                    else:
                        ok = abs(est.estimate - p) <= 3.0 * est.stderr
                        res.add_check(name, ok, estimate=est.estimate, predicted=p, stderr=est.stderr,
                                      rule="within 3 stderr")
        # per-entry KS against the predicted Gaussian marginal, and independence across entries
        for a in range(len(pts)):
            series = {}
            for i, j in idx:
                for part in ("Re", "Im"):
                    x = data[:, a, i, j]
                    x = x.real if part == "Re" else x.imag
                    v = pred(a, a, part * 2)
                    if _vanishes(x) or v <= 0:
                        continue
                    if cfg.centering == "empirical_mean":
                        x = x - x.mean()
                    name = f"{field} {entry}[{i},{j}].{part} z={_fmt(pts[a])}"
                    ks = ks_statistic(x, lambda t, s=sqrt(v): special.ndtr(t / s))
                    res.ks.append({"name": name, "ks": ks, "threshold": thr, "method": "closed_form",
                                   "n_samples": M})
                    res.add_check(f"ks {name}", ks <= thr, ks=ks, threshold=thr)
                    series[(i, j, part)] = x
            _correlation_checks(res, series, M, prefix=f"{field} z={_fmt(pts[a])} ")
    return res


def _vanishes(x) -> bool:
    # e.g. Im Y_ii at real z: zero up to round-off of a Hermitian quadratic form
    return bool(np.max(np.abs(x)) <= VANISH_TOL)


def _fmt(z: complex) -> str:
    return f"{z.real:g}" if z.imag == 0 else f"{z.real:g}{z.imag:+g}i"


def _cross_class_checks(res, cfg, data, field):
    # diagonal and off-diagonal entries are independent as well
    if not ("diag" in cfg.entries and "offdiag" in cfg.entries and cfg.block >= 2):
        return
    M = data.shape[0]
    bound = 3.0 / sqrt(M)
    for a, z in enumerate(cfg.points):
        x = data[:, a, 0, 0].real
        y = data[:, a, 0, 1].real
        if np.std(x) > 0 and np.std(y) > 0:
            c = correlation(x, y)
            res.add_check(f"{field} z={_fmt(z)} corr diag[0,0] vs offdiag[0,1]", abs(c) <= bound, corr=c, bound=bound)


def run_resolvent_field(cfg: ExperimentConfig, samples: np.ndarray | None = None) -> ExperimentResult:
    """Covariances of ``sqrt(N)(R_ij(z) - g(z) delta_ij)`` from direct linear solves."""
    t0 = time.perf_counter()
    n = cfg.n
    route = cfg.options.get("route", "solve")
    label = f"{route}:n={n}"
    res = _new_result(cfg, [label])
    if samples is None:
        samples = field_samples(cfg, n, route, label)
    _field_analysis(res, cfg, samples[:, :, 1], "upsilon")
    _cross_class_checks(res, cfg, samples[:, :, 1], "upsilon")
    return _finish(res, cfg, t0)


def run_schur_field(cfg: ExperimentConfig, samples: np.ndarray | None = None) -> ExperimentResult:
    """Law of ``Y_N(z)`` from the Schur complement; ``Upsilon_N`` from the same factorization."""
    t0 = time.perf_counter()
    n = cfg.n
    label = f"schur:n={n}"
    res = _new_result(cfg, [label])
    if samples is None:
        samples = field_samples(cfg, n, "schur", label)
    _field_analysis(res, cfg, samples[:, :, 0], "Y")
    _cross_class_checks(res, cfg, samples[:, :, 0], "Y")
    if cfg.options.get("upsilon", True):
        _field_analysis(res, cfg, samples[:, :, 1], "upsilon")
    return _finish(res, cfg, t0)


# --------------------------------------------------------------------------
# Quadratic forms and decoupling
# --------------------------------------------------------------------------

def _qf_spec(opts: dict, n: int) -> QuadraticFormSpec:
    kind = opts.get("matrix", "identity")
    field = opts.get("field", "real")
    if kind == "identity":
        return QuadraticFormSpec.identity(n, int(opts.get("m", 1)), field)
    if kind == "diag_pm":
        d = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        return QuadraticFormSpec({(0, 0): d}, 1, field)
    if kind == "zero_diag":
        import scipy.sparse as sp
        off = np.ones(n - 1)
        return QuadraticFormSpec({(0, 0): sp.diags([off, off], [-1, 1], format="csr")}, 1, field)
    if kind == "projections":
        P = (np.arange(n) < n // 2).astype(float)
        return QuadraticFormSpec({(0, 0): P, (1, 1): 1.0 - P}, 2, field)
    raise ValueError(f"unknown quadratic-form matrix {kind!r}")


def run_qf_clt(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    res = _new_result(cfg, ["qf"])
    opts = cfg.options
    marginal = marginal_from_dict(opts.get("marginal", "gaussian"))
    qspec = _qf_spec(opts, cfg.n)
    rep = qf_clt_experiment(qspec, marginal, cfg.replicas, cfg.master_seed, cfg.workers, cfg.var_rtol)
    for row in rep.entries:
        name = f"g[{row['entry'][0]},{row['entry'][1]}].{row['component']}"
        res.add_statistic(f"variance {name}", row["variance"], row["stderr"], row["predicted"], mean=row["mean"])
        res.add_check(f"variance {name}", row["variance_ok"], estimate=row["variance"], predicted=row["predicted"])
        if "ks" in row:
            res.ks.append({"name": name, "ks": row["ks"], "threshold": row["ks_threshold"],
                           "method": "closed_form", "n_samples": cfg.replicas})
            res.add_check(f"ks {name}", row["ks_ok"], ks=row["ks"], threshold=row["ks_threshold"])
    for c in rep.correlations:
        res.add_check(f"corr {c['a']} vs {c['b']}", c["ok"], corr=c["corr"], bound=c["bound"])
    res.extra["kappa4"] = rep.kappa4
    return _finish(res, cfg, t0)


def run_decoupling(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    res = _new_result(cfg, ["decoupling"])
    opts = cfg.options
    marginal = marginal_from_dict(opts.get("marginal", "gaussian"))
    phi = _function(opts.get("phi", "sin"), 1.0)
    rep = decoupling_check(marginal, phi, int(opts.get("p_order", 1)), int(opts.get("sample_count", 0)),
                           cfg.master_seed, opts.get("method", "auto"))
    res.add_statistic("residual", rep.residual, rep.stderr, 0.0)
    res.add_check("decoupling remainder", rep.passed, residual=rep.residual, stderr=rep.stderr, bound=rep.bound)
    res.extra["report"] = rep.to_dict()
    return _finish(res, cfg, t0)


# --------------------------------------------------------------------------
# Decay rates
# --------------------------------------------------------------------------

def _exact_trace_powers(spec: EnsembleSpec, n: int):
    """``E tr_N X^k`` for ``k = 1, 2, 3`` at finite ``n`` (used as control-variate means)."""
    s2 = spec.sigma ** 2
    d2 = spec.diag_variance
    m3 = spec.diag.moment(3)
    return np.array([0.0, ((n - 1) * s2 + d2) / n, m3 / n ** 1.5])


@dataclass(frozen=True)
class _SpectralJob:
    """Per replica: ``tr_N R(z)``, ``tr_N X^k`` (k = 1..3) and ``tr_N f(X)``."""

    spec: EnsembleSpec
    n: int
    z: complex
    f_spec: object
    seed: int
    label: str

    def __call__(self, idx):
        X = sample_wigner(self.spec, self.n, SeedDerivation(self.seed, idx, self.label))
        lam = X.eigvalsh()
        f = _function(self.f_spec, self.spec.sigma)
        return np.array([np.mean(1.0 / (self.z - lam)), lam.mean(), np.mean(lam ** 2), np.mean(lam ** 3),
                         np.mean(f(lam))], dtype=complex)


@dataclass(frozen=True)
class _OffdiagMeanJob:
    """Per replica: mean of ``R_ij(z)`` over all ``i != j`` (real ``z`` outside the spectrum)."""

    spec: EnsembleSpec
    n: int
    z: float
    seed: int
    label: str

    def __call__(self, idx):
        X = sample_wigner(self.spec, self.n, SeedDerivation(self.seed, idx, self.label))
        A = self.z * np.eye(self.n) - X.matrix
        try:
            c = sla.cho_factor(A, check_finite=False)
            inv_diag_sum = np.sum(np.abs(sla.solve_triangular(c[0], np.eye(self.n), lower=c[1],
                                                              check_finite=False)) ** 2)
            ones = sla.cho_solve(c, np.ones(self.n), check_finite=False)
        except np.linalg.LinAlgError:
            R = np.linalg.inv(A)
            inv_diag_sum = np.trace(R).real
            ones = R.sum(axis=1)
        return (ones.sum() - inv_diag_sum) / (self.n * (self.n - 1))


def _control_variate_mean(y, controls):
    """Mean of ``y`` after regressing out zero-mean controls (coefficients fitted by least squares)."""
    y = np.asarray(y, dtype=float)
    C = np.asarray(controls, dtype=float)
    keep = C.std(axis=0) > 0
    C = C[:, keep]
    if C.shape[1] == 0:
        return mean_estimate(y)
    Cc = C - C.mean(axis=0)
    beta, *_ = np.linalg.lstsq(Cc, y - y.mean(), rcond=None)
    adj = y - C @ beta
    est = mean_estimate(adj)
    # one degree of freedom per fitted coefficient
    return type(est)(est.estimate, est.stderr * sqrt((len(y) - 1) / max(len(y) - 1 - C.shape[1], 1)))


def run_decay(cfg: ExperimentConfig) -> ExperimentResult:
    """Log-log slopes of finite-``N`` biases and variances.

    Statistics (``options.statistics``):

    * ``trace_resolvent``: ``|E tr_N R(z) - g(z)|``, control variates
      ``tr_N X^k - E tr_N X^k`` (k = 1..3) with exactly known means;
    * ``entry_variance``: ``Var f(X)_01``;
    * ``diag_mean``: ``|E f(X)_00 - int f dmu|`` estimated through
      ``E tr_N f(X)`` (equal by exchangeability of the diagonal);
    * ``offdiag_resolvent_mean`` (optional): ``|E R_01(z)|`` through the
      average over all off-diagonal entries, real ``z``.
    """
    t0 = time.perf_counter()
    opts = cfg.options
    stats_wanted = list(opts.get("statistics", ["trace_resolvent", "entry_variance", "diag_mean"]))
    spec = cfg.ensemble
    sigma = spec.sigma
    ns = cfg.n_list
    res = _new_result(cfg, [f"{s}:n={n}" for s in stats_wanted for n in ns])
    target = float(opts.get("slope", -1.0))
    tol = float(opts.get("slope_tol", 0.3))
    M_spec = int(opts.get("replicas_spectral", 400))
    z_tr = parse_point(opts.get("z_trace", "3i"))
    f_mean_spec = opts.get("f_mean", {"kind": "monomial", "degree": 4, "cut": True})
    f_var_spec = opts.get("f_var", "x3_cut")
    f_mean = _function(f_mean_spec, sigma)
    mu_f = semicircle_expect(f_mean, spec.params, QuadratureRule())
    table = {s: [] for s in stats_wanted}

    for n in ns:
        if "trace_resolvent" in stats_wanted or "diag_mean" in stats_wanted:
            job = _SpectralJob(spec, n, z_tr, f_mean_spec, cfg.master_seed, f"spectral:n={n}")
            out = np.array(replica_map(job, range(M_spec), cfg.workers))
            if "trace_resolvent" in stats_wanted:
                g = complex(stieltjes_g(z_tr, sigma))
                controls = out[:, 1:4].real - _exact_trace_powers(spec, n)
                re = _control_variate_mean(out[:, 0].real, controls)
                im = _control_variate_mean(out[:, 0].imag, controls)
                dre, dim_ = re.estimate - g.real, im.estimate - g.imag
                val = abs(complex(dre, dim_))
                err = sqrt((dre * re.stderr) ** 2 + (dim_ * im.stderr) ** 2) / max(val, 1e-300)
                table["trace_resolvent"].append((n, val, err))
            if "diag_mean" in stats_wanted:
                est = mean_estimate(out[:, 4].real)
                table["diag_mean"].append((n, abs(est.estimate - mu_f), est.stderr))
        if "entry_variance" in stats_wanted:
            ecfg = ExperimentConfig(kind="entry_mc", ensemble=spec, function=f_var_spec, n_list=(n,),
                                    replicas=cfg.replicas, block=2, master_seed=cfg.master_seed,
                                    workers=cfg.workers)
            s = entry_samples(ecfg, n, f"variance:n={n}")[:, 0, 1]
            v = variance_estimate(s.real)
            table["entry_variance"].append((n, v.estimate, v.stderr))
        if "offdiag_resolvent_mean" in stats_wanted:
            ospec = EnsembleSpec.from_dict(opts["offdiag_ensemble"]) if "offdiag_ensemble" in opts else spec
            job = _OffdiagMeanJob(ospec, n, float(opts.get("z_offdiag", 3.0)), cfg.master_seed, f"offdiag:n={n}")
            vals = np.array(replica_map(job, range(int(opts.get("replicas_offdiag", M_spec))), cfg.workers))
            est = mean_estimate(vals)
            table["offdiag_resolvent_mean"].append((n, abs(est.estimate), est.stderr))

    targets = {"offdiag_resolvent_mean": (float(opts.get("slope_offdiag", -1.5)), float(opts.get("slope_offdiag_tol", 0.4)))}
    for s, rows in table.items():
        N = [r[0] for r in rows]
        y = [r[1] for r in rows]
        e = [r[2] for r in rows]
        for n_, y_, e_ in rows:
            res.add_statistic(f"{s} N={n_}", y_, e_, None)
        tgt, tl = targets.get(s, (target, tol))
        if len(rows) < 2 or min(y) <= 0:
            res.add_check(f"slope {s}", False, reason="fewer than two positive points")
            continue
        fit = loglog_slope(N, y, e)
        res.slopes.append({"name": s, **fit.to_dict(), "target": tgt, "tolerance": tl,
                           "points": [[n_, y_, e_] for n_, y_, e_ in rows]})
        res.add_check(f"slope {s}", abs(fit.slope - tgt) <= tl, slope=fit.slope, target=tgt, tolerance=tl)
    return _finish(res, cfg, t0)


# --------------------------------------------------------------------------
# Helffer-Sjostrand
# --------------------------------------------------------------------------

def run_hs_check(cfg: ExperimentConfig) -> ExperimentResult:
    """HS reconstruction vs the spectral path across grids and extension orders."""
    t0 = time.perf_counter()
    res = _new_result(cfg, ["hs"])
    opts = cfg.options
    spec = cfg.ensemble
    f = _function(cfg.function, spec.sigma)
    X = sample_wigner(spec, cfg.n, SeedDerivation(cfg.master_seed, 0, "hs"))
    m = cfg.block
    exact = apply_function_entries(X, f, m, method="spectral")
    grids = [int(g) for g in opts.get("grids", [100, 200, 400])]
    orders = [int(l) for l in opts.get("orders", [3, 5])]
    y_min = float(opts.get("y_min", 1e-4))
    tol = float(opts.get("tol", 1e-6))
    table = []
    recon = {}
    for l in orders:
        ext = AlmostAnalyticExtension(f, l)
        for g in grids:
            r = hs_reconstruct_entries(X, ext, m, HSGrid(g, g, y_min))
            recon[(l, g)] = r
            table.append({"order_l": l, "grid": g, "max_dev": float(np.max(np.abs(r - exact)))})
    res.extra["table"] = table
    finest = grids[-1]
    for l in orders:
        devs = [row["max_dev"] for row in table if row["order_l"] == l]
        res.add_check(f"deviation l={l} grid={finest}", devs[-1] <= tol, max_dev=devs[-1], tol=tol)
        mono = all(b <= 2.0 * a for a, b in zip(devs[:-1], devs[1:]))
        res.add_check(f"refinement l={l}", mono, devs=devs)
        ratio = dbar_bound_ratio(AlmostAnalyticExtension(f, l), HSGrid(finest, finest, y_min))
        res.add_check(f"dbar bound l={l}", np.isfinite(ratio), ratio=ratio)
    if len(orders) >= 2:
        d = float(np.max(np.abs(recon[(orders[0], finest)] - recon[(orders[-1], finest)])))
        res.add_check(f"order independence l={orders[0]} vs l={orders[-1]}", d <= tol, max_dev=d, tol=tol)
    return _finish(res, cfg, t0)


# --------------------------------------------------------------------------
# Predictions only
# --------------------------------------------------------------------------

def run_predict(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    res = _new_result(cfg, [])
    spec = cfg.ensemble
    f = _function(cfg.function, spec.sigma)
    rep = fn.functional_report(f, spec.kappa4, spec.params, hermitian=spec.hermitian)
    res.extra["functionals"] = asdict(rep)
    res.extra["laws"] = {e: predict_entry_law(f, spec, e).to_dict() for e in cfg.entries}
    off_cut = [p for p in cfg.points if not (p.imag == 0 and abs(p.real) <= 2 * spec.sigma)]
    if off_cut:
        res.extra["resolvent_field"] = {e: ResolventFieldLaw(off_cut, spec, e).to_dict() for e in cfg.entries}
    bessel = rep.omega2 - rep.alpha ** 2 - rep.beta ** 2
    res.add_check("bessel inequality", bessel >= -1e-12, value=bessel)
    for p in off_cut:
        if p.imag == 0:
            c = consistency_resolvent_vs_entry(p.real, spec)
            res.extra.setdefault("consistency", []).append(c)
            res.add_check(f"resolvent vs entry law z={_fmt(p)}", c["ok"], max_residual=c["max_residual"])
    return _finish(res, cfg, t0)


RUNNERS = {
    "entry_mc": run_entry_mc,
    "resolvent_field": run_resolvent_field,
    "schur_field": run_schur_field,
    "qf_clt": run_qf_clt,
    "decoupling": run_decoupling,
    "decay": run_decay,
    "hs_check": run_hs_check,
    "predict": run_predict,
}


def run(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.kind](cfg)
