"""Test functions and their spectral functionals under the semicircle law.

A :class:`TestFunction` evaluates Taylor jets ``c_k(x) = f^(k)(x) / k!`` for
``k <= order``; derivatives, products and the almost-analytic extension used in
:mod:`wignerfluct.matrixfn` are all read off these jets.

The functionals are

* ``omega2(f) = Var f(eta)``,
* ``alpha(f) = E[f(eta) eta / sigma]``,
* ``beta(f) = E[f(eta) (eta^2 - sigma^2) / sigma^2]``,

with ``eta`` semicircular, and the Gaussian-component variances

* ``v1sq = 2 (omega2 - alpha^2 + kappa4 beta^2 / (2 sigma^4))`` (real diagonal),
* ``v2sq = omega2 - alpha^2 + kappa4 beta^2 / sigma^4`` (Hermitian diagonal),
* ``d2 = omega2 - alpha^2`` (off-diagonal).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from math import factorial
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

from .semicircle import QuadratureRule, SpectralParams, _as_params, semicircle_expect

__all__ = [
    "TestFunction",
    "FunctionalReport",
    "InvalidCumulantError",
    "InternalConsistencyError",
    "monomial",
    "polynomial",
    "resolvent_function",
    "resolvent_real_part",
    "resolvent_imag_part",
    "exponential",
    "lorentzian",
    "sine",
    "cosine",
    "plateau",
    "poly_bump",
    "smooth_step_jet",
    "alpha",
    "beta",
    "omega2",
    "omega2_double_integral",
    "v1sq",
    "v2sq",
    "d2",
    "functional_report",
    "builtin_catalog",
    "make_function",
]

ANALYTIC_ORDER = 16
CLAMP_TOL = 1e-10


class InvalidCumulantError(ValueError):
    """Fourth cumulant below the Bernoulli floor."""


class InternalConsistencyError(ArithmeticError):
    """A variance that must be nonnegative came out clearly negative."""


# --------------------------------------------------------------------------
# Taylor-jet arithmetic.  A jet is an array of shape (K + 1, *x.shape).
# --------------------------------------------------------------------------

def jet_mul(a, b):
    K = min(len(a), len(b)) - 1
    out = np.zeros((K + 1,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]), dtype=np.result_type(a, b))
    for k in range(K + 1):
        for i in range(k + 1):
            out[k] += a[i] * b[k - i]
    return out


def jet_recip(a):
    K = len(a) - 1
    r = np.zeros_like(a)
    r[0] = 1.0 / a[0]
    for k in range(1, K + 1):
        acc = np.zeros_like(a[0])
        for j in range(1, k + 1):
            acc = acc + a[j] * r[k - j]
        r[k] = -acc * r[0]
    return r


def jet_exp(a):
    K = len(a) - 1
    e = np.zeros_like(a)
    e[0] = np.exp(a[0])
    for k in range(1, K + 1):
        acc = np.zeros_like(a[0])
        for j in range(1, k + 1):
            acc = acc + j * a[j] * e[k - j]
        e[k] = acc / k
    return e


def _affine_jet(t, slope, K):
    out = np.zeros((K + 1,) + t.shape)
    out[0] = t
    if K >= 1:
        out[1] = slope
    return out


def _psi_jet(t, K):
    """Jet of exp(-1/t) for t > 0, identically zero for t <= 0 (in the variable t)."""
    pos = t > 0
    ts = np.where(pos, t, 1.0)
    u = -jet_recip(_affine_jet(ts, 1.0, K))
    e = jet_exp(u)
    return np.where(pos, e, 0.0)


def smooth_step_jet(t, K):
    """Jet of the C-infinity step S(t) = psi(t) / (psi(t) + psi(1 - t)); S = 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = _psi_jet(t, K)
    b = _psi_jet(1.0 - t, K)
    # jet of psi(1 - t) in t: the k-th coefficient picks up (-1)^k
    signs = (-1.0) ** np.arange(K + 1)
    b = b * signs.reshape((-1,) + (1,) * t.ndim)
    return jet_mul(a, jet_recip(a + b))


def _rescale_jet(jet, slope):
    """Jet of F(slope * x + c) in x from the jet of F in its own argument."""
    K = len(jet) - 1
    scale = slope ** np.arange(K + 1)
    return jet * scale.reshape((-1,) + (1,) * (jet.ndim - 1))


# --------------------------------------------------------------------------
# Test functions
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TestFunction:
    """An evaluable real function with analytic derivatives up to ``max_order``.

    ``taylor(x, K)`` returns the jet ``f^(k)(x)/k!`` for ``k = 0..K``.
    ``poly_coeffs`` (ascending) is set when ``f`` agrees with a polynomial on
    ``poly_interval`` (the whole line when that is ``None``); matrix-function
    code uses it to avoid a full eigendecomposition.
    """

    __test__ = False  # not a pytest class

    name: str
    taylor: Callable[[np.ndarray, int], np.ndarray]
    max_order: int
    smoothness_class: int
    support_hint: tuple[float, float] | None = None
    poly_coeffs: tuple[float, ...] | None = None
    poly_interval: tuple[float, float] | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.taylor(x, 0)[0]
        return float(out) if out.ndim == 0 else out

    def derivative(self, k: int, x):
        if k > self.max_order:
            raise ValueError(f"{self.name}: derivative order {k} exceeds max_order {self.max_order}")
        x = np.asarray(x, dtype=float)
        out = self.taylor(x, k)[k] * factorial(k)
        return float(out) if out.ndim == 0 else out

    @property
    def compact(self) -> bool:
        return self.support_hint is not None

    @property
    def is_polynomial(self) -> bool:
        return self.poly_coeffs is not None and self.poly_interval is None

    def c_norm(self, order: int, interval: tuple[float, float], points: int = 4001) -> float:
        """``max_{k <= order} sup_{x in interval} |f^(k)(x)|`` on a fine grid."""
        x = np.linspace(interval[0], interval[1], points)
        jet = self.taylor(x, order)
        facts = np.array([factorial(k) for k in range(order + 1)], dtype=float)
        return float(np.max(np.abs(jet) * facts[:, None]))

    def __mul__(self, other: "TestFunction") -> "TestFunction":
        return product(self, other)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


def _poly_taylor(coeffs):
    c = np.asarray(coeffs, dtype=float)

    def taylor(x, K):
        x = np.asarray(x, dtype=float)
        out = np.zeros((K + 1,) + x.shape)
        d = c.copy()
        for k in range(K + 1):
            out[k] = P.polyval(x, d) / factorial(k) if d.size else 0.0
            d = P.polyder(d) if d.size > 1 else np.zeros(1)
        return out

    return taylor


def polynomial(coeffs, name: str | None = None) -> TestFunction:
    """Polynomial with ascending coefficients ``coeffs``."""
    coeffs = tuple(float(c) for c in coeffs)
    return TestFunction(
        name=name or f"poly{list(coeffs)}",
        taylor=_poly_taylor(coeffs),
        max_order=ANALYTIC_ORDER,
        smoothness_class=10 ** 6,
        poly_coeffs=coeffs,
        params={"kind": "polynomial", "coeffs": list(coeffs)},
    )


def monomial(degree: int) -> TestFunction:
    if not 0 <= degree <= 8:
        raise ValueError("built-in monomials cover degrees 0..8")
    coeffs = [0.0] * degree + [1.0]
    f = polynomial(coeffs, name=f"x^{degree}")
    f.params.update({"kind": "monomial", "degree": degree})
    return f


def _resolvent_taylor(z, part):
    def taylor(x, K):
        x = np.asarray(x, dtype=float)
        base = 1.0 / (z - x.astype(complex))
        out = np.empty((K + 1,) + x.shape, dtype=complex)
        cur = base
        for k in range(K + 1):
            out[k] = cur
            cur = cur * base
        if part == "real":
            return out.real
        if part == "imag":
            return out.imag
        return out.real
    return taylor


def resolvent_function(z: float, p: SpectralParams | float | None = None) -> TestFunction:
    """``f_z(x) = 1/(z - x)`` for real ``z`` off the cut."""
    sigma = _as_params(p).sigma
    z = float(z)
    if abs(z) <= 2.0 * sigma:
        raise ValueError("resolvent_function needs a real point outside [-2 sigma, 2 sigma]")
    return TestFunction(name=f"1/({z:g}-x)", taylor=_resolvent_taylor(z, "real"),
                        max_order=ANALYTIC_ORDER, smoothness_class=10 ** 6,
                        params={"kind": "resolvent", "z": z})


def resolvent_real_part(z: complex) -> TestFunction:
    z = complex(z)
    if z.imag == 0.0:
        raise ValueError("use resolvent_function for real z")
    return TestFunction(name=f"Re 1/({z}-x)", taylor=_resolvent_taylor(z, "real"),
                        max_order=ANALYTIC_ORDER, smoothness_class=10 ** 6,
                        params={"kind": "resolvent_re", "z": [z.real, z.imag]})


def resolvent_imag_part(z: complex) -> TestFunction:
    z = complex(z)
    if z.imag == 0.0:
        raise ValueError("the imaginary part vanishes for real z")
    return TestFunction(name=f"Im 1/({z}-x)", taylor=_resolvent_taylor(z, "imag"),
                        max_order=ANALYTIC_ORDER, smoothness_class=10 ** 6,
                        params={"kind": "resolvent_im", "z": [z.real, z.imag]})


def lorentzian() -> TestFunction:
    """``1/(1 + x^2) = -Im 1/(i - x)``; every derivative is bounded on the line."""
    im = _resolvent_taylor(1j, "imag")
    return TestFunction(name="1/(1+x^2)", taylor=lambda x, K: -im(x, K), max_order=ANALYTIC_ORDER,
                        smoothness_class=10 ** 6, params={"kind": "lorentzian"})


def exponential(a: float = 1.0) -> TestFunction:
    a = float(a)

    def taylor(x, K):
        x = np.asarray(x, dtype=float)
        e = np.exp(a * x)
        return np.stack([a ** k * e / factorial(k) for k in range(K + 1)])

    return TestFunction(name=f"exp({a:g}x)", taylor=taylor, max_order=ANALYTIC_ORDER,
                        smoothness_class=10 ** 6, params={"kind": "exp", "a": a})


def _trig(a, phase0, label):
    def taylor(x, K):
        x = np.asarray(x, dtype=float)
        return np.stack([a ** k * np.sin(a * x + phase0 + k * np.pi / 2) / factorial(k)
                         for k in range(K + 1)])
    return TestFunction(name=f"{label}({a:g}x)", taylor=taylor, max_order=ANALYTIC_ORDER,
                        smoothness_class=10 ** 6, params={"kind": label, "a": a})


def sine(a: float = 1.0) -> TestFunction:
    return _trig(float(a), 0.0, "sin")


def cosine(a: float = 1.0) -> TestFunction:
    return _trig(float(a), np.pi / 2, "cos")


def plateau(delta: float = 0.5, p: SpectralParams | float | None = None) -> TestFunction:
    """C-infinity cutoff: 1 on ``[-(2 sigma + delta), 2 sigma + delta]``, 0 beyond ``2 sigma + 2 delta``."""
    sigma = _as_params(p).sigma
    if delta <= 0:
        raise ValueError("delta must be positive")
    inner = 2.0 * sigma + delta
    outer = 2.0 * sigma + 2.0 * delta
    width = outer - inner

    def taylor(x, K):
        x = np.asarray(x, dtype=float)
        right = _rescale_jet(smooth_step_jet((outer - x) / width, K), -1.0 / width)
        left = _rescale_jet(smooth_step_jet((outer + x) / width, K), 1.0 / width)
        return jet_mul(right, left)

    return TestFunction(name=f"plateau(delta={delta:g})", taylor=taylor, max_order=ANALYTIC_ORDER,
                        smoothness_class=10 ** 6, support_hint=(-outer, outer),
                        poly_coeffs=(1.0,), poly_interval=(-inner, inner),
                        params={"kind": "plateau", "delta": delta, "sigma": sigma})


def poly_bump(half_width: float = 4.0, power: int = 8) -> TestFunction:
    """``(1 - (x/L)^2)^power`` on ``|x| < L``, zero outside: a C^(power-1) compactly supported bump."""
    L = float(half_width)
    inner = P.polypow([1.0, 0.0, -1.0 / (L * L)], power)
    inside_taylor = _poly_taylor(inner)

    def taylor(x, K):
        x = np.asarray(x, dtype=float)
        jet = inside_taylor(x, K)
        return np.where(np.abs(x) < L, jet, 0.0)

    return TestFunction(name=f"bump(L={L:g},p={power})", taylor=taylor, max_order=power - 1,
                        smoothness_class=power - 1, support_hint=(-L, L),
                        params={"kind": "poly_bump", "half_width": L, "power": power})


def product(f: TestFunction, g: TestFunction) -> TestFunction:
    """Pointwise product; derivatives by the Leibniz rule on jets."""
    def taylor(x, K):
        return jet_mul(f.taylor(x, K), g.taylor(x, K))

    support = None
    for s in (f.support_hint, g.support_hint):
        if s is not None:
            support = s if support is None else (max(support[0], s[0]), min(support[1], s[1]))
    poly, interval = None, None
    if f.poly_coeffs is not None and g.poly_coeffs is not None:
        poly = tuple(float(c) for c in P.polymul(f.poly_coeffs, g.poly_coeffs))
        ivs = [s for s in (f.poly_interval, g.poly_interval) if s is not None]
        if ivs:
            interval = (max(i[0] for i in ivs), min(i[1] for i in ivs))
    return TestFunction(
        name=f"{f.name}*{g.name}", taylor=taylor,
        max_order=min(f.max_order, g.max_order),
        smoothness_class=min(f.smoothness_class, g.smoothness_class),
        support_hint=support, poly_coeffs=poly, poly_interval=interval,
        params={"kind": "product", "factors": [f.to_dict(), g.to_dict()]},
    )


def builtin_catalog(p: SpectralParams | float | None = None) -> dict[str, TestFunction]:
    """Named built-in test functions used by the CLI and the invariant checks."""
    cat = {f"x{d}": monomial(d) for d in range(9)}
    cat.update({
        "exp": exponential(1.0),
        "sin": sine(1.0),
        "cos": cosine(1.0),
        "lorentzian": lorentzian(),
        "resolvent_2.5": resolvent_function(2.5, p),
        "resolvent_re_i": resolvent_real_part(1j),
        "resolvent_im_i": resolvent_imag_part(1j),
        "plateau": plateau(0.5, p),
        "bump": poly_bump(4.0, 8),
    })
    cat["x3_cut"] = monomial(3) * plateau(0.5, p)
    return cat


def make_function(spec, p: SpectralParams | float | None = None) -> TestFunction:
    """Build a test function from a config entry.

    Accepts a catalog name (``"x3"``, ``"sin"``, ...) or a mapping with
    ``kind`` and parameters, e.g. ``{"kind": "monomial", "degree": 3,
    "cut": true}``.  ``cut = true`` multiplies by the plateau cutoff.
    """
    if isinstance(spec, TestFunction):
        return spec
    if isinstance(spec, str):
        cat = builtin_catalog(p)
        if spec not in cat:
            raise KeyError(f"unknown test function {spec!r}; known: {sorted(cat)}")
        return cat[spec]
    spec = dict(spec)
    kind = spec.pop("kind")
    cut = spec.pop("cut", False)
    delta = spec.pop("delta", 0.5)
    if kind == "monomial":
        f = monomial(int(spec["degree"]))
    elif kind == "polynomial":
        f = polynomial(spec["coeffs"])
    elif kind == "resolvent":
        f = resolvent_function(float(spec["z"]), p)
    elif kind == "exp":
        f = exponential(spec.get("a", 1.0))
    elif kind == "sin":
        f = sine(spec.get("a", 1.0))
    elif kind == "cos":
        f = cosine(spec.get("a", 1.0))
    elif kind == "lorentzian":
        f = lorentzian()
    elif kind == "plateau":
        f = plateau(delta, p)
    elif kind == "poly_bump":
        f = poly_bump(spec.get("half_width", 4.0), int(spec.get("power", 8)))
    elif kind == "bump_times":
        inner = make_function(spec["f"], p)
        f = poly_bump(spec.get("half_width", 4.0), int(spec.get("power", 8))) * inner
    else:
        raise KeyError(f"unknown test function kind {kind!r}")
    if cut:
        f = f * plateau(delta, p)
    return f


# --------------------------------------------------------------------------
# Functionals
# --------------------------------------------------------------------------

def _expect(f, p, q):
    return semicircle_expect(f, p, q)


def alpha(f, p: SpectralParams | float | None = None, q: QuadratureRule | None = None) -> float:
    sigma = _as_params(p).sigma
    return _expect(lambda x: f(x) * x / sigma, p, q)


def beta(f, p: SpectralParams | float | None = None, q: QuadratureRule | None = None) -> float:
    sigma = _as_params(p).sigma
    return _expect(lambda x: f(x) * (x * x - sigma * sigma) / (sigma * sigma), p, q)


def omega2(f, p: SpectralParams | float | None = None, q: QuadratureRule | None = None) -> float:
    """``Var f(eta)`` from the single-integral form ``E f^2 - (E f)^2``."""
    q = q or QuadratureRule()
    x, w = q.nodes_weights(p)
    fx = np.asarray(f(x), dtype=float)
    mean = np.dot(w, fx)
    # centred second moment avoids cancellation when E f is large
    return max(float(np.dot(w, (fx - mean) ** 2)), 0.0)


def omega2_double_integral(f, p: SpectralParams | float | None = None, nodes: int = 512) -> float:
    """``(1/2) int int (f(x) - f(y))^2 rho(x) rho(y) dx dy`` on a tensor grid (test oracle)."""
    x, w = QuadratureRule(nodes).nodes_weights(p)
    fx = np.asarray(f(x), dtype=float)
    diff = fx[:, None] - fx[None, :]
    return 0.5 * float(w @ (diff * diff) @ w)


def _clamp(value: float, label: str) -> float:
    if value < 0.0:
        if value >= -CLAMP_TOL:
            return 0.0
        raise InternalConsistencyError(f"{label} = {value:.3e} is negative beyond round-off")
    return value


def _check_kappa4(kappa4: float, floor: float):
    if kappa4 < floor - 1e-12 * max(1.0, abs(floor)):
        raise InvalidCumulantError(f"kappa4 = {kappa4} is below the Bernoulli floor {floor}")


def _parts(f, p, q):
    return omega2(f, p, q), alpha(f, p, q), beta(f, p, q)


def v1sq(f, kappa4: float, p: SpectralParams | float | None = None, q: QuadratureRule | None = None) -> float:
    """Gaussian-component variance of a real symmetric diagonal entry."""
    sigma = _as_params(p).sigma
    _check_kappa4(kappa4, -2.0 * sigma ** 4)
    w2, a, b = _parts(f, p, q)
    return _clamp(2.0 * (w2 - a * a + kappa4 * b * b / (2.0 * sigma ** 4)), "v1sq")


def v2sq(f, kappa4: float, p: SpectralParams | float | None = None, q: QuadratureRule | None = None) -> float:
    """Gaussian-component variance of a Hermitian diagonal entry.

    ``kappa4`` is the Hermitian cumulant ``E|W_12|^4 - 2 sigma^4``, whose floor is ``-sigma^4``.
    """
    sigma = _as_params(p).sigma
    _check_kappa4(kappa4, -sigma ** 4)
    w2, a, b = _parts(f, p, q)
    return _clamp(w2 - a * a + kappa4 * b * b / sigma ** 4, "v2sq")


def d2(f, p: SpectralParams | float | None = None, q: QuadratureRule | None = None) -> float:
    """Gaussian-component variance of an off-diagonal entry."""
    w2, a, _ = _parts(f, p, q)
    return _clamp(w2 - a * a, "d2")


@dataclass
class FunctionalReport:
    alpha: float
    beta: float
    omega2: float
    v1sq: float
    v2sq: float
    d2: float
    kappa4_used: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "FunctionalReport":
        return cls(**json.loads(text))


def functional_report(f, kappa4: float, p: SpectralParams | float | None = None,
                      q: QuadratureRule | None = None, hermitian: bool = False) -> FunctionalReport:
    """All functionals at once.

    ``kappa4`` follows the symmetry class: real cumulant ``m4 - 3 sigma^4`` when
    ``hermitian`` is false, ``E|W_12|^4 - 2 sigma^4`` otherwise.  The diagonal
    variance of the other class is reported as ``None``.
    """
    sigma = _as_params(p).sigma
    w2, a, b = _parts(f, p, q)
    dd = _clamp(w2 - a * a, "d2")
    if hermitian:
        _check_kappa4(kappa4, -sigma ** 4)
        r1, r2 = None, _clamp(w2 - a * a + kappa4 * b * b / sigma ** 4, "v2sq")
    else:
        _check_kappa4(kappa4, -2.0 * sigma ** 4)
        r1, r2 = _clamp(2.0 * (w2 - a * a + kappa4 * b * b / (2.0 * sigma ** 4)), "v1sq"), None
    return FunctionalReport(alpha=a, beta=b, omega2=w2, v1sq=r1, v2sq=r2, d2=dd, kappa4_used=float(kappa4))
