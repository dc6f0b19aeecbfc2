"""Experiment configuration, read from TOML.

Example::

    kind = "entry_mc"
    n = [1000]
    replicas = 5000
    master_seed = 7
    block = 3
    entries = ["diag", "offdiag"]

    [ensemble]
    symmetry = "real_symmetric"
    offdiag = { name = "rademacher", variance = 1.0 }
    diag = { name = "gaussian", variance = 2.0 }

    [function]
    kind = "monomial"
    degree = 3
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace

from ..ensembles import EnsembleSpec, goe

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "CENTERINGS", "parse_point"]

KINDS = ("entry_mc", "resolvent_field", "schur_field", "qf_clt", "decoupling", "decay", "hs_check", "predict")
CENTERINGS = ("empirical_mean", "semicircle_integral", "zero")
MONTE_CARLO_KINDS = ("entry_mc", "resolvent_field", "schur_field", "qf_clt", "decay")
BLOCK_KINDS = ("entry_mc", "resolvent_field", "schur_field")
MIN_REPLICAS = 100


class ConfigError(ValueError):
    """The configuration violates a documented constraint."""


def parse_point(p) -> complex:
    """``2.5``, ``[2.5, 0.0]``, ``"2i"`` or ``"1+2j"`` to a complex number."""
    if isinstance(p, (list, tuple)):
        re, im = p
        return complex(float(re), float(im))
    if isinstance(p, str):
        return complex(p.replace(" ", "").replace("i", "j"))
    return complex(p)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    ensemble: EnsembleSpec = field(default_factory=goe)
    function: object = "x3"
    n_list: tuple = (1000,)
    replicas: int = 1000
    points: tuple = (2.5,)
    block: int = 2
    entries: tuple = ("diag", "offdiag")
    centering: str = "empirical_mean"
    master_seed: int = 0
    output: str | None = None
    workers: int = 1
    var_rtol: float = 0.10
    field_rtol: float = 0.15
    ks_slack: float = 1.5
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "points", tuple(parse_point(p) for p in self.points))
        object.__setattr__(self, "entries", tuple(self.entries))
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.centering not in CENTERINGS:
            raise ConfigError(f"unknown centering {self.centering!r}; expected one of {CENTERINGS}")
        if self.kind in MONTE_CARLO_KINDS and self.replicas < MIN_REPLICAS:
            raise ConfigError(f"replicas must be at least {MIN_REPLICAS}, got {self.replicas}")
        if self.kind in BLOCK_KINDS:
            for n in self.n_list:
                if n < 4 * self.block:
                    raise ConfigError(f"N={n} is below 4 * block = {4 * self.block}")
        for e in self.entries:
            if e not in ("diag", "offdiag"):
                raise ConfigError(f"entries must be 'diag' or 'offdiag', got {e!r}")
        if not self.n_list:
            raise ConfigError("n list is empty")

    @property
    def n(self) -> int:
        return self.n_list[0]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        kw = {}
        if "kind" not in d:
            raise ConfigError("configuration needs a 'kind'")
        kw["kind"] = d.pop("kind")
        if "ensemble" in d:
            try:
                kw["ensemble"] = EnsembleSpec.from_dict(d.pop("ensemble"))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad ensemble: {exc}") from exc
        n = d.pop("n", None)
        if n is not None:
            kw["n_list"] = tuple(n) if isinstance(n, (list, tuple)) else (n,)
        if "seed" in d:
            d["master_seed"] = d.pop("seed")
        simple = ("function", "replicas", "points", "block", "entries", "centering", "master_seed",
                  "output", "workers", "var_rtol", "field_rtol", "ks_slack", "options")
        for key in simple:
            if key in d:
                kw[key] = d.pop(key)
        if isinstance(kw.get("entries"), str):
            kw["entries"] = (kw["entries"],)
        if d:
            raise ConfigError(f"unknown configuration keys {sorted(d)}")
        return cls(**kw)

    @classmethod
    def from_toml(cls, path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    @classmethod
    def from_toml_string(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(tomllib.loads(text))

    def with_overrides(self, n=None, replicas=None, seed=None, out=None, kind=None) -> "ExperimentConfig":
        kw = {}
        if n is not None:
            kw["n_list"] = tuple(n) if isinstance(n, (list, tuple)) else (n,)
        if replicas is not None:
            kw["replicas"] = replicas
        if seed is not None:
            kw["master_seed"] = seed
        if out is not None:
            kw["output"] = out
        if kind is not None:
            kw["kind"] = kind
        return replace(self, **kw)

    def to_dict(self) -> dict:
        fn = self.function
        if hasattr(fn, "to_dict"):
            fn = fn.to_dict()
        return {
            "kind": self.kind,
            "ensemble": self.ensemble.to_dict(),
            "function": fn,
            "n": list(self.n_list),
            "replicas": self.replicas,
            "points": [[p.real, p.imag] for p in self.points],
            "block": self.block,
            "entries": list(self.entries),
            "centering": self.centering,
            "master_seed": self.master_seed,
            "output": self.output,
            "workers": self.workers,
            "var_rtol": self.var_rtol,
            "field_rtol": self.field_rtol,
            "ks_slack": self.ks_slack,
            "options": dict(self.options),
        }
