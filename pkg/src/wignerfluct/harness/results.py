"""Experiment results: a versioned JSON document plus an optional raw-sample CSV."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["SCHEMA_VERSION", "ExperimentResult", "write_samples_csv", "read_samples_csv", "jsonable"]

SCHEMA_VERSION = 1
CSV_COLUMNS = ("replica", "entry_i", "entry_j", "value_re", "value_im")


def jsonable(obj):
    """Plain JSON types; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


@dataclass
class ExperimentResult:
    """Summary of one experiment.

    ``statistics`` rows carry ``estimate``, ``stderr``, ``predicted`` and
    ``zscore = (estimate - predicted) / stderr``; ``checks`` rows carry a name,
    a ``passed`` flag and the numbers behind it.  ``wall_time`` is the only
    field allowed to differ between reruns.
    """

    kind: str
    config: dict
    seeds: dict
    statistics: list = field(default_factory=list)
    ks: list = field(default_factory=list)
    slopes: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    wall_time: float = 0.0
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c["passed"]]

    def add_check(self, name: str, passed: bool, **detail):
        self.checks.append(jsonable({"name": name, "passed": bool(passed), **detail}))

    def add_statistic(self, name: str, estimate: float, stderr: float, predicted: float | None, **detail):
        z = (estimate - predicted) / stderr if (predicted is not None and stderr > 0) else None
        row = {"name": name, "estimate": estimate, "stderr": stderr, "predicted": predicted, "zscore": z, **detail}
        self.statistics.append(jsonable(row))
        return row

    def to_dict(self) -> dict:
        return jsonable({
            "schema_version": self.schema_version,
            "kind": self.kind,
            "config": self.config,
            "seeds": self.seeds,
            "statistics": self.statistics,
            "ks": self.ks,
            "slopes": self.slopes,
            "checks": self.checks,
            "extra": self.extra,
            "wall_time": self.wall_time,
            "passed": self.passed,
        })

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        d = dict(d)
        version = d.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {version!r}")
        d.pop("passed", None)
        return cls(schema_version=version, **d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentResult":
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "ExperimentResult":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def without_timing(self) -> dict:
        d = self.to_dict()
        d.pop("wall_time")
        return d


def write_samples_csv(path, samples):
    """``samples[r, i, j]`` (real or complex) to rows ``replica, entry_i, entry_j, value_re, value_im``."""
    samples = np.asarray(samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        R, m1, m2 = samples.shape
        for r in range(R):
            for i in range(m1):
                for j in range(m2):
                    v = complex(samples[r, i, j])
                    w.writerow((r, i, j, repr(v.real), repr(v.imag)))


def read_samples_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    R = 1 + max(int(r["replica"]) for r in rows)
    m1 = 1 + max(int(r["entry_i"]) for r in rows)
    m2 = 1 + max(int(r["entry_j"]) for r in rows)
    out = np.zeros((R, m1, m2), dtype=complex)
    for r in rows:
        out[int(r["replica"]), int(r["entry_i"]), int(r["entry_j"])] = complex(float(r["value_re"]), float(r["value_im"]))
    return out
