"""Command line entry point.

``wignerfluct <command> [--config FILE] [--n N ...] [--replicas M] [--seed S] [--out PATH]``

The exit status is 0 when every check of the run passes.  Otherwise a JSON
list of the failed checks goes to stderr and the status is 1; configuration
errors exit with 2.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, ExperimentConfig
from .experiments import run

__all__ = ["main", "COMMANDS"]

COMMANDS = {
    "predict": "predict",
    "entry-mc": "entry_mc",
    "resolvent-field": "resolvent_field",
    "schur-field": "schur_field",
    "qf-clt": "qf_clt",
    "decoupling": "decoupling",
    "decay": "decay",
    "hs-check": "hs_check",
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wignerfluct", description="Entry fluctuations of functions of Wigner matrices.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, kind in COMMANDS.items():
        s = sub.add_parser(name, help=f"run the {kind} experiment")
        s.add_argument("--config", help="TOML configuration file")
        s.add_argument("--n", type=int, nargs="+", help="matrix dimension(s), overrides the config")
        s.add_argument("--replicas", type=int, help="Monte Carlo replica count")
        s.add_argument("--seed", type=int, help="master seed")
        s.add_argument("--out", help="write the result JSON here")
        s.add_argument("--workers", type=int, help="worker processes for replicas")
        s.add_argument("--quiet", action="store_true", help="do not print the result JSON")
    return p


def load_config(command: str, path: str | None) -> ExperimentConfig:
    kind = COMMANDS[command]
    if path is None:
        return ExperimentConfig(kind=kind)
    cfg = ExperimentConfig.from_toml(path)
    if cfg.kind != kind:
        raise ConfigError(f"config kind {cfg.kind!r} does not match command {command!r}")
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config)
        n = args.n if args.n is None or len(args.n) > 1 else args.n[0]
        cfg = cfg.with_overrides(n=n, replicas=args.replicas, seed=args.seed, out=args.out)
        if args.workers is not None:
            cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "workers": args.workers})
    except (ConfigError, OSError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    result = run(cfg)
    if not args.quiet:
        print(result.to_json())
    if result.passed:
        return 0
    print(json.dumps(result.failures(), indent=2), file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
