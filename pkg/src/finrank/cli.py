"""Command-line entry point ``finrank``.

Exit status: 0 on success, 1 when a computation fails or a check does not
pass, 2 for an invalid configuration or command line.
"""

from __future__ import annotations

import os

# BLAS thread pools are sized when numpy loads, so this runs first
_THREADS = os.environ.get("FINRANK_THREADS")
if _THREADS:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[_var] = _THREADS

import argparse  # noqa: E402
import copy  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402

from . import __version__  # noqa: E402
from .scenario import (  # noqa: E402
    ConfigError,
    parse_config,
    preset_names,
    preset_path,
    run_experiment,
    write_outputs,
)

__all__ = ["main", "build_parser"]

_SUBCOMMANDS = {
    "kernel-eval": "kernel-eval",
    "borel-scan": "borel-scan",
    "spectral-check": "spectral-check",
    "propagate": "propagate",
    "oracle-compare": "oracle-compare",
    "decay-fit": "decay-fit",
    "oscillatory-verify": "oscillatory",
    "scaling": "scaling",
    "run": None,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 already; keep the message on stderr
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="finrank", description="Finite-rank perturbations of the Laplacian.")
    p.add_argument("--version", action="version", version=f"finrank {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in _SUBCOMMANDS:
        s = sub.add_parser(name)
        src = s.add_mutually_exclusive_group()
        src.add_argument("--config", help="scenario JSON file")
        src.add_argument("--preset", help="bundled scenario name")
        s.add_argument("--t", type=float, nargs="+", help="override the time grid")
        s.add_argument("--lambda", dest="lam", type=float, nargs="+", help="override the spectral grid")
        s.add_argument("--branch", choices=("plus", "minus"), help="boundary-value branch")
        s.add_argument("--out", help="directory for CSV and JSON outputs")
        if name == "kernel-eval":
            s.add_argument("--d", type=int, help="dimension")
            s.add_argument("--r", type=float, help="distance |x - y|")
    sub.add_parser("presets", help="list bundled scenarios")
    return p


def _load_raw(args) -> dict:
    if args.config:
        try:
            with open(args.config) as fh:
                return json.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read {args.config}: {e}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"{args.config}: invalid JSON ({e})") from None
    if args.preset:
        return json.loads(preset_path(args.preset).read_text())
    return {}


def _apply_overrides(raw: dict, args) -> dict:
    raw = copy.deepcopy(raw)
    if not isinstance(raw, dict):
        raise ConfigError("config: expected an object")
    wanted = _SUBCOMMANDS[args.command]
    if wanted is not None:
        if "experiment" in raw and raw["experiment"] != wanted:
            raise ConfigError(f"config experiment {raw['experiment']!r} does not match subcommand {args.command}")
        raw["experiment"] = wanted
    if args.command == "kernel-eval":
        k = raw.setdefault("kernel", {})
        if args.d is not None:
            raw["dimension"] = args.d
        if args.r is not None:
            k["r"] = args.r
        if args.branch:
            k["branch"] = args.branch
        if args.lam:
            if len(args.lam) != 1:
                raise ConfigError("--lambda: kernel-eval takes one value")
            k["lambda"] = args.lam[0]
        return raw
    if args.t:
        raw.setdefault("grids", {})["t"] = list(args.t)
    if args.lam:
        if raw.get("experiment") == "scaling":
            raw.setdefault("scaling", {})["lambda"] = args.lam[0]
        else:
            raw.setdefault("grids", {})["lambda"] = list(args.lam)
    if args.branch:
        if raw.get("experiment") == "scaling":
            raw.setdefault("scaling", {})["branch"] = args.branch
        elif raw.get("experiment") not in ("borel-scan", "spectral-check"):
            raise ConfigError(f"--branch does not apply to {raw.get('experiment')}")
    return raw


def _emit(result, args, cfg) -> None:
    tables = result.tables
    if args.branch and cfg.experiment in ("borel-scan", "spectral-check"):
        for t in tables:
            t.rows = [r for r in t.rows if r[1] == args.branch]
    for line in result.stdout:
        print(line)
    for c in result.checks:
        print(c.line())
    if args.out or "output" in cfg.raw:
        for path in write_outputs(cfg, result, args.out):
            print(f"wrote {path}")
    elif not result.stdout and not result.checks:
        for t in tables:
            sys.stdout.write(t.render(cfg.sha256))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name in preset_names():
            print(name)
        return 0
    try:
        raw = _apply_overrides(_load_raw(args), args)
        cfg = parse_config(raw)
    except ConfigError as e:
        print(f"finrank: config error: {e}", file=sys.stderr)
        return 2
    try:
        result = run_experiment(cfg)
    except (ValueError, ArithmeticError, RuntimeError, NotImplementedError) as e:
        print(f"finrank: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    _emit(result, args, cfg)
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
