"""Command-line driver: ``slqvi {solve,verify,oracle,sweep}``."""

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as C
from . import experiment as E
from .riccati import ConvergenceError, SingularityError

# flag -> config key path
FLAG_KEYS = {
    "algorithm": "algorithm",
    "seed": "sim.seed",
    "paths": "sim.paths",
    "dt": "sim.dt",
    "intervals": "collection.intervals",
    "interval_length": "collection.interval_length",
    "stop_tol": "vi.stop_tol",
    "max_iter": "vi.max_iter",
    "gamma": "vi.gamma",
    "output": "output.directory",
    "t_end": "oracle.t_end",
    "rtol": "oracle.rtol",
}


def _add_config_args(p):
    p.add_argument("config", help="config file (.json) or bundled config name")
    p.add_argument("--algorithm", choices=C.ALGORITHMS)
    p.add_argument("--seed", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--intervals", type=int)
    p.add_argument("--interval-length", type=float)
    p.add_argument("--stop-tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--output", "-o")
    p.add_argument("--t-end", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--ensemble-csv", action="store_true", help="also write ensemble.csv")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key, e.g. vi.trust_growth=3")


def _resolve(args):
    file_cfg, base = C.load(args.config)
    overrides = [C.parse_override(s) for s in args.set]
    for flag, key in FLAG_KEYS.items():
        val = getattr(args, flag, None)
        if val is not None:
            overrides.append(C.parse_override(f"{key}={json.dumps(val)}"))
    if getattr(args, "ensemble_csv", False):
        overrides.append({"output": {"ensemble_csv": True}})
    return C.resolve(file_cfg, overrides, base)


def cmd_solve(args):
    cfg = _resolve(args)
    code, msg, _ = E.run_experiment(cfg)
    print(f"{cfg['name']}: {msg}")
    if code in (E.EXIT_OK, E.EXIT_NOT_CONVERGED):
        print(f"bundle written to {cfg['output']['directory']}")
    return code


def cmd_verify(args):
    try:
        rep = E.verify(args.bundle, args.threshold)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return E.EXIT_MISSING
    print(E.format_report(rep))
    return E.EXIT_OK


def cmd_oracle(args):
    cfg = _resolve(args)
    P0 = None if args.p0_scale is None else args.p0_scale * np.eye(C.build_model(cfg).n)
    try:
        P, K, res = E.oracle(cfg, P0)
    except SingularityError as e:
        print(f"error: {e}", file=sys.stderr)
        return E.EXIT_NUMERICAL
    except ConvergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return E.EXIT_NOT_CONVERGED
    out = {"P_star": P.tolist(), "K_star": K.tolist(), "residual": res}
    print(json.dumps(out, indent=2))
    if args.output:
        Path(args.output).mkdir(parents=True, exist_ok=True)
        with open(Path(args.output) / "oracle.json", "w") as f:
            json.dump(out, f, indent=2)
            f.write("\n")
    return E.EXIT_OK


def _sweep_one(cfg):
    code, msg, _ = E.run_experiment(cfg)
    return cfg["sim"]["seed"], code, msg


def cmd_sweep(args):
    cfg = _resolve(args)
    root = Path(cfg["output"]["directory"])
    jobs = []
    for s in args.seeds:
        c = C.resolve(cfg, [{"sim": {"seed": s}, "output": {"directory": str(root / f"seed_{s}")}}])
        jobs.append(c)
    worst = E.EXIT_OK
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        for seed, code, msg in pool.map(_sweep_one, jobs):
            print(f"seed {seed}: {msg}")
            worst = max(worst, code)
    return worst


def build_parser():
    parser = argparse.ArgumentParser(prog="slqvi", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run value iteration and write a result bundle")
    _add_config_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="recompute residuals of a result bundle")
    p.add_argument("bundle", help="bundle directory containing result.json")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="solve the SARE by the forward Riccati flow")
    _add_config_args(p)
    p.add_argument("--p0-scale", type=float, help="start the flow at this multiple of I (default 0)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="run one experiment per seed in parallel")
    _add_config_args(p)
    p.add_argument("--seeds", type=int, nargs="+", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except C.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return E.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
