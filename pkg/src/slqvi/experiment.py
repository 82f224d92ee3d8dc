"""End-to-end experiment pipeline and result bundles.

A bundle is a directory holding ``result.json`` (final iterate, gain,
residuals, counters and the resolved config), ``history.csv`` and,
optionally, ``ensemble.csv`` and ``data.csv``.  Nothing time-dependent is
written, so identical configs give byte-identical bundles.
"""

import json
import logging
from pathlib import Path

import numpy as np

from . import config as C
from .data_collect import RankError, collect, collect_from_simulation
from .riccati import gain, lyapunov_residual, riccati_map, solve_sare_oracle
from .simulator import simulate_open_loop
from .vi_engine import run_model_based, run_model_free

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RANK = 3
EXIT_NOT_CONVERGED = 4
EXIT_NUMERICAL = 5
EXIT_MISSING = 6


def _tolist(a):
    return None if a is None else np.asarray(a).tolist()


def execute(cfg):
    """Run the configured algorithm; returns ``(result, extras)``.

    ``extras`` carries the data matrices and ensemble (model-free runs) so
    callers can export them.
    """
    model = C.build_model(cfg)
    vi_cfg = C.build_vi(cfg, model)
    extras = {}
    if cfg["algorithm"] == "model_based":
        return run_model_based(model, vi_cfg), extras

    sim = C.build_sim(cfg)
    exploration = C.build_exploration(cfg, model)
    times = C.collection_times(cfg)
    rank_tol = float(cfg["collection"]["rank_tol"])
    if cfg["output"].get("ensemble_csv"):
        ens = simulate_open_loop(model, exploration, times, sim)
        extras["ensemble"] = ens
        data = collect(ens, rank_tol)
    else:
        data = collect_from_simulation(model, exploration, times, sim, rank_tol)
    extras["data"] = data
    extras["exploration"] = exploration
    data.require_full_rank()
    # only the cost weights are passed on; A, B, C, D stay unused from here
    return run_model_free(data, model.Q, model.R, vi_cfg), extras


def residuals(model, P, K):
    R1 = riccati_map(model, P)
    R2 = lyapunov_residual(model, P, K)
    return R1, R2


def bundle_dict(cfg, result):
    model = C.build_model(cfg)
    R1, R2 = residuals(model, result.P_final, result.K_final)
    return {
        "name": cfg["name"],
        "algorithm": cfg["algorithm"],
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "resets": int(result.resets),
        "P_final": _tolist(result.P_final),
        "K_final": _tolist(result.K_final),
        "R1": _tolist(R1),
        "R2": _tolist(R2),
        "R1_norm": float(np.linalg.norm(R1)),
        "R2_norm": float(np.linalg.norm(R2)),
        "final_residual": float(result.residual_history[-1]) if result.residual_history else None,
        "seed": int(cfg["sim"]["seed"]),
        "config": cfg,
    }


def write_bundle(cfg, result, extras, outdir):
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    formats = set(cfg["output"]["formats"])
    if "json" in formats:
        with open(out / "result.json", "w") as f:
            json.dump(bundle_dict(cfg, result), f, indent=2, sort_keys=True)
            f.write("\n")
    if "csv" in formats:
        result.write_history_csv(out / "history.csv")
        if "data" in extras:
            extras["data"].to_csv(out / "data.csv")
    if "ensemble" in extras:
        extras["ensemble"].to_csv(out / "ensemble.csv")
    return out


def run_experiment(cfg, outdir=None):
    """Execute and write the bundle; returns ``(exit_code, message, result)``.

    ``cfg`` must already be resolved.  Nothing is written when the run fails
    before iterating (rank failure, numerical error).
    """
    from .riccati import SingularityError

    outdir = outdir or cfg["output"]["directory"]
    try:
        result, extras = execute(cfg)
    except RankError as e:
        return EXIT_RANK, f"rank condition failed: {e}", None
    except (SingularityError, np.linalg.LinAlgError) as e:
        return EXIT_NUMERICAL, f"numerical failure: {e}", None
    write_bundle(cfg, result, extras, outdir)
    if not result.converged:
        return (EXIT_NOT_CONVERGED,
                f"not converged after {result.iterations} iterations "
                f"(last residual {result.residual_history[-1]:.3e})", result)
    return EXIT_OK, f"converged in {result.iterations} iterations ({result.resets} resets)", result


def residual_report(model, P, K=None, threshold=1e-3):
    """Entrywise residual magnitudes of the Riccati and closed-loop equations.

    ``K`` defaults to the optimal gain at ``P``.
    """
    P = np.asarray(P, dtype=float)
    K = gain(model, P) if K is None else np.asarray(K, dtype=float)
    R1, R2 = residuals(model, P, K)
    flagged = []
    for name, Rm in (("R1", R1), ("R2", R2)):
        for i, j in zip(*np.nonzero(np.abs(Rm) > threshold)):
            flagged.append((name, int(i), int(j), float(Rm[i, j])))
    return {
        "R1": R1, "R2": R2,
        "R1_norm": float(np.linalg.norm(R1)), "R2_norm": float(np.linalg.norm(R2)),
        "R1_max": float(np.abs(R1).max()), "R2_max": float(np.abs(R2).max()),
        "threshold": threshold, "flagged": flagged,
    }


def format_report(rep):
    lines = []
    for name in ("R1", "R2"):
        lines.append(f"{name} (|entries|, max {rep[name + '_max']:.3e}, fro {rep[name + '_norm']:.3e}):")
        for row in np.abs(rep[name]):
            lines.append("  " + "  ".join(f"{v:.3e}" for v in row))
    if rep["flagged"]:
        lines.append(f"entries above {rep['threshold']:g}:")
        lines += [f"  {n}[{i},{j}] = {v:+.3e}" for n, i, j, v in rep["flagged"]]
    else:
        lines.append(f"all entries below {rep['threshold']:g}")
    return "\n".join(lines)


def verify(bundle_dir, threshold=None):
    """Recompute residuals of a bundle from its embedded model."""
    path = Path(bundle_dir) / "result.json"
    if not path.exists():
        raise FileNotFoundError(f"no result bundle at {path}")
    with open(path) as f:
        b = json.load(f)
    cfg = b["config"]
    model = C.build_model(cfg)
    thr = cfg["verify"]["threshold"] if threshold is None else threshold
    return residual_report(model, b["P_final"], b["K_final"], thr)


def oracle(cfg, P0=None):
    model = C.build_model(cfg)
    o = cfg["oracle"]
    P = solve_sare_oracle(model, P0, t_end=float(o["t_end"]), rtol=float(o["rtol"]))
    return P, gain(model, P), float(np.linalg.norm(riccati_map(model, P)))
