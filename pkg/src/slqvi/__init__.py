"""Value iteration for continuous-time stochastic LQ control, model-based and data-driven."""

from .data_collect import (
    DataMatrices,
    ItoTriple,
    RankError,
    collect,
    collect_from_simulation,
    model_triple,
    recover_triple,
    synthetic_exact_data,
)
from .model import SlqModel, benchmark, evaluate_cost_mc, is_ms_stabilizing
from .riccati import (
    ConvergenceError,
    SingularityError,
    gain,
    lyapunov_residual,
    riccati_map,
    solve_sare_oracle,
)
from .simulator import (
    ExplorationInput,
    SimConfig,
    default_exploration,
    simulate_closed_loop,
    simulate_open_loop,
)
from .symmat import kron, mat_from_vecs, quad_basis, vec, vecs
from .vi_engine import (
    StepSchedule,
    TrustSetFamily,
    ViConfig,
    ViState,
    run,
    run_model_based,
    run_model_free,
    trust_contains,
    vi_step_model_based,
    vi_step_model_free,
)

__version__ = "0.1.0"

__all__ = [
    "benchmark",
    "collect",
    "collect_from_simulation",
    "ConvergenceError",
    "DataMatrices",
    "default_exploration",
    "evaluate_cost_mc",
    "ExplorationInput",
    "gain",
    "is_ms_stabilizing",
    "ItoTriple",
    "kron",
    "lyapunov_residual",
    "mat_from_vecs",
    "model_triple",
    "quad_basis",
    "RankError",
    "recover_triple",
    "riccati_map",
    "run",
    "run_model_based",
    "run_model_free",
    "SimConfig",
    "simulate_closed_loop",
    "simulate_open_loop",
    "SingularityError",
    "SlqModel",
    "solve_sare_oracle",
    "StepSchedule",
    "synthetic_exact_data",
    "trust_contains",
    "TrustSetFamily",
    "vec",
    "vecs",
    "vi_step_model_based",
    "vi_step_model_free",
    "ViConfig",
    "ViState",
]
