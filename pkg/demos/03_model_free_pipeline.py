"""Learning the optimal controller from simulated trajectories only.

The learner sees ensemble averages of states and inputs, never A, B, C or D.
It runs a few seconds on one core with 10^4 paths.
"""

import time

import numpy as np

from slqvi import (
    SimConfig,
    ViConfig,
    collect_from_simulation,
    default_exploration,
    run_model_free,
    solve_sare_oracle,
)
from slqvi.model import benchmark

model = benchmark()
intervals = 20
times = 0.1 * np.arange(intervals + 1)
exploration = default_exploration(model, intervals)

t0 = time.perf_counter()
data = collect_from_simulation(model, exploration, times, SimConfig(dt=1e-3, paths=10_000, seed=0))
print(f"collected {intervals} intervals in {time.perf_counter() - t0:.1f}s")
print(f"rank ok: {data.rank_ok}  singular value ratio {data.min_singular_value / data.max_singular_value:.2e}")

res = run_model_free(data, model.Q, model.R, ViConfig.for_weights(model.Q, stop_tol=1e-5))
P_star = solve_sare_oracle(model)
print(f"converged={res.converged} in {res.iterations} iterations")
print("learned P:\n", np.round(res.P_final, 5))
print("oracle  P:\n", np.round(P_star, 5))
print(f"error {np.linalg.norm(res.P_final - P_star):.2e}")
