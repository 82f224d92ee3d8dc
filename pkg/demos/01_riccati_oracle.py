"""Solving the stochastic Riccati equation by integrating its forward flow.

The flow starts from any positive semidefinite matrix and settles on the
maximal solution. We start it from three places and watch them agree.
"""

import numpy as np

from slqvi import gain, is_ms_stabilizing, riccati_map, solve_sare_oracle
from slqvi.model import benchmark
from slqvi.riccati import riccati_flow

model = benchmark()

solutions = {s: solve_sare_oracle(model, s * np.eye(model.n)) for s in (0.0, 1.0, 10.0)}
for s, P in solutions.items():
    print(f"P0 = {s:4.1f} I  ->  residual {np.linalg.norm(riccati_map(model, P)):.1e}")

P_star = solutions[0.0]
print("\nmaximal solution:\n", np.round(P_star, 7))
K = gain(model, P_star)
print("optimal gain:", np.round(K, 7), " mean-square stabilizing:", is_ms_stabilizing(model, K))

# Starting from zero the flow climbs; the smallest eigenvalue of each increment stays >= 0.
traj = riccati_flow(model, np.zeros((2, 2)), np.linspace(0, 40, 9))
steps = [np.linalg.eigvalsh(b - a)[0] for a, b in zip(traj, traj[1:])]
print("\nsmallest eigenvalue of successive increments:", np.round(steps, 6))
