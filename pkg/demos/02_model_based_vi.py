"""Value iteration with the model in hand.

No stabilizing gain is needed to start. A decaying step size and a family of
growing trust sets keep the iterates bounded.
"""

import numpy as np

from slqvi import ViConfig, run_model_based, solve_sare_oracle
from slqvi.model import benchmark

model = benchmark()
P_star = solve_sare_oracle(model)

cfg = ViConfig.for_weights(model.Q, stop_tol=1e-5)
res = run_model_based(model, cfg)

print(f"converged={res.converged} after {res.iterations} iterations, {res.resets} resets")
print("P_final:\n", np.round(res.P_final, 7))
print("K_final:", np.round(res.K_final, 7))
print(f"distance to oracle: {np.linalg.norm(res.P_final - P_star):.2e}")

hist = np.asarray(res.residual_history)
for k in (0, 10, 100, 1000, len(hist) - 1):
    print(f"  k={k:5d}  stop residual {hist[k]:.3e}")
