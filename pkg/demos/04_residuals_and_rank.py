"""Two diagnostics: how far a candidate is from solving the equation, and
whether the collected data can identify the unknowns at all.
"""

import numpy as np

from slqvi import collect_from_simulation, default_exploration, SimConfig
from slqvi import gain, lyapunov_residual, riccati_map
from slqvi.model import benchmark

model = benchmark()
P = np.array([[0.2722091, -0.0427624], [-0.0427624, 0.2505643]])
K = np.array([[-0.0134984, 0.0298522]])

print("R1(P):\n", np.round(riccati_map(model, P), 7))
print("R2(P, K):\n", np.round(lyapunov_residual(model, P, K), 7))
print("gain implied by P:", np.round(gain(model, P), 7))

# R2 with the implied gain reproduces R1 exactly.
print("identity gap:", np.abs(lyapunov_residual(model, P, gain(model, P)) - riccati_map(model, P)).max())

# Data with too few intervals cannot pin down the unknowns.
times = 0.1 * np.arange(21)
rich = collect_from_simulation(model, default_exploration(model, 20), times, SimConfig(dt=1e-3, paths=200))
print("\nexploring input, 20 intervals -> rank ok:", rich.rank_ok)

silent = default_exploration(model, 20)
silent = type(silent)(silent.amplitudes * 0, silent.frequencies, silent.phases, 0.0)
poor = collect_from_simulation(model, silent, times, SimConfig(dt=1e-3, paths=200))
print("zero input, 20 intervals      -> rank ok:", poor.rank_ok,
      f"(sigma ratio {poor.min_singular_value / poor.max_singular_value:.1e})")
