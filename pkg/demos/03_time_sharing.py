# Block-fading resource sharing: how long each user is served, how long
# the station sleeps, and whether a second antenna pays off.

import numpy as np

from raps import SystemConfig, PowerModelParams, generate, build_problem, solve, solve_mode

cfg = SystemConfig()
params = PowerModelParams()
grid = generate(cfg, (0, 3))

for rate in (2e6, 8e6, 16e6, 20e6):
    problem = build_problem(grid, cfg, rate, params)
    best = solve(problem)
    one, two = solve_mode(problem, 1), solve_mode(problem, 2)
    print(
        f"{rate / 1e6:4.0f} Mbit/s/user: 1 ant {one.supply_w:6.1f} W, 2 ant {two.supply_w:6.1f} W"
        f" -> M_T={best.m_t}, sleep share {best.mu_sleep:.2f}"
    )

# shares of the last case
print("user shares:", np.round(best.mu[:-1], 3))
print("RF power while serving each user [W]:", np.round(best.p_k, 2))
