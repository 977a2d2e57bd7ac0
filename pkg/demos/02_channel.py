# A seeded frequency-selective, slowly time-varying channel grid.

import numpy as np

from raps import PowerModelParams, SystemConfig, generate, eigen_grid, representative_channel
from raps.channel import ar1_coefficient

cfg = SystemConfig()
grid = generate(cfg, (0, 0))  # (master seed, drop)
print("h shape (N, T, K, rx, tx):", grid.h.shape)
print("distances [m]:", np.round(grid.distance_m, 1))
print("slot-to-slot correlation: %.5f" % ar1_coefficient(cfg))

eig = eigen_grid(grid)
# per-subcarrier SNR with the full RF budget spread evenly over the band
p_sub = PowerModelParams().p_max / cfg.n_subcarriers
snr_db = 10 * np.log10(p_sub * eig.mimo[..., 0] / (cfg.n0_w_per_hz * cfg.w_hz))
print("strongest-eigenmode SNR per user, dB (median over the frame):")
print(np.round(np.median(snr_db, axis=(0, 1)), 1))

# ratio of the two eigenvalues says how much a second stream is worth
ratio = eig.mimo[..., 1] / eig.mimo[..., 0]
print("median eigenvalue ratio lambda2/lambda1: %.3f" % np.median(ratio))

# A single matrix stands in for the whole frame in the first step
for how in ("center", "mean", "median"):
    h = representative_channel(grid, 0, how)
    print(f"{how:>6}: |h|_F^2 = {np.sum(np.abs(h) ** 2):.3e}")

# identical seed -> identical grid
assert np.array_equal(generate(cfg, (0, 0)).h, grid.h)
