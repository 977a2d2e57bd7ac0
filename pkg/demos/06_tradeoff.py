# One link, one average rate: power control alone, sleep alone, or both.
# Sending faster for less time costs RF power but buys sleep.

import numpy as np

from raps import PowerModelParams, tradeoff_curve

params = PowerModelParams()
c = tradeoff_curve(1.8, params, gain=25.0)

for name in ("pc_only", "dtx_only", "joint"):
    y = getattr(c, name)
    print(f"{name:>8}: min {np.nanmin(y):6.1f} W at phi = {c.argmin(name):.3f}")
print(f"full RF power is reached at phi = {c.phi_at_pmax:.3f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name in ("pc_only", "dtx_only", "joint"):
        ax.plot(c.phi, getattr(c, name), label=name)
    ax.set_xlabel("share of time transmitting")
    ax.set_ylabel("supply power [W]")
    ax.legend()
    fig.tight_layout()
    fig.savefig("tradeoff.png", dpi=120)
    print("wrote tradeoff.png")
