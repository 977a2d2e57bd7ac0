# Least power for a fixed number of bits over a few parallel channels.
#
# Good channels (low patch height) get filled first; a patch stays dry
# when the water never reaches it.

import numpy as np

from raps import iwf_allocate

alpha = np.array([0.2, 0.05, 1.0, 8.0])  # N0 w / eigenvalue, watts
w, tau = 200e3, 1e-3

for bits in (100, 600, 2000):
    res = iwf_allocate(alpha, bits, w, tau)
    print(f"{bits:5d} bit: power {np.round(res.power, 3)}  water {res.water_height:.3f} W  active {res.n_active}")
    delivered = w * tau * np.sum(np.log2(1 + res.power / alpha))
    assert abs(delivered - bits) < 1e-9 * bits
