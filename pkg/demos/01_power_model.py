# Supply power of a base station as a function of its RF output.
#
# The model is affine while transmitting and drops to a lower constant
# when the station sleeps. The jump between "on at zero output" and
# "asleep" is what makes short bursts followed by sleep worth it.

import numpy as np

from raps import PowerModelParams, supply_power, energy_efficiency

params = PowerModelParams()
print("max RF power  %.2f W (%.0f dBm)" % (params.p_max, params.p_max_dbm))
print("asleep        %.1f W" % supply_power(params, 1, 0.0))

for m_t in (1, 2):
    p = np.array([1e-6, 1.0, 10.0, params.p_max])
    print(f"M_T={m_t} antennas:", np.round(supply_power(params, m_t, p), 1))

# Same frame, two ways to deliver it: always on at low power, or half the
# time at higher power and asleep for the rest.
always_on = supply_power(params, 1, 2.0)
burst = 0.5 * supply_power(params, 1, 9.0) + 0.5 * params.p_sleep
print(f"always on {always_on:.1f} W vs burst+sleep {burst:.1f} W")

# bit per joule for a 50 Mbit/s cell
print("EE at 300 W: %.3g bit/J" % energy_efficiency(300.0, 50e6))
