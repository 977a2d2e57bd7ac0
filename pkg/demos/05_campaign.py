# A small Monte Carlo comparison of RAPS against the reference schedulers.
# The full study uses 1000 drops; 40 keep this quick.

from raps import RunConfig, SystemConfig, PowerModelParams, run, aggregate

cfg = RunConfig(SystemConfig(), PowerModelParams(), rates_bps=(4e6, 10e6, 16e6), drops=40, seed=0)
rows = run(cfg)

print(f"{'rate':>6} {'mode':>5} {'supply W':>9} {'outage':>7} {'2 ant':>6}")
for a in aggregate(rows):
    mt2 = "" if a["frac_mt2"] is None else f"{a['frac_mt2']:.2f}"
    sup = float("nan") if a["supply_mean_w"] is None else a["supply_mean_w"]
    print(f"{a['rate_bps'] / 1e6:6.0f} {a['mode']:>5} {sup:9.1f} {a['outage_prob']:7.2f} {mt2:>6}")
