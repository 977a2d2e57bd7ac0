"""End-to-end acceptance checks.

The campaign (1000 drops at 4, 10 and 16 Mbit/s per user, RAPS and the
three benchmark schedulers) is run once per module and shared. Each test
records a PASS/FAIL line that is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from raps.channel import SystemConfig, generate
from raps.harness import RunConfig, aggregate, emit, run, tradeoff_curve
from raps.power_model import PowerModelParams
from raps.step1 import Step1Problem, power_for_rate, solve_mode
from raps.step2 import iwf_allocate, quantize, write_allocation_csv

from oracles import grid_search_k2, iwf_bisection

pytestmark = pytest.mark.slow

DROPS = 1000
RATES = (4e6, 10e6, 16e6)
W_TOTAL = 10e6


@pytest.fixture(scope="module")
def campaign():
    cfg = RunConfig(SystemConfig(), PowerModelParams(), rates_bps=RATES, drops=DROPS, seed=0, modes=("raps", "ba1", "ba2", "dtx"))
    sink = []
    t0 = time.perf_counter()
    rows = run(cfg, sink)
    return cfg, rows, sink, time.perf_counter() - t0


def _by(rows, mode, rate):
    return {r.drop: r for r in rows if r.mode == mode and r.rate_bps == rate}


def test_c01_iwf_oracle(report):
    rng = np.random.default_rng(101)
    w, tau = 200e3, 1e-3
    worst_p = worst_id = 0.0
    t0 = time.perf_counter()
    for _ in range(1000):
        m = int(rng.integers(2, 5))
        alpha = 10 ** rng.uniform(-4, 0, m)
        b = rng.uniform(10.0, 5000.0)
        res = iwf_allocate(alpha, b, w, tau)
        ref, _ = iwf_bisection(alpha, b / (w * tau))
        worst_p = max(worst_p, abs(res.power.sum() - ref.sum()) / ref.sum())
        got = w * tau * np.sum(np.log2(1 + res.power / alpha))
        worst_id = max(worst_id, abs(got - b) / b)
    dt = time.perf_counter() - t0
    ok = worst_p <= 1e-6 and worst_id <= 1e-9 and dt <= 10
    report(1, ok, f"IWF vs oracle: max rel power err {worst_p:.2e}, identity {worst_id:.2e}, {dt:.1f} s")
    assert ok


def _random_k2(rng, mode):
    h = (rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))) / math.sqrt(2)
    scale = 10 ** rng.uniform(2, 5.5, 2)
    simo = np.sum(np.abs(h[:, :, 0]) ** 2, axis=-1) * scale
    mimo = np.linalg.eigvalsh(np.conj(np.swapaxes(h, -1, -2)) @ h)[:, ::-1] * scale[:, None]
    rates = rng.uniform(0.5e6, 30e6, 2)
    return Step1Problem(simo, mimo, rates, PowerModelParams(), W_TOTAL)


def test_c02_step1_grid_oracle(report):
    rng = np.random.default_rng(202)
    prm = PowerModelParams()
    worst = 0.0
    t0 = time.perf_counter()
    for mode in (1, 2):
        done = 0
        while done < 200:
            pr = _random_k2(rng, mode)
            ref, _ = grid_search_k2(mode, pr.eps(mode), pr.rates, prm.p0[mode], prm.delta_pm, prm.p_sleep, prm.p_max, W_TOTAL)
            if not math.isfinite(ref):
                continue
            s = solve_mode(pr, mode)
            worst = max(worst, abs(s.supply_w - ref) / ref if s.feasible else math.inf)
            done += 1
    dt = time.perf_counter() - t0
    ok = worst <= 5e-3 and dt <= 60
    report(2, ok, f"Step-1 vs grid oracle on 2x200 problems: max rel gap {worst:.2e}, {dt:.1f} s")
    assert ok


def test_c03_convexity(report):
    rng = np.random.default_rng(303)
    p_max = PowerModelParams().p_max
    worst = math.inf
    for _ in range(100):
        mode = int(rng.integers(1, 3))
        eps = np.sort(10 ** rng.uniform(1, 5, mode))[::-1]
        c_max = np.sum(np.log2(1 + p_max / mode * eps))
        rate = rng.uniform(0.02, 0.95) * c_max * W_TOTAL
        mus = np.linspace(rate / (W_TOTAL * c_max), 1.0, 1000)
        f = np.array([m * power_for_rate(mode, eps, rate, m, W_TOTAL) for m in mus])
        worst = min(worst, float(np.min(f[2:] - 2 * f[1:-1] + f[:-2])))
    ok = worst >= -1e-9
    report(3, ok, f"min second difference of mu*P over 100 draws: {worst:.2e}")
    assert ok


def _owner_eigs(h, m_t):
    if m_t == 1:
        return np.sum(np.abs(h[..., 0]) ** 2, axis=-1)[..., None]
    gram = np.conj(np.swapaxes(h, -1, -2)) @ h
    return np.linalg.eigvalsh(gram)[..., ::-1]


def test_c04_rate_fulfillment(campaign, tmp_path, report):
    cfg, rows, sink, _ = campaign
    sc = cfg.system
    ok_rows = {(r.drop, r.rate_bps) for r in rows if r.mode == "raps" and r.outage == "none"}
    worst_short = worst_eq = 0.0
    checked = 0
    for rate in RATES:
        allocs = [(d, a) for d, r, a in sink if r == rate and (d, r) in ok_rows]
        path = tmp_path / f"alloc_{rate:g}.csv"
        write_allocation_csv(allocs, path)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        target = rate * sc.tau_frame_s
        for drop, _ in allocs:
            sel = data[data[:, 0] == drop]
            k, t, n, e = (sel[:, i].astype(int) for i in range(1, 5))
            m_t = int(e.max()) + 1
            eig = _owner_eigs(generate(sc, (cfg.seed, drop)).h, m_t)[n, t, k, e]
            unit = sc.w_hz * sc.tau_s * np.log2(1 + sel[:, 5] * eig / (sc.n0_w_per_hz * sc.w_hz))
            bits = np.bincount(k, weights=unit, minlength=sc.k)
            worst_short = max(worst_short, float(np.max((target - bits) / target)))
            worst_eq = max(worst_eq, float(np.max(np.abs(bits - target) / target)))
            checked += 1
    ok = checked == len(ok_rows) and worst_short <= 1e-9 and worst_eq <= 1e-9
    report(4, ok, f"{checked} frames re-evaluated from CSV powers: max shortfall {worst_short:.1e}, max |rel err| {worst_eq:.1e}")
    assert ok


def _paired_means(rows, rate):
    raps, dtx = _by(rows, "raps", rate), _by(rows, "dtx", rate)
    ba1, ba2 = _by(rows, "ba1", rate), _by(rows, "ba2", rate)
    s = {"raps": [], "dtx": [], "ba": []}
    for d in raps:
        ba = [b.supply_w for b in (ba1[d], ba2[d]) if b.outage == "none"]
        if raps[d].outage != "none" or dtx[d].outage != "none" or not ba:
            continue
        s["raps"].append(raps[d].supply_w)
        s["dtx"].append(dtx[d].supply_w)
        s["ba"].append(min(ba))
    return {k: float(np.mean(v)) for k, v in s.items()}, len(s["raps"])


def test_c05_benchmark_ordering(campaign, report):
    cfg, rows, _, elapsed = campaign
    ok = elapsed <= 600
    parts = []
    for rate in (10e6, 16e6):
        m, used = _paired_means(rows, rate)
        saving = 1 - m["raps"] / m["ba"]
        good = m["raps"] <= m["dtx"] <= m["ba"] <= 447.1 and 0.20 <= saving <= 0.45
        ok &= good and used >= 0.9 * DROPS
        parts.append(f"{rate / 1e6:g} Mbps: RAPS {m['raps']:.1f} <= DTX {m['dtx']:.1f} <= BA {m['ba']:.1f} W, saving {saving:.1%} ({used} drops)")
    report(5, ok, "; ".join(parts) + f"; campaign {elapsed:.0f} s")
    assert ok


def test_c06_antenna_adaptation(campaign, report):
    _, rows, _, _ = campaign
    frac = {}
    for rate in (4e6, 16e6):
        mts = [r.m_t for r in rows if r.mode == "raps" and r.rate_bps == rate and r.m_t is not None]
        frac[rate] = float(np.mean(np.array(mts) == 2))
    ok = frac[16e6] >= 0.95 and frac[4e6] <= 0.5
    report(6, ok, f"share of drops using two antennas: {frac[16e6]:.3f} at 16 Mbps (need >= 0.95), {frac[4e6]:.3f} at 4 Mbps (need <= 0.5)")
    assert ok


def test_c07_step_consistency(campaign, report):
    _, rows, _, _ = campaign
    gaps = [abs(r.supply_w - r.step1_w) / r.step1_w for r in rows if r.mode == "raps" and r.outage == "none"]
    gap = float(np.mean(gaps))
    ok = gap <= 0.10
    report(7, ok, f"mean |realised - estimated| / estimated supply over {len(gaps)} frames: {gap:.2%}")
    assert ok


def test_c08_tradeoff_dominance(report):
    rng = np.random.default_rng(808)
    phi = np.linspace(1e-3, 1.0, 2000)
    dominated = interior = 0
    tried = 0
    while tried < 50:
        prm = PowerModelParams(
            p0={1: rng.uniform(100, 200), 2: 250.0},
            delta_pm=rng.uniform(1, 10),
            p_sleep=rng.uniform(20, 95),
            p_max=rng.uniform(5, 80),
        )
        target, gain = rng.uniform(0.2, 5), 10 ** rng.uniform(-0.5, 3)
        c = tradeoff_curve(target, prm, gain, phi)
        if not c.feasible:
            continue
        tried += 1
        j = np.nanmin(c.joint)
        dominated += j <= np.nanmin(c.pc_only) + 1e-12 and j <= np.nanmin(c.dtx_only) + 1e-12
        i = int(np.nanargmin(c.joint))
        first = int(np.flatnonzero(~np.isnan(c.joint))[0])
        interior += first < i < phi.size - 1
    ok = dominated == 50 and interior >= 1
    report(8, ok, f"joint curve minimum dominates in {dominated}/50 links; interior minimiser in {interior}")
    assert ok


def test_c09_determinism(tmp_path, report):
    cfg = RunConfig(SystemConfig(), PowerModelParams(), rates_bps=(4e6, 16e6), drops=10, seed=7)
    blobs = []
    for sub in ("a", "b"):
        sink = []
        rows = run(cfg, sink)
        paths = emit(rows, tmp_path / sub, "csv", aggregate(rows))
        write_allocation_csv([(d, a) for d, _, a in sink], tmp_path / sub / "alloc.csv")
        blobs.append([p.read_bytes() for p in paths] + [(tmp_path / sub / "alloc.csv").read_bytes()])
    ok = blobs[0] == blobs[1]
    report(9, ok, f"two runs, {len(blobs[0])} CSV files, byte-identical: {ok}")
    assert ok


def test_c10_quantization_fuzz(report):
    rng = np.random.default_rng(1010)
    bad = corner = 0
    for _ in range(100_000):
        k = int(rng.integers(1, 16))
        n = int(rng.integers(k, 80))
        t = int(rng.integers(1, 16))
        mu = rng.dirichlet(np.ones(k + 1) * rng.choice([0.2, 1.0, 5.0]))
        if rng.random() < 0.1:
            mu[rng.integers(k)] = 0.0
            mu /= mu.sum()
        plan = quantize(mu, n, t, k)
        try:
            plan.check(n, t)
            want_corner = bool(np.any(mu[:k] > 0)) and t * n * mu[k] < k
            assert plan.corner_case == want_corner
            if plan.corner_case:
                assert plan.t_sleep == 0
            assert np.all(plan.m_k[mu[:k] == 0] == 0)
        except AssertionError:
            bad += 1
        corner += plan.corner_case
    ok = bad == 0
    report(10, ok, f"100000 random plans, {bad} invariant violations, {corner} took the low-sleep branch")
    assert ok
