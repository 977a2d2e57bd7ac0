"""Monte Carlo campaign engine and single-link trade-off curves."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .benchmarks import ba_schedule, dtx_schedule, max_power
from .channel import SystemConfig, eigen_grid, generate
from .power_model import PowerModelParams, energy_efficiency
from .step1 import build_problem, solve
from .step2 import allocate_frame, quantize

__all__ = [
    "ALL_MODES",
    "RunConfig",
    "DropResult",
    "run_drop",
    "run",
    "aggregate",
    "emit",
    "TradeoffCurves",
    "tradeoff_curve",
    "load_config",
    "config_from_mapping",
    "write_tradeoff_csv",
]

log = logging.getLogger(__name__)

ALL_MODES = ("raps", "ba1", "ba2", "dtx", "max")
CHANNEL_SELECT = ("center", "mean", "median")

_SYSTEM_KEYS = {f.name for f in fields(SystemConfig)}
_POWER_KEYS = {"p0_1_w", "p0_2_w", "delta_pm", "p_sleep_w", "p_max_dbm"}


@dataclass(frozen=True)
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    params: PowerModelParams = field(default_factory=PowerModelParams)
    rates_bps: tuple = (4e6, 8e6, 12e6, 16e6, 20e6)
    drops: int = 100
    seed: int = 0
    modes: tuple = ("raps", "ba1", "ba2", "dtx", "max")
    channel_select: str = "center"
    # Optional per-user rate weights; user k gets rate * weights[k].
    rate_weights: tuple | None = None
    workers: int = 1

    def __post_init__(self):
        if self.drops < 1:
            raise ValueError("drop count must be at least 1")
        if not self.modes:
            raise ValueError("mode list is empty")
        bad = [m for m in self.modes if m not in ALL_MODES]
        if bad:
            raise ValueError(f"unknown modes {bad}; choose from {ALL_MODES}")
        if not self.rates_bps or any(r < 0 for r in self.rates_bps):
            raise ValueError("rates must be a non-empty list of non-negative values")
        if self.channel_select not in CHANNEL_SELECT:
            raise ValueError(f"channel selection must be one of {CHANNEL_SELECT}")
        if self.rate_weights is not None and len(self.rate_weights) != self.system.k:
            raise ValueError("rate_weights needs one entry per user")

    def user_rates(self, rate: float) -> np.ndarray:
        if self.rate_weights is None:
            return np.full(self.system.k, float(rate))
        return float(rate) * np.asarray(self.rate_weights, dtype=float)


@dataclass(frozen=True)
class DropResult:
    drop: int
    seed: int
    mode: str
    rate_bps: float
    m_t: int | None
    supply_w: float | None
    step1_w: float | None
    outage: str  # none | step1 | step2 | target
    t_sleep: int | None
    sum_rate_bps: float | None
    ee_bit_per_j: float | None


DROP_COLUMNS = [f.name for f in fields(DropResult)]
AGG_COLUMNS = [
    "rate_bps",
    "mode",
    "drops",
    "outage_prob",
    "supply_mean_w",
    "supply_std_w",
    "step1_mean_w",
    "step1_gap_mean",
    "t_sleep_mean",
    "t_sleep_std",
    "frac_mt2",
    "ee_mean_bit_per_j",
    "sum_rate_mean_bps",
]


def _raps(drop, seed, rate, rates, grid, eig, cfg: RunConfig, sink=None) -> DropResult:
    sys_, prm = cfg.system, cfg.params
    problem = build_problem(grid, sys_, rates, prm, cfg.channel_select)
    s1 = solve(problem)
    if not s1.feasible:
        return DropResult(drop, seed, "raps", rate, None, None, None, "step1", None, None, None)
    plan = quantize(s1, sys_.n_subcarriers, sys_.t_slots, sys_.k)
    alloc = allocate_frame(plan, grid, s1, rates, sys_, prm, eig)
    if sink is not None:
        sink.append((drop, rate, alloc))
    if alloc.outage:
        return DropResult(drop, seed, "raps", rate, s1.m_t, None, s1.supply_w, "step2", plan.t_sleep, None, None)
    achieved = float(alloc.bits.sum() / sys_.tau_frame_s)
    ee = energy_efficiency(alloc.supply_w, float(rates.sum()))
    return DropResult(drop, seed, "raps", rate, s1.m_t, alloc.supply_w, s1.supply_w, "none", plan.t_sleep, achieved, ee)


def _bench(drop, seed, mode, rate, rates, grid, eig, cfg: RunConfig) -> DropResult:
    sys_, prm = cfg.system, cfg.params
    if mode == "max":
        res = max_power(prm, sys_.t_slots)
        achieved = None
    elif mode == "dtx":
        res = dtx_schedule(grid, rates, prm, sys_, eig)
        achieved = float(res.bits.sum() / sys_.tau_frame_s)
    else:
        res = ba_schedule(grid, rates, prm, int(mode[-1]), sys_, eig)
        achieved = float(res.bits.sum() / sys_.tau_frame_s)
    if res.outage:
        return DropResult(drop, seed, mode, rate, res.m_t, None, None, "target", None, achieved, None)
    ee = energy_efficiency(res.supply_w, float(rates.sum()))
    return DropResult(drop, seed, mode, rate, res.m_t, res.supply_w, None, "none", res.slots_slept, achieved, ee)


def run_drop(cfg: RunConfig, drop: int, sink: list | None = None) -> list[DropResult]:
    """All rates and modes for one channel drop (paired comparison).

    If ``sink`` is given, ``(drop, rate, FrameAllocation)`` is appended for
    every RAPS frame that got past the first step.
    """
    grid = generate(cfg.system, (cfg.seed, drop))
    eig = eigen_grid(grid)
    out = []
    for rate in cfg.rates_bps:
        rates = cfg.user_rates(rate)
        for mode in cfg.modes:
            if mode == "raps":
                out.append(_raps(drop, cfg.seed, float(rate), rates, grid, eig, cfg, sink))
            else:
                out.append(_bench(drop, cfg.seed, mode, float(rate), rates, grid, eig, cfg))
    return out


def _sort_key(r: DropResult):
    return (r.rate_bps, ALL_MODES.index(r.mode), r.drop)


def run(cfg: RunConfig, sink: list | None = None) -> list[DropResult]:
    """Every (rate, drop, mode) combination, sorted by rate, mode, drop.

    ``sink`` collects RAPS frame allocations (see ``run_drop``); it forces
    a single process.
    """
    drops = range(cfg.drops)
    if cfg.workers > 1 and sink is None:
        with ProcessPoolExecutor(cfg.workers) as pool:
            chunks = list(pool.map(run_drop, [cfg] * cfg.drops, drops, chunksize=max(1, cfg.drops // (4 * cfg.workers))))
    else:
        chunks = [run_drop(cfg, d, sink) for d in drops]
    rows = [r for chunk in chunks for r in chunk]
    return sorted(rows, key=_sort_key)


def _best_ba(rows: Sequence[DropResult]) -> list[DropResult]:
    """Per drop, the cheaper feasible of BA with one or two antennas."""
    by_key = {}
    for r in rows:
        if r.mode in ("ba1", "ba2"):
            by_key.setdefault((r.rate_bps, r.drop), []).append(r)
    out = []
    for key in sorted(by_key):
        pair = by_key[key]
        if len(pair) != 2:
            continue
        ok = [r for r in pair if r.outage == "none"]
        if ok:
            best = min(ok, key=lambda r: (r.supply_w, r.m_t))
        else:
            best = pair[-1]
        out.append(replace(best, mode="ba"))
    return out


def _mean(xs):
    return float(np.mean(xs)) if len(xs) else None


def _std(xs):
    return float(np.std(xs)) if len(xs) else None


def aggregate(rows: Sequence[DropResult]) -> list[dict]:
    """Per (rate, mode) statistics.

    Outage rows count towards the outage probability only. When both BA
    variants ran, an extra ``ba`` mode holds the per-drop best antenna
    count.
    """
    rows = list(rows) + _best_ba(rows)
    order = list(ALL_MODES) + ["ba"]
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.rate_bps, r.mode), []).append(r)
    out = []
    for rate, mode in sorted(groups, key=lambda km: (km[0], order.index(km[1]))):
        g = groups[(rate, mode)]
        ok = [r for r in g if r.outage == "none"]
        sup = [r.supply_w for r in ok]
        gaps = [abs(r.supply_w - r.step1_w) / r.step1_w for r in ok if r.step1_w is not None]
        ts = [r.t_sleep for r in ok if r.t_sleep is not None]
        mts = [r.m_t for r in g if r.m_t is not None and r.outage != "step1"]
        out.append(
            {
                "rate_bps": rate,
                "mode": mode,
                "drops": len(g),
                "outage_prob": 1.0 - len(ok) / len(g),
                "supply_mean_w": _mean(sup),
                "supply_std_w": _std(sup),
                "step1_mean_w": _mean([r.step1_w for r in ok if r.step1_w is not None]),
                "step1_gap_mean": _mean(gaps),
                "t_sleep_mean": _mean(ts),
                "t_sleep_std": _std(ts),
                "frac_mt2": _mean([m == 2 for m in mts]),
                "ee_mean_bit_per_j": _mean([r.ee_bit_per_j for r in ok]),
                "sum_rate_mean_bps": _mean([r.sum_rate_bps for r in ok if r.sum_rate_bps is not None]),
            }
        )
    return out


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def emit(rows: Sequence[DropResult], out_dir, fmt: str = "csv", aggregates: list[dict] | None = None) -> list[Path]:
    """Write ``drops.<fmt>`` and ``aggregate.<fmt>`` into ``out_dir``.

    Column order is ``DROP_COLUMNS`` / ``AGG_COLUMNS``; missing values are
    empty cells (CSV) or ``null`` (JSON). Floats use ``repr`` so a re-emit
    of the same results is byte-identical.
    """
    if not rows:
        raise ValueError("nothing to emit")
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    aggregates = aggregate(rows) if aggregates is None else aggregates
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    drop_dicts = [asdict(r) for r in rows]
    paths = []
    for name, cols, recs in (("drops", DROP_COLUMNS, drop_dicts), ("aggregate", AGG_COLUMNS, aggregates)):
        path = out_dir / f"{name}.{fmt}"
        if fmt == "csv":
            with open(path, "w", newline="") as f:
                wr = csv.writer(f, lineterminator="\n")
                wr.writerow(cols)
                for rec in recs:
                    wr.writerow([_cell(rec[c]) for c in cols])
        else:
            with open(path, "w") as f:
                json.dump([{c: rec[c] for c in cols} for rec in recs], f, indent=1)
                f.write("\n")
        paths.append(path)
    return paths


@dataclass(frozen=True)
class TradeoffCurves:
    """Supply power versus transmit time share ``phi`` for one link.

    Entries are NaN where the strategy cannot deliver the target.
    """

    phi: np.ndarray
    pc_only: np.ndarray
    dtx_only: np.ndarray
    joint: np.ndarray
    phi_at_pmax: float
    feasible: bool

    def argmin(self, curve: str) -> float:
        y = getattr(self, curve)
        if np.all(np.isnan(y)):
            return math.nan
        return float(self.phi[np.nanargmin(y)])


DEFAULT_PHI_GRID = np.linspace(0.005, 1.0, 200)


def tradeoff_curve(spectral_target: float, params: PowerModelParams, gain: float, phi=None, m_t: int = 1) -> TradeoffCurves:
    """Single block-fading link sending ``spectral_target`` bit/s/Hz on average.

    ``gain`` is the noise-normalised channel gain (1/W): the SNR per watt
    of RF power. Transmitting only for a share ``phi`` needs spectral
    efficiency ``target / phi`` and hence power ``(2**(target/phi) - 1) / gain``.

    * ``pc_only``: that power while sending, idle at ``p0`` otherwise.
    * ``dtx_only``: full power while sending, asleep otherwise; valid
      once ``phi`` is long enough to deliver the target.
    * ``joint``: adapted power while sending, asleep otherwise.

    The default grid is 200 evenly spaced points on [0.005, 1].
    """
    if spectral_target <= 0 or gain <= 0:
        raise ValueError("target and gain must be positive")
    phi = DEFAULT_PHI_GRID if phi is None else np.asarray(phi, dtype=float)
    if np.any((phi <= 0) | (phi > 1)):
        raise ValueError("phi must lie in (0, 1]")
    p0 = params.p0[m_t]
    c_max = math.log2(1.0 + gain * params.p_max)
    with np.errstate(over="ignore", invalid="ignore"):
        p_tx = np.expm1(spectral_target / phi * math.log(2.0)) / gain
        active = p0 + params.delta_pm * p_tx
    ok = p_tx <= params.p_max
    pc = np.where(ok, phi * active + (1 - phi) * p0, np.nan)
    joint = np.where(ok, phi * active + (1 - phi) * params.p_sleep, np.nan)
    dtx = np.where(phi * c_max >= spectral_target * (1 - 1e-12), phi * params.max_supply(m_t) + (1 - phi) * params.p_sleep, np.nan)
    return TradeoffCurves(phi, pc, dtx, joint, spectral_target / c_max, bool(c_max >= spectral_target))


def _parse_value(raw: str):
    raw = raw.strip()
    for conv in (int, float):
        try:
            return conv(raw)
        except ValueError:
            pass
    return raw


def load_config(path, **overrides) -> RunConfig:
    """Read a flat ``key = value`` file (``#`` comments) into a ``RunConfig``.

    System keys follow ``SystemConfig`` field names; power keys are
    ``p0_1_w, p0_2_w, delta_pm, p_sleep_w, p_max_dbm``. Run keys:
    ``drops, seed, rates_mbps, modes, channel_select, rate_weights,
    workers``; list values are comma separated.
    """
    kv = {}
    if path is not None:
        with open(path) as f:
            for lineno, line in enumerate(f, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                sep = "=" if "=" in line else ":"
                if sep not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, val = line.split(sep, 1)
                kv[key.strip().lower()] = val.strip()
    kv.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(kv)


def _as_list(v, conv):
    if isinstance(v, str):
        return tuple(conv(x) for x in v.replace(";", ",").split(",") if x.strip())
    if isinstance(v, Iterable):
        return tuple(conv(x) for x in v)
    return (conv(v),)


def config_from_mapping(kv: dict) -> RunConfig:
    unknown = set(kv) - _SYSTEM_KEYS - _POWER_KEYS - {
        "drops",
        "seed",
        "rates_mbps",
        "modes",
        "channel_select",
        "rate_weights",
        "workers",
    }
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    sys_kw = {}
    for k in _SYSTEM_KEYS & set(kv):
        v = _parse_value(kv[k]) if isinstance(kv[k], str) else kv[k]
        sys_kw[k] = v
    power_kw = {k: float(kv[k]) for k in _POWER_KEYS & set(kv)}
    run_kw = {}
    if "drops" in kv:
        run_kw["drops"] = int(kv["drops"])
    if "seed" in kv:
        run_kw["seed"] = int(kv["seed"])
    if "workers" in kv:
        run_kw["workers"] = int(kv["workers"])
    if "rates_mbps" in kv:
        run_kw["rates_bps"] = tuple(r * 1e6 for r in _as_list(kv["rates_mbps"], float))
    if "modes" in kv:
        run_kw["modes"] = _as_list(kv["modes"], lambda s: str(s).strip().lower())
    if "channel_select" in kv:
        run_kw["channel_select"] = str(kv["channel_select"]).strip().lower()
    if "rate_weights" in kv:
        run_kw["rate_weights"] = _as_list(kv["rate_weights"], float)
    return RunConfig(system=SystemConfig(**sys_kw), params=PowerModelParams.from_dict(power_kw), **run_kw)


def write_tradeoff_csv(curves: TradeoffCurves, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(["phi", "pc_only_w", "dtx_only_w", "joint_w"])
        for row in zip(curves.phi, curves.pc_only, curves.dtx_only, curves.joint):
            wr.writerow(["" if math.isnan(x) else repr(float(x)) for x in row])
    return path

