"""Reference schedulers: constant max power, bandwidth adaptation, DTX only.

All three transmit at the fixed power spectral density ``p_max / N`` on
every subcarrier they use. Subcarrier preferences come from the same
channel metric as the RAPS subcarrier assignment, and delivered bits from
the same per-unit capacity evaluator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelGrid, EigenGrid, SystemConfig, eigen_grid
from .power_model import PowerModelParams
from .step2 import rcg_assign, rcg_metric

__all__ = ["BenchmarkResult", "max_power", "ba_schedule", "dtx_schedule", "unit_bits"]

_BIT_TOL = 1e-9


@dataclass(frozen=True)
class BenchmarkResult:
    mode: str
    m_t: int
    p_t: np.ndarray
    supply_w: float | None
    outage: bool
    slots_slept: int = 0
    bits: np.ndarray | None = None


def unit_bits(eig: np.ndarray, m_t: int, config: SystemConfig, params: PowerModelParams) -> np.ndarray:
    """Bits per resource unit at PSD ``p_max / N`` split evenly over ``m_t`` streams.

    ``eig`` is ``(..., m_t)``; the result drops the last axis.
    """
    p_stream = params.p_max / config.n_subcarriers / m_t
    snr = p_stream * eig / (config.n0_w_per_hz * config.w_hz)
    return config.w_hz * config.tau_s * np.sum(np.log2(1.0 + snr), axis=-1)


def max_power(params: PowerModelParams, t_slots: int = 1, m_t: int = 2) -> BenchmarkResult:
    """Always-on transmission at the full RF budget."""
    return BenchmarkResult("max", m_t, np.full(t_slots, params.p_max), params.max_supply(m_t), False)


def _targets(rates, config):
    k = config.k
    return np.broadcast_to(np.asarray(rates, dtype=float), (k,)) * config.tau_frame_s


def ba_schedule(
    grid: ChannelGrid,
    rates,
    params: PowerModelParams,
    m_t: int,
    config: SystemConfig,
    eigen: EigenGrid | None = None,
) -> BenchmarkResult:
    """Bandwidth adaptation without sleep.

    The frame bit target of each user is spread evenly over the slots; a
    slot's shortfall is carried into the remaining slots. In every slot
    users pick, in index order, their best free subcarriers until their
    slot target is covered. Unused subcarriers are silent but the slot
    still costs ``p0[m_t]``.
    """
    n, t, k = grid.shape
    eigen = eigen if eigen is not None else eigen_grid(grid)
    bits_unit = unit_bits(eigen.for_mode(m_t), m_t, config, params)  # (N, T, K)
    metric = rcg_metric(grid, m_t)
    need = _targets(rates, config).copy()
    got = np.zeros(k)
    used = np.zeros(t, dtype=np.int64)
    for slot in range(t):
        free = np.ones(n, dtype=bool)
        slot_goal = np.maximum(need - got, 0.0) / (t - slot)
        for user in range(k):
            if slot_goal[user] <= 0:
                continue
            cand = np.flatnonzero(free)
            if cand.size == 0:
                break
            cand = cand[np.argsort(-metric[cand, slot, user], kind="stable")]
            cum = np.cumsum(bits_unit[cand, slot, user])
            take = int(np.searchsorted(cum, slot_goal[user] * (1 - _BIT_TOL))) + 1
            take = min(take, cand.size)
            free[cand[:take]] = False
            got[user] += cum[take - 1]
            used[slot] += take
    p_t = used * params.p_max / n
    outage = bool(np.any(got < need * (1 - _BIT_TOL)))
    supply = None if outage else params.p0[m_t] + params.delta_pm * float(np.mean(p_t))
    return BenchmarkResult(f"ba{m_t}", m_t, p_t, supply, outage, 0, got)


def dtx_schedule(
    grid: ChannelGrid,
    rates,
    params: PowerModelParams,
    config: SystemConfig,
    eigen: EigenGrid | None = None,
) -> BenchmarkResult:
    """Full-power bursts on two antennas, then sleep for the rest of the frame.

    Each burst slot splits all ``N`` subcarriers among the users whose
    targets are still open, with equal quotas (remainder to the lowest
    indices) and the subcarrier assignment heuristic.
    """
    n, t, k = grid.shape
    m_t = 2
    eigen = eigen if eigen is not None else eigen_grid(grid)
    bits_unit = unit_bits(eigen.for_mode(m_t), m_t, config, params)
    metric = rcg_metric(grid, m_t)
    need = _targets(rates, config)
    got = np.zeros(k)
    p_t = np.zeros(t)
    for slot in range(t):
        open_users = np.flatnonzero(got < need * (1 - _BIT_TOL))
        if open_users.size == 0:
            break
        q, r = divmod(n, open_users.size)
        quotas = np.full(open_users.size, q)
        quotas[:r] += 1
        sets = rcg_assign(quotas, metric[:, slot, open_users])
        for user, subs in zip(open_users, sets):
            got[user] += bits_unit[subs, slot, user].sum()
        p_t[slot] = params.p_max
    outage = bool(np.any(got < need * (1 - _BIT_TOL)))
    active = int(np.count_nonzero(p_t))
    slept = t - active
    supply = None
    if not outage:
        supply = (active * params.max_supply(m_t) + slept * params.p_sleep) / t
    return BenchmarkResult("dtx", m_t, p_t, supply, outage, slept, got)
