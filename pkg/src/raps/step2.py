"""Mapping block-fading shares onto the OFDMA grid.

Three stages per frame:

1. ``quantize`` turns the real shares into integer resource counts, a
   number of trailing sleep slots and per-slot subcarrier quotas.
2. ``rcg_assign`` hands out subcarriers slot by slot: best user first,
   then over-quota users trade their closest-metric subcarriers to
   under-quota users.
3. ``iwf_allocate`` finds, per user, the least total power that delivers
   the frame bit target over the user's (resource, eigenchannel) patches.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelGrid, EigenGrid, SystemConfig, eigen_grid
from .power_model import PowerModelParams, SlotPowerTrace, frame_supply_power, snap

__all__ = [
    "ResourcePlan",
    "IWFResult",
    "FrameAllocation",
    "quantize",
    "rcg_metric",
    "rcg_assign",
    "iwf_allocate",
    "patch_heights",
    "bits_delivered",
    "allocate_frame",
    "write_allocation_csv",
]

_ROUND_TOL = 1e-9
LN2 = math.log(2.0)


@dataclass(frozen=True)
class ResourcePlan:
    m_k: np.ndarray  # (K,) resource units per user over the frame
    t_sleep: int
    t_active: int
    m_kt: np.ndarray  # (K, T) subcarriers per user and slot; zero in sleep slots
    corner_case: bool = False

    def check(self, n: int, t: int) -> None:
        """Raise ``AssertionError`` if any conservation invariant is broken."""
        assert self.t_sleep + self.t_active == t
        assert 0 <= self.t_sleep <= t
        assert int(self.m_k.sum()) + n * self.t_sleep == n * t
        assert np.all(self.m_kt >= 0) and np.all(self.m_k >= 0)
        sums = self.m_kt.sum(axis=0)
        assert np.all(sums[: self.t_active] == n)
        assert np.all(sums[self.t_active :] == 0)
        assert np.array_equal(self.m_kt.sum(axis=1), self.m_k)


def _round_robin(total: int, eligible: np.ndarray, k: int) -> np.ndarray:
    """Deal ``total`` units over ``eligible`` users in index order, wrapping."""
    out = np.zeros(k, dtype=np.int64)
    idx = np.flatnonzero(eligible)
    if total <= 0 or idx.size == 0:
        return out
    q, r = divmod(total, idx.size)
    out[idx] = q
    out[idx[:r]] += 1
    return out


def quantize(step1, n: int, t: int, k: int | None = None) -> ResourcePlan:
    """Integer resource plan from a share vector (``Step1Solution`` or array).

    Normal load rounds each user's share up and pays for the rounding with
    sleep slots. When the sleep share is too small to absorb one extra
    unit per user the frame stays fully active and shares are rounded
    down instead. Leftover units go round-robin to users with a positive
    share.

    Per-slot quotas are ``floor(m_k / T_active)`` plus a cyclic spread of
    the remainders: user remainders are laid out in user order and dealt
    to slots in turn, so each slot gets exactly ``N`` subcarriers and each
    user's quotas add up to ``m_k`` over the frame.
    """
    mu = np.asarray(getattr(step1, "mu", step1), dtype=float)
    k = len(mu) - 1 if k is None else k
    if len(mu) != k + 1:
        raise ValueError(f"share vector must have K+1={k + 1} entries")
    users, mu_s = np.clip(mu[:k], 0.0, None), max(0.0, float(mu[k]))
    nt = n * t
    corner = False

    if not np.any(users > 0):
        m_k = np.zeros(k, dtype=np.int64)
        t_sleep = t
    elif t * n * mu_s < k:
        corner = True
        m_k = np.floor(users * nt + _ROUND_TOL).astype(np.int64)
        t_sleep = 0
    else:
        m_k = np.ceil(users * nt - _ROUND_TOL).astype(np.int64)
        t_sleep = int(math.floor((nt * mu_s - k) / n + _ROUND_TOL))
        t_sleep = min(max(t_sleep, 0), t - 1)

    rem = nt - int(m_k.sum()) - n * t_sleep
    while rem < 0 and t_sleep > 0:
        t_sleep -= 1
        rem += n
    while rem < 0:
        j = int(np.argmax(m_k))
        m_k[j] -= 1
        rem += 1
    m_k = m_k + _round_robin(rem, users > 0, k)

    t_active = t - t_sleep
    m_kt = np.zeros((k, t), dtype=np.int64)
    if t_active > 0:
        base = m_k // t_active
        extra = m_k - base * t_active
        m_kt[:, :t_active] = base[:, None]
        owners = np.repeat(np.arange(k), extra)
        for pos, user in enumerate(owners):
            m_kt[user, pos % t_active] += 1
    return ResourcePlan(m_k, int(t_sleep), int(t_active), m_kt, corner)


def rcg_metric(grid: ChannelGrid, m_t: int) -> np.ndarray:
    """``|mean of the used channel-matrix entries|^2`` per (n, t, k)."""
    return np.abs(grid.h[..., :m_t].mean(axis=(-2, -1))) ** 2


def rcg_assign(quotas: Sequence[int], metrics: np.ndarray) -> list[np.ndarray]:
    """Subcarrier sets for one slot.

    Parameters
    ----------
    quotas : (K,) int
        Target subcarrier count per user; must sum to ``N``.
    metrics : (N, K) array
        Channel quality of subcarrier ``n`` for user ``k``.

    Returns
    -------
    list of K sorted index arrays partitioning ``range(N)``.

    Ties go to the lowest user index, then the lowest subcarrier index.
    """
    metrics = np.asarray(metrics, dtype=float)
    quotas = np.asarray(quotas, dtype=np.int64)
    n, k = metrics.shape
    if quotas.shape != (k,) or int(quotas.sum()) != n or np.any(quotas < 0):
        raise ValueError(f"quotas must be {k} non-negative counts summing to N={n}")
    owner = np.argmax(metrics, axis=1)
    count = np.bincount(owner, minlength=k)
    for user in range(k):
        while count[user] > quotas[user]:
            mine = np.flatnonzero(owner == user)
            under = np.flatnonzero(count < quotas)
            # rows: candidate receivers, cols: subcarriers held by `user`
            gap = np.abs(metrics[np.ix_(mine, under)].T - metrics[mine, user][None, :])
            li, ni = np.unravel_index(np.argmin(gap), gap.shape)
            receiver, sub = under[li], mine[ni]
            owner[sub] = receiver
            count[user] -= 1
            count[receiver] += 1
    return [np.flatnonzero(owner == user) for user in range(k)]


@dataclass(frozen=True)
class IWFResult:
    power: np.ndarray  # per patch, input order
    nu: float | None  # Lagrange water level, None for a zero target
    water_height: float  # nu * w * tau / ln 2, in W
    n_active: int


def iwf_allocate(alpha, b_target: float, w: float, tau: float) -> IWFResult:
    """Least-power allocation meeting ``b_target`` bits over parallel patches.

    ``alpha`` are the patch heights ``N0 w / eps`` (W). Patches are filled
    best first; after adding ``j`` patches the water height ``h`` solves
    ``sum_i w tau log2(h / alpha_i) = b_target``. The search stops as soon
    as ``h`` is at or below the next patch.

    Raises
    ------
    ValueError
        On a negative target, an empty or non-positive patch list.
    RuntimeError
        If the delivered bits miss the target by more than 1e-9 relative.
    """
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    if b_target < 0:
        raise ValueError("bit target must be non-negative")
    if alpha.size == 0:
        raise ValueError("need at least one patch")
    if np.any(~(alpha > 0)):
        raise ValueError("patch heights must be positive")
    if b_target == 0:
        return IWFResult(np.zeros_like(alpha), None, 0.0, 0)

    order = np.argsort(alpha, kind="stable")
    log_a = np.log2(alpha[order])
    b = b_target / (w * tau)
    acc = 0.0
    j = 0
    while True:
        acc += log_a[j]
        j += 1
        log_h = (b + acc) / j
        if j == alpha.size or log_h <= log_a[j]:
            break
    h = float(np.exp2(log_h))
    power = np.zeros_like(alpha)
    power[order[:j]] = np.maximum(h - alpha[order[:j]], 0.0)
    if math.isfinite(h):
        got = float(np.sum(np.log2(h) - log_a[:j]))
        if abs(got - b) > 1e-9 * b:
            raise RuntimeError(f"inverse water-filling missed its bit target ({got} vs {b} bit/Hz/s)")
    return IWFResult(power, h * LN2 / (w * tau), h, j)


def patch_heights(eig: np.ndarray, n0: float, w: float) -> np.ndarray:
    """``N0 w / eps``; zero eigenvalues map to infinitely high patches."""
    with np.errstate(divide="ignore"):
        return np.where(eig > 0, n0 * w / np.where(eig > 0, eig, 1.0), np.inf)


def bits_delivered(power: np.ndarray, eig: np.ndarray, owner: np.ndarray, config: SystemConfig) -> np.ndarray:
    """Bits per user over the frame.

    ``power`` and ``eig`` are ``(N, T, K_or_1, E)``-compatible arrays of
    per-eigenchannel power and eigenvalue for the owning user, shaped
    ``(N, T, E)``; ``owner`` is ``(T, N)`` with -1 for unused units.
    """
    snr = power * eig / (config.n0_w_per_hz * config.w_hz)
    per_unit = config.w_hz * config.tau_s * np.sum(np.log2(1.0 + snr), axis=-1)  # (N, T)
    out = np.zeros(config.k)
    mask = owner.T >= 0
    np.add.at(out, owner.T[mask], per_unit[mask])
    return out


@dataclass(frozen=True)
class FrameAllocation:
    m_t: int
    owner: np.ndarray  # (T, N) user per unit, -1 in sleep slots
    power: np.ndarray  # (N, T, M_T) W per eigenchannel of the owning user
    eig: np.ndarray  # (N, T, M_T) eigenvalues of the owning user
    t_sleep: int
    p_t: np.ndarray  # (T,) RF power per slot
    bits: np.ndarray  # (K,) delivered bits
    b_target: np.ndarray  # (K,)
    nu: list
    outage: bool
    supply_w: float | None

    def sets(self, t: int) -> list[np.ndarray]:
        k = len(self.bits)
        return [np.flatnonzero(self.owner[t] == user) for user in range(k)]

    def rates(self, tau_frame: float) -> np.ndarray:
        return self.bits / tau_frame


def allocate_frame(
    plan: ResourcePlan,
    grid: ChannelGrid,
    step1,
    rates,
    config: SystemConfig,
    params: PowerModelParams,
    eigen: EigenGrid | None = None,
) -> FrameAllocation:
    """Subcarrier assignment and inverse water-filling for one frame.

    Sleep slots are the last ``plan.t_sleep`` slots. A slot whose summed
    RF power exceeds the budget marks the frame as an outage (supply power
    ``None``); no reallocation is attempted.
    """
    n, t, k = grid.shape
    m_t = int(step1.m_t)
    rates = np.broadcast_to(np.asarray(rates, dtype=float), (k,))
    eigen = eigen if eigen is not None else eigen_grid(grid)
    eig_all = eigen.for_mode(m_t)  # (N, T, K, M_T)
    metric = rcg_metric(grid, m_t)

    owner = np.full((t, n), -1, dtype=np.int64)
    for slot in range(plan.t_active):
        for user, subs in enumerate(rcg_assign(plan.m_kt[:, slot], metric[:, slot, :])):
            owner[slot, subs] = user

    # Eigenvalues of whichever user owns each unit.
    eig = np.zeros((n, t, m_t))
    nn, tt = np.nonzero(owner.T >= 0)
    eig[nn, tt] = eig_all[nn, tt, owner.T[nn, tt]]

    b_target = rates * config.tau_frame_s
    power = np.zeros((n, t, m_t))
    nus = [None] * k
    outage = False
    alpha_all = patch_heights(eig, config.n0_w_per_hz, config.w_hz)
    for user in range(k):
        if b_target[user] == 0:
            continue
        un, ut = np.nonzero(owner.T == user)
        alpha = alpha_all[un, ut].reshape(-1)
        usable = np.isfinite(alpha)
        if not usable.any():
            outage = True
            continue
        res = iwf_allocate(alpha[usable], b_target[user], config.w_hz, config.tau_s)
        p = np.zeros(alpha.size)
        p[usable] = res.power
        power[un, ut] = p.reshape(-1, m_t)
        nus[user] = res.nu

    power = snap(power)
    p_t = power.sum(axis=(0, 2))
    if not np.all(np.isfinite(p_t)) or np.any(p_t > params.p_max * (1 + 1e-9)):
        outage = True
    with np.errstate(invalid="ignore", over="ignore"):
        bits = bits_delivered(power, eig, owner, config)
    supply = None
    if not outage:
        supply = frame_supply_power(params, SlotPowerTrace(np.minimum(p_t, params.p_max), m_t))
    return FrameAllocation(m_t, owner, power, eig, plan.t_sleep, p_t, bits, b_target, nus, outage, supply)


def write_allocation_csv(allocs: Sequence[tuple[int, FrameAllocation]], path) -> None:
    """Per-unit powers as ``drop,k,t,n,e,power_w`` (zero-based indices)."""
    with open(path, "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(["drop", "k", "t", "n", "e", "power_w"])
        for drop, alloc in allocs:
            t, n = alloc.owner.shape
            for slot in range(t):
                for sub in range(n):
                    user = alloc.owner[slot, sub]
                    if user < 0:
                        continue
                    for e in range(alloc.m_t):
                        wr.writerow([drop, int(user), slot, sub, e, repr(float(alloc.power[sub, slot, e]))])
