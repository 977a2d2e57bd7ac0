"""Linear base-station supply power model.

Maps the RF power radiated in a time slot to the power drawn at the
supply: an affine law while transmitting and a flat sleep consumption
when the slot carries no energy at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "POWER_FLOOR_W",
    "PowerModelParams",
    "SlotPowerTrace",
    "dbm_to_watt",
    "watt_to_dbm",
    "snap",
    "supply_power",
    "frame_supply_power",
    "energy_efficiency",
]

# Powers below this are treated as exactly zero (sleep branch).
POWER_FLOOR_W = 1e-12


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * np.log10(watt) + 30.0


def snap(p):
    """Zero out floating-point dust below ``POWER_FLOOR_W``."""
    p = np.asarray(p, dtype=float)
    return np.where(np.abs(p) < POWER_FLOOR_W, 0.0, p)


@dataclass(frozen=True)
class PowerModelParams:
    """Hardware constants of the supply power model.

    Attributes
    ----------
    p0 : mapping {1: W, 2: W}
        Supply power when active with zero RF output, per number of
        active transmit chains.
    delta_pm : float
        Slope of supply power versus RF power (dimensionless).
    p_sleep : float
        Supply power in a micro-sleep (DTX) slot, W.
    p_max : float
        RF power budget per slot, W.
    """

    p0: Mapping[int, float] = field(default_factory=lambda: {1: 185.0, 2: 260.0})
    delta_pm: float = 4.7
    p_sleep: float = 150.0
    p_max: float = dbm_to_watt(46.0)

    def __post_init__(self):
        p0 = {int(k): float(v) for k, v in dict(self.p0).items()}
        if set(p0) != {1, 2}:
            raise ValueError(f"p0 must be given for antenna counts 1 and 2, got {sorted(p0)}")
        object.__setattr__(self, "p0", p0)
        if not (self.p_sleep < p0[1] < p0[2]):
            raise ValueError("power levels must satisfy p_sleep < p0[1] < p0[2]")
        if self.delta_pm <= 0:
            raise ValueError("delta_pm must be positive")
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")

    @classmethod
    def from_dbm(cls, p_max_dbm: float = 46.0, **kwargs) -> "PowerModelParams":
        return cls(p_max=dbm_to_watt(p_max_dbm), **kwargs)

    @property
    def p_max_dbm(self) -> float:
        return watt_to_dbm(self.p_max)

    def max_supply(self, m_t: int = 2) -> float:
        """Supply power at full RF output (constant max-power operation)."""
        return self.p0[_check_mt(m_t)] + self.delta_pm * self.p_max

    def to_dict(self) -> dict:
        return {
            "p0_1_w": self.p0[1],
            "p0_2_w": self.p0[2],
            "delta_pm": self.delta_pm,
            "p_sleep_w": self.p_sleep,
            "p_max_dbm": self.p_max_dbm,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, float]) -> "PowerModelParams":
        base = cls()
        return cls(
            p0={1: float(d.get("p0_1_w", base.p0[1])), 2: float(d.get("p0_2_w", base.p0[2]))},
            delta_pm=float(d.get("delta_pm", base.delta_pm)),
            p_sleep=float(d.get("p_sleep_w", base.p_sleep)),
            p_max=dbm_to_watt(float(d["p_max_dbm"])) if "p_max_dbm" in d else base.p_max,
        )


@dataclass(frozen=True)
class SlotPowerTrace:
    """RF power per time slot of one frame, for a fixed antenna count."""

    p_t: Sequence[float]
    m_t: int

    def __post_init__(self):
        p = snap(np.atleast_1d(np.asarray(self.p_t, dtype=float)))
        if p.ndim != 1 or p.size == 0:
            raise ValueError("trace must be a non-empty 1-D sequence of slot powers")
        p.setflags(write=False)
        object.__setattr__(self, "p_t", p)
        _check_mt(self.m_t)

    def __len__(self):
        return len(self.p_t)


def _check_mt(m_t) -> int:
    if m_t not in (1, 2):
        raise ValueError(f"unsupported antenna configuration M_T={m_t}; only 1 or 2")
    return int(m_t)


def supply_power(params: PowerModelParams, m_t: int, p_tx):
    """Supply power for RF output ``p_tx`` (scalar or array) with ``m_t`` chains.

    Raises ``ValueError`` if any power is negative or exceeds the budget.
    """
    p0 = params.p0[_check_mt(m_t)]
    p = snap(p_tx)
    if np.any(p < 0):
        raise ValueError("RF power must be non-negative")
    # Tolerate relative rounding at the budget edge.
    if np.any(p > params.p_max * (1 + 1e-12)):
        raise ValueError(f"RF power exceeds budget p_max={params.p_max:.6g} W")
    out = np.where(p > 0, p0 + params.delta_pm * p, params.p_sleep)
    return float(out) if out.ndim == 0 else out


def frame_supply_power(params: PowerModelParams, trace: SlotPowerTrace) -> float:
    """Mean supply power over the slots of a frame; idle slots sleep."""
    if len(trace) == 0:
        raise ValueError("empty power trace")
    return float(np.mean(supply_power(params, trace.m_t, trace.p_t)))


def energy_efficiency(supply_w: float, sum_rate: float) -> float:
    """Delivered bits per Joule of supply energy."""
    if supply_w <= 0:
        raise ValueError("supply power must be positive")
    if sum_rate < 0:
        raise ValueError("sum rate must be non-negative")
    return sum_rate / supply_w
