"""Seeded synthetic MIMO-OFDM channel grids.

Each user gets a macro-cell NLOS pathloss, log-normal shadowing and a
Rayleigh tapped-delay-line channel with an exponential power delay
profile. Taps evolve slot to slot as a first-order autoregressive
process whose coefficient follows Jakes' autocorrelation J0(2 pi fD tau).

Randomness is drawn from numpy's PCG64 generator. A drop seed (an int or
a tuple of ints such as ``(master_seed, drop_index)``) is turned into a
``numpy.random.SeedSequence``; that sequence is spawned once per user and
each child feeds its own generator. Users therefore draw from independent
substreams, so the grid is bitwise reproducible for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import j0

__all__ = [
    "SystemConfig",
    "ChannelGrid",
    "EigenGrid",
    "pathloss_db",
    "ar1_coefficient",
    "generate",
    "eigen_grid",
    "eigenvalues_2x2",
    "representative_channel",
    "dump_grid",
    "load_grid",
]

M_T_MAX = 2
SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class SystemConfig:
    """OFDMA frame dimensions, noise level, cell geometry and fading knobs."""

    k: int = 10
    n_subcarriers: int = 50
    t_slots: int = 10
    w_hz: float = 200e3
    tau_s: float = 1e-3
    n0_w_per_hz: float = 4e-21
    m_r: int = 2
    cell_radius_m: float = 250.0
    min_distance_m: float = 40.0
    shadowing_std_db: float = 8.0
    # Extra fixed loss on top of pathloss (penetration, cable, ...); 0 by default.
    extra_loss_db: float = 0.0
    n_taps: int = 6
    tap_spacing_s: float = 100e-9
    pdp_decay_db_per_tap: float = 2.0
    velocity_mps: float = 3.0
    carrier_hz: float = 2e9

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("need at least one user")
        if self.n_subcarriers < self.k:
            raise ValueError("need at least as many subcarriers as users")
        if self.t_slots < 1:
            raise ValueError("need at least one time slot")
        if self.m_r != 2:
            raise ValueError("only two receive antennas are supported")
        if not 0 < self.min_distance_m < self.cell_radius_m:
            raise ValueError("require 0 < min_distance_m < cell_radius_m")
        if self.w_hz <= 0 or self.tau_s <= 0 or self.n0_w_per_hz <= 0:
            raise ValueError("bandwidth, slot duration and noise density must be positive")
        if self.n_taps < 1:
            raise ValueError("need at least one channel tap")

    @property
    def tau_frame_s(self) -> float:
        return self.t_slots * self.tau_s

    @property
    def bandwidth_hz(self) -> float:
        return self.n_subcarriers * self.w_hz

    @property
    def noise_w(self) -> float:
        """Noise power over the full band."""
        return self.n0_w_per_hz * self.bandwidth_hz


@dataclass(frozen=True)
class ChannelGrid:
    """Channel matrices ``h[n, t, k]`` of shape ``(M_R, 2)`` plus large-scale state.

    Column ``j`` of each matrix belongs to transmit antenna ``j``; a
    single-antenna configuration uses column 0 only.
    """

    h: np.ndarray  # (N, T, K, M_R, 2) complex
    distance_m: np.ndarray  # (K,)
    shadowing_db: np.ndarray  # (K,)
    gain: np.ndarray  # (K,) linear large-scale power gain

    @property
    def shape(self):
        return self.h.shape[:3]


@dataclass(frozen=True)
class EigenGrid:
    """Descending Gram eigenvalues per resource unit for each antenna mode."""

    simo: np.ndarray  # (N, T, K, 1)
    mimo: np.ndarray  # (N, T, K, 2)

    def for_mode(self, m_t: int) -> np.ndarray:
        if m_t == 1:
            return self.simo
        if m_t == 2:
            return self.mimo
        raise ValueError(f"unsupported antenna configuration M_T={m_t}")


def pathloss_db(distance_m):
    """Macro-cell NLOS pathloss 128.1 + 37.6 log10(d/km)."""
    return 128.1 + 37.6 * np.log10(np.asarray(distance_m) / 1000.0)


def ar1_coefficient(config: SystemConfig) -> float:
    doppler = config.velocity_mps * config.carrier_hz / SPEED_OF_LIGHT
    return float(j0(2 * math.pi * doppler * config.tau_s))


def _power_delay_profile(config: SystemConfig) -> np.ndarray:
    pdp = 10.0 ** (-config.pdp_decay_db_per_tap * np.arange(config.n_taps) / 10.0)
    return pdp / pdp.sum()


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (int, np.integer)):
        return np.random.SeedSequence(int(seed))
    return np.random.SeedSequence([int(s) for s in seed])


def _crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def generate(config: SystemConfig, seed) -> ChannelGrid:
    """Draw user positions, shadowing and a frequency-selective fading grid.

    Parameters
    ----------
    config : SystemConfig
    seed : int, tuple of int or SeedSequence
        Drop seed. Identical seeds give bitwise identical grids.
    """
    n, t, k = config.n_subcarriers, config.t_slots, config.k
    pdp = _power_delay_profile(config)
    rho = ar1_coefficient(config)
    innov = math.sqrt(max(0.0, 1.0 - rho * rho))
    delays = config.tap_spacing_s * np.arange(config.n_taps)
    # (N, L) tap-to-subcarrier transform
    dft = np.exp(-2j * math.pi * np.outer(np.arange(n) * config.w_hz, delays))

    h = np.empty((n, t, k, config.m_r, M_T_MAX), dtype=complex)
    dist = np.empty(k)
    shadow = np.empty(k)
    r2_min, r2_max = config.min_distance_m**2, config.cell_radius_m**2
    for user, child in enumerate(_seed_sequence(seed).spawn(k)):
        rng = np.random.Generator(np.random.PCG64(child))
        dist[user] = math.sqrt(rng.uniform(r2_min, r2_max))
        shadow[user] = rng.normal(0.0, config.shadowing_std_db)
        scale = np.sqrt(pdp)[:, None, None]
        taps = np.empty((t, config.n_taps, config.m_r, M_T_MAX), dtype=complex)
        taps[0] = scale * _crandn(rng, (config.n_taps, config.m_r, M_T_MAX))
        for slot in range(1, t):
            z = scale * _crandn(rng, (config.n_taps, config.m_r, M_T_MAX))
            taps[slot] = rho * taps[slot - 1] + innov * z
        h[:, :, user] = np.einsum("nl,tlrc->ntrc", dft, taps)

    gain = 10.0 ** (-(pathloss_db(dist) + config.extra_loss_db + shadow) / 10.0)
    h *= np.sqrt(gain)[None, None, :, None, None]
    return ChannelGrid(h=h, distance_m=dist, shadowing_db=shadow, gain=gain)


def eigenvalues_2x2(h: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of ``H^H H`` for a stack of ``(..., M_R, 2)`` matrices.

    Closed form from the trace and determinant of the 2x2 Gram matrix; the
    smaller root is taken as det/lambda_1 to avoid cancellation.
    """
    c0, c1 = h[..., :, 0], h[..., :, 1]
    a = np.sum(np.abs(c0) ** 2, axis=-1)
    d = np.sum(np.abs(c1) ** 2, axis=-1)
    b = np.sum(np.conj(c0) * c1, axis=-1)
    half_gap = np.sqrt(0.25 * (a - d) ** 2 + np.abs(b) ** 2)
    lam1 = 0.5 * (a + d) + half_gap
    if h.shape[-2] == 2:
        # det(H^H H) = |det H|^2 for square H; no cancellation.
        det = np.abs(c0[..., 0] * c1[..., 1] - c0[..., 1] * c1[..., 0]) ** 2
    else:
        det = np.maximum(a * d - np.abs(b) ** 2, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        lam2 = np.where(lam1 > 0, det / np.where(lam1 > 0, lam1, 1.0), 0.0)
    return np.stack([lam1, lam2], axis=-1)


def eigen_grid(grid: ChannelGrid) -> EigenGrid:
    h = grid.h
    simo = np.sum(np.abs(h[..., 0]) ** 2, axis=-1)[..., None]
    return EigenGrid(simo=simo, mimo=eigenvalues_2x2(h))


def representative_channel(grid: ChannelGrid, user: int, method: str = "center") -> np.ndarray:
    """Single block-fading channel matrix standing in for a user's whole frame."""
    n, t, k = grid.shape
    if not 0 <= user < k:
        raise IndexError(f"user {user} out of range for K={k}")
    hk = grid.h[:, :, user]
    if method == "center":
        # 1-based ceil(N/2), ceil(T/2)
        return hk[math.ceil(n / 2) - 1, math.ceil(t / 2) - 1].copy()
    if method == "mean":
        return hk.mean(axis=(0, 1))
    if method == "median":
        return np.median(hk.real, axis=(0, 1)) + 1j * np.median(hk.imag, axis=(0, 1))
    raise ValueError(f"unknown channel selection method {method!r}; use center, mean or median")


_DUMP_HEADER = "n,t,k,rx,tx,re,im"


def dump_grid(grid: ChannelGrid, path) -> None:
    """Write a grid as columnar text.

    Comment lines ``# user,<k>,<distance_m>,<shadowing_db>,<gain>`` carry
    the large-scale state; data rows are ``n,t,k,rx,tx,re,im`` with
    zero-based indices and ``repr``-exact floats.
    """
    with open(path, "w", newline="\n") as f:
        for u in range(grid.shape[2]):
            meta = (float(grid.distance_m[u]), float(grid.shadowing_db[u]), float(grid.gain[u]))
            f.write(f"# user,{u}," + ",".join(map(repr, meta)) + "\n")
        f.write(_DUMP_HEADER + "\n")
        for idx in np.ndindex(grid.h.shape):
            v = complex(grid.h[idx])
            f.write(",".join(map(str, idx)) + f",{v.real!r},{v.imag!r}\n")


def load_grid(path) -> ChannelGrid:
    users: list[Sequence[float]] = []
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# user,"):
                _, u, d, s, g = line[2:].split(",")
                users.append((float(d), float(s), float(g)))
            elif line == _DUMP_HEADER or line.startswith("#"):
                continue
            else:
                rows.append(line.split(","))
    idx = np.array([[int(x) for x in r[:5]] for r in rows])
    vals = np.array([float(r[5]) + 1j * float(r[6]) for r in rows])
    h = np.zeros(tuple(idx.max(axis=0) + 1), dtype=complex)
    h[tuple(idx.T)] = vals
    meta = np.array(users, dtype=float).reshape(-1, 3)
    return ChannelGrid(h=h, distance_m=meta[:, 0], shadowing_db=meta[:, 1], gain=meta[:, 2])
