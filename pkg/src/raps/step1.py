"""Block-fading resource share, sleep share and antenna selection.

Every user sees one representative channel over the whole band and
frame. Users are served by time sharing: user ``k`` transmits a fraction
``mu_k`` of the frame with equal-power precoding over ``M_T`` antennas,
and the base station sleeps for the leftover share ``mu_S``. The average
supply power

    sum_k mu_k (P0[M_T] + dPM P_k(R_k, mu_k)) + mu_S PS

is convex in the shares, so each antenna mode has a unique optimum; the
cheaper mode wins.

Eigenvalues are handled in noise-normalised form ``eps / (N0 W)`` (1/W),
so ``P * eps_norm / M_T`` is the per-stream SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channel import ChannelGrid, SystemConfig, eigenvalues_2x2, representative_channel
from .power_model import PowerModelParams

__all__ = [
    "MODES",
    "Step1Problem",
    "Step1Solution",
    "power_for_rate",
    "spectral_efficiency",
    "max_spectral_efficiency",
    "min_share",
    "cost",
    "power_feasible",
    "kkt_residual",
    "solve_mode",
    "solve",
    "build_problem",
]

MODES = {"simo": 1, "mimo": 2}
LN2 = math.log(2.0)
_BISECT_ITERS = 80


def _mode_mt(mode) -> int:
    if mode in MODES:
        return MODES[mode]
    if mode in (1, 2):
        return int(mode)
    raise ValueError(f"unknown antenna mode {mode!r}; use 'simo'/'mimo' or 1/2")


@dataclass(frozen=True)
class Step1Problem:
    """Normalised eigenvalues per user and mode, target rates and hardware."""

    eps_simo: np.ndarray  # (K,) or (K, 1)
    eps_mimo: np.ndarray  # (K, 2), descending
    rates: np.ndarray  # (K,) bit/s
    params: PowerModelParams = field(default_factory=PowerModelParams)
    w_total: float = 10e6

    def __post_init__(self):
        simo = np.asarray(self.eps_simo, dtype=float).reshape(-1, 1)
        mimo = np.sort(np.asarray(self.eps_mimo, dtype=float).reshape(-1, 2), axis=1)[:, ::-1]
        rates = np.asarray(self.rates, dtype=float).reshape(-1)
        if not (len(simo) == len(mimo) == len(rates)):
            raise ValueError("eigenvalue and rate vectors must cover the same users")
        if np.any(rates < 0):
            raise ValueError("target rates must be non-negative")
        if np.any(simo <= 0) or np.any(mimo <= 0):
            raise ValueError("normalised eigenvalues must be positive")
        object.__setattr__(self, "eps_simo", simo)
        object.__setattr__(self, "eps_mimo", np.ascontiguousarray(mimo))
        object.__setattr__(self, "rates", rates)

    @property
    def k(self) -> int:
        return len(self.rates)

    def eps(self, mode) -> np.ndarray:
        return self.eps_simo if _mode_mt(mode) == 1 else self.eps_mimo


@dataclass(frozen=True)
class Step1Solution:
    m_t: int
    mu: np.ndarray  # (K+1,), last entry is the sleep share
    p_k: np.ndarray  # (K,) W
    supply_w: float
    feasible: bool
    mode_costs: dict = field(default_factory=dict)

    @property
    def mu_sleep(self) -> float:
        return float(self.mu[-1])


# ---------------------------------------------------------------------------
# link budget


def _power_from_se(eps: np.ndarray, c: np.ndarray) -> np.ndarray:
    """RF power reaching spectral efficiency ``c`` on eigenvalues ``eps`` (rows)."""
    x = np.expm1(c * LN2)
    if eps.shape[-1] == 1:
        return x / eps[..., 0]
    e1, e2 = eps[..., 0], eps[..., 1]
    s = e1 + e2
    # Rationalised root of e1 e2 P^2 + 2 s P - 4 x = 0; no cancellation at small x.
    return 4.0 * x / (s + np.sqrt(s * s + 4.0 * e1 * e2 * x))


def _dpower_dse(eps: np.ndarray, c: np.ndarray, p: np.ndarray) -> np.ndarray:
    two_c = np.exp2(c)
    if eps.shape[-1] == 1:
        return LN2 * two_c / eps[..., 0]
    a1 = 1.0 + 0.5 * p * eps[..., 0]
    a2 = 1.0 + 0.5 * p * eps[..., 1]
    return LN2 * two_c / (0.5 * eps[..., 0] * a2 + 0.5 * eps[..., 1] * a1)


def _as_rows(eps) -> np.ndarray:
    eps = np.asarray(eps, dtype=float)
    return eps.reshape(-1, eps.shape[-1]) if eps.ndim > 1 else eps.reshape(1, -1)


def power_for_rate(mode, eps_norm, rate, mu, w_total):
    """Transmit power for ``rate`` bit/s over a time share ``mu`` of bandwidth ``w_total``.

    ``eps_norm`` holds the normalised eigenvalues: one for ``simo``, two
    (descending) for ``mimo``. Zero rate needs zero power.
    """
    m_t = _mode_mt(mode)
    eps = np.asarray(eps_norm, dtype=float).reshape(-1)
    if len(eps) != m_t:
        raise ValueError(f"mode M_T={m_t} needs {m_t} eigenvalue(s), got {len(eps)}")
    if rate < 0:
        raise ValueError("rate must be non-negative")
    if rate == 0:
        return 0.0
    if mu <= 0:
        raise ValueError("positive rate needs a positive resource share")
    c = rate / (w_total * mu)
    return float(_power_from_se(eps[None, :], np.array([c]))[0])


def spectral_efficiency(mode, eps_norm, p) -> float:
    """Equal-power capacity in bit/s/Hz at total power ``p``."""
    m_t = _mode_mt(mode)
    eps = np.asarray(eps_norm, dtype=float).reshape(-1)
    return float(np.sum(np.log2(1.0 + p / m_t * eps)))


def max_spectral_efficiency(mode, eps, p_max):
    """Per-user spectral efficiency at the full power budget."""
    m_t = _mode_mt(mode)
    eps = _as_rows(eps)
    return np.sum(np.log2(1.0 + p_max / m_t * eps), axis=1)


def min_share(problem: Step1Problem, mode) -> np.ndarray:
    """Smallest share per user that meets its rate within the power budget."""
    c_max = max_spectral_efficiency(mode, problem.eps(mode), problem.params.p_max)
    return problem.rates / (problem.w_total * c_max)


def _user_powers(problem, mode, mu_users):
    p = np.zeros(problem.k)
    active = problem.rates > 0
    with np.errstate(divide="ignore", over="ignore"):
        c = np.where(mu_users > 0, problem.rates / (problem.w_total * np.where(mu_users > 0, mu_users, 1)), np.inf)
        p[active] = _power_from_se(problem.eps(mode)[active], c[active])
    return p


def _check_simplex(mu, k):
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (k + 1,):
        raise ValueError(f"share vector must have K+1={k + 1} entries")
    if np.any(mu < -1e-12) or abs(mu.sum() - 1.0) > 1e-9:
        raise ValueError("shares must be non-negative and sum to one")
    return np.clip(mu, 0.0, None)


def cost(problem: Step1Problem, mode, mu) -> float:
    """Average supply power of a share vector ``mu`` (last entry: sleep)."""
    m_t = _mode_mt(mode)
    mu = _check_simplex(mu, problem.k)
    prm = problem.params
    users = mu[:-1]
    if np.any((problem.rates > 0) & (users == 0)):
        return math.inf
    p = _user_powers(problem, mode, users)
    served = problem.rates > 0
    total = np.sum(users[served] * (prm.p0[m_t] + prm.delta_pm * p[served]))
    # Zero-rate users that still hold a share idle at P0.
    total += np.sum(users[~served]) * prm.p0[m_t]
    return float(total + mu[-1] * prm.p_sleep)


def power_feasible(problem: Step1Problem, mode, mu) -> bool:
    """True if every user's power under ``mu`` respects the budget."""
    mu = _check_simplex(mu, problem.k)
    users = mu[:-1]
    if np.any((problem.rates > 0) & (users == 0)):
        return False
    p = _user_powers(problem, mode, users)
    return bool(np.all(p <= problem.params.p_max * (1 + 1e-9)))


def _psi(eps, c):
    """``c P'(c) - P(c)``: minus the derivative of ``mu P`` w.r.t. ``mu``."""
    p = _power_from_se(eps, c)
    return c * _dpower_dse(eps, c, p) - p


def kkt_residual(problem: Step1Problem, mode, mu) -> float:
    """Norm of the projected gradient of the reduced cost at ``mu``.

    The reduced problem eliminates the sleep share and keeps, per served
    user, ``mu_k`` in ``[mu_min_k, 1]`` with ``sum mu_k <= 1``. The
    projection is onto the tangent cone of that polytope at ``mu``.
    """
    m_t = _mode_mt(mode)
    prm = problem.params
    mu = _check_simplex(mu, problem.k)
    served = problem.rates > 0
    if not served.any():
        return 0.0
    users = mu[:-1][served]
    eps = problem.eps(mode)[served]
    c = problem.rates[served] / (problem.w_total * users)
    grad = prm.p0[m_t] - prm.p_sleep - prm.delta_pm * _psi(eps, c)
    lo = min_share(problem, mode)[served]
    tol = 1e-9
    at_lo = users <= lo * (1 + tol) + tol
    at_hi = users >= 1 - tol
    free = ~(at_lo | at_hi)
    lam = 0.0
    if users.sum() >= 1 - tol:
        if free.any():
            lam = max(0.0, -float(np.mean(grad[free])))
        elif at_lo.any():
            lam = max(0.0, float(np.max(-grad[at_lo])))
    g = grad + lam
    g = np.where(at_lo & (g > 0), 0.0, g)
    g = np.where(at_hi & (g < 0), 0.0, g)
    return float(np.linalg.norm(g))


def _se_at_level(eps, level, c_lo, c_hi):
    """Spectral efficiency where ``psi`` reaches ``level``, clipped to ``[c_lo, c_hi]``."""
    lo, hi = c_lo.copy(), c_hi.copy()
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        below = _psi(eps, mid) < level
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    c = 0.5 * (lo + hi)
    c = np.where(_psi(eps, c_lo) >= level, c_lo, c)
    return np.where(_psi(eps, c_hi) <= level, c_hi, c)


def solve_mode(problem: Step1Problem, mode) -> Step1Solution:
    """Optimal shares for one antenna mode.

    Stationarity of the reduced cost says the optimal spectral efficiency
    ``c_k`` of each unconstrained user solves
    ``psi_k(c_k) = (P0 - PS + lam) / dPM``, where ``lam >= 0`` prices the
    share budget. ``c_k`` is clipped to ``[R_k / W, c_max_k]`` (share at
    most one, power at most ``p_max``). ``lam`` is zero unless the shares
    would overrun the frame, in which case it is found by root search.

    Returns a solution with ``feasible=False`` when even the minimum
    shares exceed the frame.
    """
    m_t = _mode_mt(mode)
    prm = problem.params
    k = problem.k
    served = problem.rates > 0
    mu = np.zeros(k + 1)
    if not served.any():
        mu[-1] = 1.0
        return Step1Solution(m_t, mu, np.zeros(k), prm.p_sleep, True)

    rates = problem.rates[served]
    eps = problem.eps(m_t)[served]
    c_max = max_spectral_efficiency(m_t, eps, prm.p_max)
    c_lo = rates / problem.w_total
    mu_min = rates / (problem.w_total * c_max)
    if mu_min.sum() > 1.0 or np.any(c_lo > c_max):
        mu[:-1][served] = mu_min
        return Step1Solution(m_t, mu, np.full(k, np.nan), math.inf, False)

    base = (prm.p0[m_t] - prm.p_sleep) / prm.delta_pm

    def shares(lam):
        c = _se_at_level(eps, base + lam / prm.delta_pm, c_lo, c_max)
        return rates / (problem.w_total * c)

    users = shares(0.0)
    if users.sum() > 1.0:
        lam_hi = max(1.0, float(prm.delta_pm * np.max(_psi(eps, c_max))))
        while shares(lam_hi).sum() > 1.0:
            lam_hi *= 2.0
        lam = brentq(lambda x: shares(x).sum() - 1.0, 0.0, lam_hi, xtol=1e-14, rtol=1e-15, maxiter=500)
        users = shares(lam)
        # Absorb the residual of the root search into the sleep share.
        users *= min(1.0, 1.0 / users.sum())
    mu[:-1][served] = users
    mu[-1] = max(0.0, 1.0 - users.sum())
    p = _user_powers(problem, m_t, mu[:-1])
    p = np.minimum(p, prm.p_max)
    return Step1Solution(m_t, mu, p, cost(problem, m_t, mu), True)


def solve(problem: Step1Problem) -> Step1Solution:
    """Solve both antenna modes and keep the cheaper feasible one.

    Ties within 1e-9 W go to the single-antenna mode. If neither mode is
    feasible the returned solution is flagged infeasible (outage).
    """
    simo = solve_mode(problem, 1)
    mimo = solve_mode(problem, 2)
    costs = {1: simo.supply_w, 2: mimo.supply_w}
    if not simo.feasible and not mimo.feasible:
        best = mimo
    elif not mimo.feasible or (simo.feasible and simo.supply_w <= mimo.supply_w + 1e-9):
        best = simo
    else:
        best = mimo
    return Step1Solution(best.m_t, best.mu, best.p_k, best.supply_w, best.feasible, costs)


def build_problem(
    grid: ChannelGrid,
    config: SystemConfig,
    rates,
    params: PowerModelParams | None = None,
    method: str = "center",
) -> Step1Problem:
    """Step-1 problem from each user's representative channel matrix."""
    reps = np.stack([representative_channel(grid, u, method) for u in range(grid.shape[2])])
    norm = config.n0_w_per_hz * config.bandwidth_hz
    simo = np.sum(np.abs(reps[:, :, 0]) ** 2, axis=-1) / norm
    mimo = eigenvalues_2x2(reps) / norm
    rates = np.broadcast_to(np.asarray(rates, dtype=float), (grid.shape[2],))
    # Guard against an exactly singular representative matrix.
    mimo = np.maximum(mimo, np.finfo(float).tiny)
    return Step1Problem(simo, mimo, rates, params or PowerModelParams(), config.bandwidth_hz)
