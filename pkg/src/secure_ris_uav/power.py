"""Closed-form secrecy power control with a dual bisection on the average budget."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import channel, csi
from .channel import ChannelRealization
from .scenario import Scenario

log = logging.getLogger(__name__)

B_FLOOR = 1e-30
LN2 = np.log(2.0)


@dataclass(frozen=True)
class PowerSchedule:
    p: np.ndarray
    g: np.ndarray
    varpi1: float = 0.0
    varpi2: float = 0.0

    def __post_init__(self):
        for name in ("p", "g"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def uniform(cls, scenario: Scenario) -> "PowerSchedule":
        N = scenario.N
        return cls(np.full(N, scenario.P_bar), np.full(N, scenario.G_bar))


class Gains(NamedTuple):
    """Legitimate (a) and worst-case eavesdropper (b) power gains over noise, per slot."""

    a1: np.ndarray
    b1: np.ndarray
    a2: np.ndarray
    b2: np.ndarray


def effective_gains(realization: ChannelRealization, q, v_d, v_u, scenario: Scenario,
                    delta_a: float | None = None) -> Gains:
    comp = channel.composite_channels(realization, q, v_d, v_u, scenario)
    b1, b2 = csi.worst_case_gains(realization, q, v_d, v_u, scenario, delta_a)
    s2 = scenario.sigma2
    return Gains(np.abs(comp.g_g1) ** 2 / s2, b1 / s2, np.abs(comp.g_g2) ** 2 / s2, b2 / s2)


def closed_form_power(a, b, varpi, peak):
    """Per-slot maximiser of ``log2(1+pa) - log2(1+pb) - varpi p`` on ``[0, peak]``.

    Uses the root of the stationarity condition rewritten as
    ``B / (sqrt(A^2 + B) + A) - 1/a`` (``A = 1/(2b) - 1/(2a)``,
    ``B = (1/b - 1/a) / (varpi ln 2)``), which equals the textbook form but does
    not cancel catastrophically when ``b`` is tiny.
    """
    a = np.asarray(a, dtype=float)
    b = np.maximum(np.asarray(b, dtype=float), B_FLOOR)
    varpi = np.asarray(varpi, dtype=float)
    if np.any(a < 0):
        raise ValueError("gains must be nonnegative")
    positive = a > b
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inv_a = np.where(positive, 1.0 / a, 0.0)
        inv_b = 1.0 / b
        A = 0.5 * (inv_b - inv_a)
        B = np.where(varpi > 0, (inv_b - inv_a) / (varpi * LN2), np.inf)
        root = np.where(np.isinf(B), np.inf, B / (np.sqrt(A * A + B) + A) - inv_a)
    p = np.minimum(np.maximum(root, 0.0), peak)
    return np.where(positive, p, 0.0)


def _average(a, b, varpi, peak) -> float:
    return float(np.mean(closed_form_power(a, b, varpi, peak)))


def dual_bisection(a, b, budget: float, peak: float, rtol: float = 1e-10,
                   max_iter: int = 500) -> tuple[np.ndarray, float]:
    """Powers and multiplier meeting ``mean(p) <= budget`` (active when the multiplier is positive)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if budget <= 0 or peak <= 0:
        return np.zeros_like(a), 0.0
    free = closed_form_power(a, b, 0.0, peak)
    if np.mean(free) <= budget:
        return free, 0.0
    lo, hi = 0.0, 1.0
    while _average(a, b, hi, peak) > budget:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise RuntimeError("power bisection failed to bracket the budget")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        avg = _average(a, b, mid, peak)
        if avg > budget:
            lo = mid
        else:
            hi = mid
            if budget - avg <= rtol * budget:
                break
        if hi - lo <= 1e-12 * hi:
            break
    # the upper end is always feasible
    return closed_form_power(a, b, hi, peak), hi


def solve_power(gains: Gains, scenario: Scenario) -> PowerSchedule:
    """DL and UL schedules, solved independently."""
    p, varpi1 = dual_bisection(gains.a1, gains.b1, scenario.P_bar, scenario.P_peak)
    g, varpi2 = dual_bisection(gains.a2, gains.b2, scenario.G_bar, scenario.G_peak)
    return PowerSchedule(p, g, varpi1, varpi2)


def secrecy_objective(power, a, b) -> np.ndarray:
    """Per-slot unclamped secrecy term ``log2(1+pa) - log2(1+pb)``."""
    power = np.asarray(power, dtype=float)
    return np.log2(1.0 + power * a) - np.log2(1.0 + power * b)
