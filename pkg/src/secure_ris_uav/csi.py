"""Bounded (norm-ball) eavesdropper CSI errors and their closed-form worst case."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import channel
from .channel import ChannelRealization
from .scenario import Scenario


class UncertaintyModel(NamedTuple):
    delta_a: float
    eps1: float
    eps2: float


def uncertainty(realization: ChannelRealization, delta_a: float) -> UncertaintyModel:
    """Radii ``eps_l = delta_a * ||h_bar_El||`` of the two error balls."""
    if delta_a < 0:
        raise ValueError("delta_a must be nonnegative")
    return UncertaintyModel(
        float(delta_a),
        float(delta_a * np.linalg.norm(realization.h_bar_e1)),
        float(delta_a * np.linalg.norm(realization.h_bar_e2)),
    )


class WorstCaseError(NamedTuple):
    delta_h: np.ndarray
    gain: np.ndarray


def worst_case_error(h_bar, H, v, eps: float) -> WorstCaseError:
    """Error in ``||dh|| <= eps`` maximising ``|(h_bar + dh)^H diag(H) v|^2``.

    The error co-phases every term of ``dh^H c`` (``c = H v``) with the nominal
    product ``h_bar^H c`` and spreads its energy proportionally to ``|c|``, so the
    attained gain is ``(|h_bar^H c| + eps ||c||)^2``. Leading axes of ``H`` and
    ``v`` broadcast (one row per slot).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    h_bar = np.asarray(h_bar, dtype=complex)
    c = np.asarray(H, dtype=complex) * np.asarray(v, dtype=complex)
    nominal = np.sum(np.conj(h_bar) * c, axis=-1)
    m2 = np.abs(c)
    norm_c = np.linalg.norm(c, axis=-1)
    tau = np.angle(c) - np.angle(nominal)[..., None]
    with np.errstate(invalid="ignore", divide="ignore"):
        m1 = np.where(norm_c[..., None] > 0, eps * m2 / norm_c[..., None], 0.0)
    delta_h = m1 * np.exp(1j * tau)
    gain = (np.abs(nominal) + eps * norm_c) ** 2
    return WorstCaseError(delta_h, gain)


def worst_case_gains(realization: ChannelRealization, q, v_d, v_u, scenario: Scenario,
                     delta_a: float | None = None):
    """Per-slot worst-case eavesdropper power gains ``(|.|^2)`` for DL and UL."""
    unc = uncertainty(realization, scenario.delta_a if delta_a is None else delta_a)
    c = channel.composite_channels(realization, q, v_d, v_u, scenario)
    dl = worst_case_error(realization.h_bar_e1, c.H_e1, v_d, unc.eps1).gain
    ul = worst_case_error(realization.h_bar_e2, c.H_e2, v_u, unc.eps2).gain
    return dl, ul


def worst_case_rates(realization: ChannelRealization, design, scenario: Scenario,
                     delta_a: float | None = None):
    """Worst-case eavesdropper rates ``(R_UE, R_GE)`` per slot for a full design."""
    q = design.trajectory.q
    dl, ul = worst_case_gains(realization, q, design.phases.v_d, design.phases.v_u, scenario, delta_a)
    s2 = scenario.sigma2
    return (np.log2(1.0 + design.powers.p * dl / s2),
            np.log2(1.0 + design.powers.g * ul / s2))
