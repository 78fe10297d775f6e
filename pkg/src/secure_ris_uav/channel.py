"""Geometry, path loss, URA responses, Rician fading and composite link gains.

Conventions used throughout the package:

* An RIS-side vector ``h`` enters a link as ``h^H diag(theta) x``; e.g. the DL
  legitimate channel is ``L_UG h_UG + L_URG h_RG^H Theta_d h_UR``.
* Composite vectors append the direct-link entry, ``h_G1 = [h_RG; conj(h_UG)]``,
  so that ``h_G1^H diag(H_G1) v`` reproduces the sum above with ``v = [e^{j theta}; 1]``.
* Diagonal matrices are stored as their diagonals.
* Functions accept a single position ``(2,)`` or a stack ``(N, 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .scenario import Scenario


@dataclass(frozen=True)
class TrajectoryPlan:
    """Horizontal UAV waypoints, one per slot, shape ``(N, 2)``."""

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim != 2 or q.shape[1] != 2:
            raise ValueError(f"trajectory must have shape (N, 2), got {q.shape}")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def N(self) -> int:
        return self.q.shape[0]

    def steps(self, q_f) -> np.ndarray:
        """Distances flown in each slot, the last one being the leg to ``q_f``."""
        ext = np.vstack([self.q, np.asarray(q_f, dtype=float)[None, :]])
        return np.linalg.norm(np.diff(ext, axis=0), axis=1)

    def mobility_violation(self, scenario: Scenario) -> float:
        """Largest constraint violation (m) of the mobility model; <= 0 when feasible."""
        worst = float(np.max(self.steps(scenario.q_f) - scenario.D))
        return max(worst, float(np.linalg.norm(self.q[0] - np.asarray(scenario.q0))))


# -- geometry ---------------------------------------------------------------

def _horizontal(q) -> np.ndarray:
    return np.asarray(q, dtype=float)


def uav_ris_distance(q, scenario: Scenario) -> np.ndarray:
    q = _horizontal(q)
    dz = scenario.z_u - scenario.z_r
    return np.sqrt(dz ** 2 + np.sum((q - np.asarray(scenario.w_r)) ** 2, axis=-1))


def uav_ground_distance(q, w, scenario: Scenario) -> np.ndarray:
    q = _horizontal(q)
    return np.sqrt(scenario.z_u ** 2 + np.sum((q - np.asarray(w)) ** 2, axis=-1))


def ris_ground_distance(w, scenario: Scenario) -> float:
    return float(np.sqrt(scenario.z_r ** 2 + np.sum((np.asarray(w) - np.asarray(scenario.w_r)) ** 2)))


def _ura_response(cos_x: np.ndarray, cos_z: np.ndarray, scenario: Scenario) -> np.ndarray:
    """``a_z kron a_x`` for direction cosines along the RIS x- and z-axes."""
    k = 2.0 * np.pi * scenario.d_over_lambda
    a_x = np.exp(-1j * k * np.asarray(cos_x)[..., None] * np.arange(scenario.Mx))
    a_z = np.exp(-1j * k * np.asarray(cos_z)[..., None] * np.arange(scenario.Mz))
    # kron over the last axis, a_z outer index
    return (a_z[..., :, None] * a_x[..., None, :]).reshape(*a_x.shape[:-1], scenario.M)


def steering_vector(q, scenario: Scenario) -> np.ndarray:
    """LoS array response of the UAV-RIS link for UAV position(s) ``q``."""
    q = _horizontal(q)
    d = uav_ris_distance(q, scenario)
    cos_z = (scenario.z_u - scenario.z_r) / d
    cos_x = (scenario.w_r[0] - q[..., 0]) / d
    return _ura_response(cos_x, cos_z, scenario)


def ground_steering_vector(w, scenario: Scenario) -> np.ndarray:
    """LoS array response between the RIS and a ground node at ``w`` (altitude 0)."""
    w = np.asarray(w, dtype=float)
    d = ris_ground_distance(w, scenario)
    cos_z = (0.0 - scenario.z_r) / d
    cos_x = (scenario.w_r[0] - w[0]) / d
    return _ura_response(np.float64(cos_x), np.float64(cos_z), scenario)


class PathLoss(NamedTuple):
    """Amplitude gains (square roots of the power path losses)."""

    urg: np.ndarray
    ure: np.ndarray
    ug: np.ndarray
    ue: np.ndarray
    ge: float
    gre: float


def path_losses(q, scenario: Scenario) -> PathLoss:
    s = scenario
    d_ur = uav_ris_distance(q, s)
    d_rg = ris_ground_distance(s.w_g, s)
    d_re = ris_ground_distance(s.w_e, s)
    d_ug = uav_ground_distance(q, s.w_g, s)
    d_ue = uav_ground_distance(q, s.w_e, s)
    d_ge = float(np.hypot(*np.subtract(s.w_g, s.w_e)))
    return PathLoss(
        urg=np.sqrt(s.rho * (d_ur * d_rg) ** (-s.alpha)),
        ure=np.sqrt(s.rho * (d_ur * d_re) ** (-s.alpha)),
        ug=np.sqrt(s.rho * d_ug ** (-s.kappa)),
        ue=np.sqrt(s.rho * d_ue ** (-s.kappa)),
        ge=float(np.sqrt(s.rho * d_ge ** (-s.varsigma))),
        gre=float(np.sqrt(s.rho * (d_rg * d_re) ** (-s.alpha))),
    )


# -- small-scale fading -----------------------------------------------------

def rician(beta: float, los, nlos):
    """Mix a LoS component with CSCG scatter at Rician factor ``beta``."""
    if np.isinf(beta):
        return np.asarray(los, dtype=complex) * np.ones_like(nlos)
    return np.sqrt(beta / (1.0 + beta)) * los + np.sqrt(1.0 / (1.0 + beta)) * nlos


def cscg(rng: np.random.Generator, size=None):
    """Zero-mean, unit-variance circularly-symmetric complex Gaussian draws."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


@dataclass(frozen=True)
class ChannelRealization:
    """One Monte-Carlo draw. NLoS parts are fixed over the whole flight."""

    h_ug: complex
    h_ue: complex
    h_gu: complex
    h_ge: complex
    h_rg: np.ndarray
    h_re: np.ndarray
    h_gr: np.ndarray
    nlos_ur: np.ndarray
    nlos_ru: np.ndarray
    h_bar_e1: np.ndarray
    h_bar_e2: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        for name in ("h_rg", "h_re", "h_gr", "nlos_ur", "nlos_ru", "h_bar_e1", "h_bar_e2"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def M(self) -> int:
        return self.h_rg.shape[0]


def sample_realization(scenario: Scenario, seed: int) -> ChannelRealization:
    s = scenario
    rng = np.random.default_rng(seed)
    M = s.M
    nlos = {name: cscg(rng, M) for name in ("rg", "re", "gr", "ur", "ru")}
    scalar = {name: complex(cscg(rng)) for name in ("ug", "ue", "gu", "ge")}

    a_g = ground_steering_vector(s.w_g, s)
    a_e = ground_steering_vector(s.w_e, s)
    h_rg = rician(s.rician_rg, a_g, nlos["rg"])
    h_re = rician(s.rician_re, a_e, nlos["re"])
    h_gr = rician(s.rician_gr, a_g, nlos["gr"])
    # direct links: unit LoS phasor; G-E is Rayleigh
    h_ug = complex(rician(s.rician_ug, 1.0, scalar["ug"]))
    h_ue = complex(rician(s.rician_ue, 1.0, scalar["ue"]))
    h_gu = complex(rician(s.rician_gu, 1.0, scalar["gu"]))
    h_ge = scalar["ge"]

    return ChannelRealization(
        h_ug=h_ug, h_ue=h_ue, h_gu=h_gu, h_ge=h_ge,
        h_rg=h_rg, h_re=h_re, h_gr=h_gr,
        nlos_ur=nlos["ur"], nlos_ru=nlos["ru"],
        h_bar_e1=np.append(h_re, np.conj(h_ue)),
        h_bar_e2=np.append(h_re, np.conj(h_ge)),
        seed=seed,
    )


def h_ur(realization: ChannelRealization, q, scenario: Scenario) -> np.ndarray:
    """UAV-to-RIS small-scale vector at position(s) ``q``."""
    return rician(scenario.rician_ur, steering_vector(q, scenario), realization.nlos_ur)


def h_ru(realization: ChannelRealization, q, scenario: Scenario) -> np.ndarray:
    """RIS-to-UAV small-scale vector (UL), same LoS geometry as the DL link."""
    return rician(scenario.rician_ru, steering_vector(q, scenario), realization.nlos_ru)


# -- composite channels -----------------------------------------------------

class Composite(NamedTuple):
    h_g1: np.ndarray   # (M+1,)
    h_g2: np.ndarray   # (..., M+1)
    H_g1: np.ndarray   # (..., M+1) diagonal
    H_g2: np.ndarray
    H_e1: np.ndarray
    H_e2: np.ndarray   # (M+1,) slot invariant
    g_g1: np.ndarray   # (...,) complex effective DL gain
    g_g2: np.ndarray


def unit_phases(v) -> np.ndarray:
    """Validate a phase vector (unit modulus, last entry 1) and return it as complex."""
    v = np.asarray(v, dtype=complex)
    if not np.allclose(np.abs(v), 1.0, atol=1e-9):
        raise ValueError("phase vectors must have unit-modulus entries")
    if not np.allclose(v[..., -1], 1.0, atol=1e-9):
        raise ValueError("last phase entry (direct link) must equal 1")
    return v


def composite_channels(realization: ChannelRealization, q, v_d, v_u, scenario: Scenario) -> Composite:
    q = _horizontal(q)
    v_d = unit_phases(v_d)
    v_u = unit_phases(v_u)
    M = scenario.M
    if realization.M != M or v_d.shape[-1] != M + 1 or v_u.shape[-1] != M + 1:
        raise ValueError(f"dimension mismatch: RIS has {M} elements")
    pl = path_losses(q, scenario)
    hur = h_ur(realization, q, scenario)
    hru = h_ru(realization, q, scenario)
    batch = hur.shape[:-1]

    def append(vec, last):
        return np.concatenate([vec, np.broadcast_to(np.asarray(last, dtype=complex)[..., None], batch + (1,))], axis=-1)

    h_g1 = np.append(realization.h_rg, np.conj(realization.h_ug))
    h_g2 = append(hru, np.conj(realization.h_gu))
    H_g1 = append(pl.urg[..., None] * hur, pl.ug)
    H_g2 = append(pl.urg[..., None] * realization.h_gr, pl.ug)
    H_e1 = append(pl.ure[..., None] * hur, pl.ue)
    H_e2 = np.append(pl.gre * realization.h_gr, pl.ge)
    g_g1 = np.sum(np.conj(h_g1) * H_g1 * v_d, axis=-1)
    g_g2 = np.sum(np.conj(h_g2) * H_g2 * v_u, axis=-1)
    return Composite(h_g1, h_g2, H_g1, H_g2, H_e1, H_e2, g_g1, g_g2)


def rate(power, gain, sigma2: float) -> np.ndarray:
    """Achievable rate in bps/Hz for a transmit power and an amplitude gain."""
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ValueError("powers must be nonnegative")
    return np.log2(1.0 + power * np.abs(gain) ** 2 / sigma2)


class Rates(NamedTuple):
    ug: np.ndarray
    ue: np.ndarray
    gu: np.ndarray
    ge: np.ndarray


def rates(realization: ChannelRealization, q, v_d, v_u, p, g, scenario: Scenario) -> Rates:
    """Nominal (estimated-CSI) rates of all four links per slot."""
    c = composite_channels(realization, q, v_d, v_u, scenario)
    g_e1 = np.sum(np.conj(realization.h_bar_e1) * c.H_e1 * v_d, axis=-1)
    g_e2 = np.sum(np.conj(realization.h_bar_e2) * c.H_e2 * v_u, axis=-1)
    s2 = scenario.sigma2
    return Rates(rate(p, c.g_g1, s2), rate(p, g_e1, s2), rate(g, c.g_g2, s2), rate(g, g_e2, s2))
