"""One SCA step of the joint-slot trajectory program.

The program is built in scaled units so that every variable is O(1):
positions are divided by ``LENGTH`` and each distance slack by its tight value
at the linearisation trajectory (``u = u0 * u_hat`` and so on).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import channel, conic, csi
from .channel import ChannelRealization, TrajectoryPlan
from .scenario import Scenario

log = logging.getLogger(__name__)

LENGTH = 100.0
LN2 = math.log(2.0)
SLOT_VARS = ("q", "u", "e", "s", "t", "sig_s", "sig_t", "zeta", "rd", "ru", "tau_d", "tau_u")


class FrozenChannelData(NamedTuple):
    """Channel quantities held at the previous trajectory.

    ``c_qg``, ``c_gq``, ``c_qe`` hold per-slot coefficient pairs so that e.g. the
    DL legitimate gain is ``rho |c_qg[n] . (u, e)|^2``; the quadratic-form
    matrices are their outer products ``conj(c) c^T``.
    """

    q_prev: np.ndarray
    hur_prev: np.ndarray
    hru_prev: np.ndarray
    h_e1_op: np.ndarray
    c_qg: np.ndarray
    c_gq: np.ndarray
    c_qe: np.ndarray

    @property
    def H_QG(self) -> np.ndarray:
        return _outer(self.c_qg)

    @property
    def H_GQ(self) -> np.ndarray:
        return _outer(self.c_gq)

    @property
    def H_QE(self) -> np.ndarray:
        return _outer(self.c_qe)


def _outer(c):
    return np.conj(c)[..., :, None] * c[..., None, :]


def freeze_channels(realization: ChannelRealization, q_prev, v_d, v_u, scenario: Scenario,
                    delta_a: float) -> FrozenChannelData:
    s = scenario
    q_prev = np.asarray(q_prev, dtype=float)
    hur = channel.h_ur(realization, q_prev, s)
    hru = channel.h_ru(realization, q_prev, s)
    d_rg = channel.ris_ground_distance(s.w_g, s)
    d_re = channel.ris_ground_distance(s.w_e, s)

    unc = csi.uncertainty(realization, delta_a)
    comp = channel.composite_channels(realization, q_prev, v_d, v_u, s)
    err = csi.worst_case_error(realization.h_bar_e1, comp.H_e1, v_d, unc.eps1)
    h_op = realization.h_bar_e1 + err.delta_h

    M = s.M
    v_d = np.asarray(v_d)
    v_u = np.asarray(v_u)
    casc_d = np.sum(np.conj(realization.h_rg) * hur * v_d[:, :M], axis=-1)
    casc_u = np.sum(np.conj(hru) * realization.h_gr * v_u[:, :M], axis=-1)
    casc_e = np.sum(np.conj(h_op[:, :M]) * hur * v_d[:, :M], axis=-1)
    N = q_prev.shape[0]
    c_qg = np.stack([np.full(N, realization.h_ug), d_rg ** (-s.alpha / 2) * casc_d], axis=-1)
    c_gq = np.stack([np.full(N, realization.h_gu), d_rg ** (-s.alpha / 2) * casc_u], axis=-1)
    # DL eavesdropper: direct entry multiplies s, cascade multiplies t
    c_qe = np.stack([np.conj(h_op[:, M]) * v_d[:, M], d_re ** (-s.alpha / 2) * casc_e], axis=-1)
    return FrozenChannelData(q_prev, hur, hru, h_op, c_qg, c_gq, c_qe)


@dataclass(frozen=True)
class TrajectorySlacks:
    """Slack values (unscaled) and the linearisation points they were taken at."""

    u: np.ndarray
    e: np.ndarray
    s: np.ndarray
    t: np.ndarray
    zeta: np.ndarray
    rd: np.ndarray
    ru: np.ndarray
    q0: np.ndarray
    zeta0: np.ndarray


def distance_terms(q, scenario: Scenario):
    """Tight slack values ``(u, e, s, t)`` at trajectory ``q``."""
    s = scenario
    d_ug = channel.uav_ground_distance(q, s.w_g, s)
    d_ur = channel.uav_ris_distance(q, s)
    d_ue = channel.uav_ground_distance(q, s.w_e, s)
    return d_ug ** (-s.kappa / 2), d_ur ** (-s.alpha / 2), d_ue ** (-s.kappa / 2), d_ur ** (-s.alpha / 2)


def frozen_snrs(frozen: FrozenChannelData, u, e, s_, t, p, g, scenario: Scenario):
    """Legitimate DL/UL and eavesdropper DL SNRs of the frozen model at slack values."""
    rho, s2 = scenario.rho, scenario.sigma2
    a_d = rho * np.asarray(p) / s2 * np.abs(frozen.c_qg[:, 0] * u + frozen.c_qg[:, 1] * e) ** 2
    a_u = rho * np.asarray(g) / s2 * np.abs(frozen.c_gq[:, 0] * u + frozen.c_gq[:, 1] * e) ** 2
    b_d = rho * np.asarray(p) / s2 * np.abs(frozen.c_qe[:, 0] * s_ + frozen.c_qe[:, 1] * t) ** 2
    return a_d, a_u, b_d


def tight_slacks(frozen: FrozenChannelData, q, p, g, scenario: Scenario) -> TrajectorySlacks:
    """Slacks set to their tight values at ``q``; ``q`` also becomes the linearisation point."""
    u, e, s_, t = distance_terms(q, scenario)
    a_d, a_u, b_d = frozen_snrs(frozen, u, e, s_, t, p, g, scenario)
    scale_d = scenario.rho * np.asarray(p) / scenario.sigma2
    scale_u = scenario.rho * np.asarray(g) / scenario.sigma2
    with np.errstate(divide="ignore", invalid="ignore"):
        rd = np.where(scale_d > 0, a_d / scale_d, 0.0)
        ru = np.where(scale_u > 0, a_u / scale_u, 0.0)
    q = np.array(q, dtype=float)
    return TrajectorySlacks(u, e, s_, t, b_d, rd, ru, q, b_d.copy())


# -- program ----------------------------------------------------------------

class TrajectoryLayout(NamedTuple):
    idx: dict
    u0: np.ndarray
    e0: np.ndarray
    s0: np.ndarray
    t0: np.ndarray
    scale_d: np.ndarray
    scale_u: np.ndarray


def build_trajectory_program(frozen: FrozenChannelData, slacks: TrajectorySlacks, p, g,
                             scenario: Scenario, pinned: dict | None = None):
    """Convex surrogate around ``slacks.q0``. Returns ``(program, layout)``."""
    sc = scenario
    N = slacks.q0.shape[0]
    Lq = LENGTH
    q0 = slacks.q0 / Lq
    u0, e0, s0, t0 = distance_terms(slacks.q0, sc)
    d_ug2 = u0 ** (-4.0 / sc.kappa) / Lq ** 2
    d_ur2 = e0 ** (-4.0 / sc.alpha) / Lq ** 2
    d_ue2 = s0 ** (-4.0 / sc.kappa) / Lq ** 2
    zu2 = (sc.z_u / Lq) ** 2
    zur2 = ((sc.z_u - sc.z_r) / Lq) ** 2
    w_g = np.asarray(sc.w_g) / Lq
    w_r = np.asarray(sc.w_r) / Lq
    w_e = np.asarray(sc.w_e) / Lq
    scale_d = sc.rho * np.asarray(p, dtype=float) / sc.sigma2
    scale_u = sc.rho * np.asarray(g, dtype=float) / sc.sigma2
    zeta0 = np.asarray(slacks.zeta0, dtype=float)

    b = conic.ProgramBuilder()
    idx = {name: b.variable(name, (N, 2) if name == "q" else (N,)) for name in SLOT_VARS}
    I2 = np.eye(2)
    kk = 4.0 / sc.kappa
    ka = 4.0 / sc.alpha
    for n in range(N):
        q_n = idx["q"][n]
        # UAV-user distance slack u: ||q - w_G||^2 + z_U^2 <= linearised u^(-4/kappa)
        b.add("rsoc", [(idx["u"][n], [[-d_ug2[n] * kk], [0], [0], [0]]), (q_n, np.vstack([np.zeros((2, 2)), I2]))],
              [d_ug2[n] * (1 + kk) - zu2, 0.5, -w_g[0], -w_g[1]], name=f"u[{n}]")
        b.add("rsoc", [(idx["e"][n], [[-d_ur2[n] * ka], [0], [0], [0]]), (q_n, np.vstack([np.zeros((2, 2)), I2]))],
              [d_ur2[n] * (1 + ka) - zur2, 0.5, -w_r[0], -w_r[1]], name=f"e[{n}]")
        # s^(-4/kappa) <= sig_s, and sig_s below the tangent of ||q - w_E||^2 + z_U^2
        b.add("pow", [(idx["sig_s"][n], [[1], [0], [0]]), (idx["s"][n], [[0], [1], [0]])], [0, 0, 1],
              param=sc.kappa / (sc.kappa + 4), name=f"s[{n}]")
        gap_e = q0[n] - w_e
        b.add("nonneg", [(q_n, [2 * gap_e]), (idx["sig_s"][n], [[-d_ue2[n]]])],
              [gap_e @ gap_e + zu2 - 2 * gap_e @ q0[n]], name=f"s_lin[{n}]")
        b.add("pow", [(idx["sig_t"][n], [[1], [0], [0]]), (idx["t"][n], [[0], [1], [0]])], [0, 0, 1],
              param=sc.alpha / (sc.alpha + 4), name=f"t[{n}]")
        gap_r = q0[n] - w_r
        b.add("nonneg", [(q_n, [2 * gap_r]), (idx["sig_t"][n], [[-d_ur2[n]]])],
              [gap_r @ gap_r + zur2 - 2 * gap_r @ q0[n]], name=f"t_lin[{n}]")
        # upper bounds when hovering straight above the eavesdropper / the RIS (z_E = 0)
        b.add("nonneg", [(idx["s"][n], [[-1.0]])], [sc.z_u ** (-sc.kappa / 2) / s0[n]], name=f"s_max[{n}]")
        b.add("nonneg", [(idx["t"][n], [[-1.0]])], [(sc.z_u - sc.z_r) ** (-sc.alpha / 2) / t0[n]], name=f"t_max[{n}]")
        # eavesdropper SNR slack
        c = math.sqrt(scale_d[n]) * frozen.c_qe[n] * np.array([s0[n], t0[n]])
        b.add("rsoc", [(idx["zeta"][n], [[1], [0], [0], [0]]),
                       (idx["s"][n], [[0], [0], [c[0].real], [c[0].imag]]),
                       (idx["t"][n], [[0], [0], [c[1].real], [c[1].imag]])],
              [0, 0.5, 0, 0], name=f"zeta[{n}]")
        # legitimate quadratic forms, linearised at (u0, e0)
        D0 = np.array([u0[n], e0[n]])
        for key, cc, scale in (("rd", frozen.c_qg[n], scale_d[n]), ("ru", frozen.c_gq[n], scale_u[n])):
            K = scale * np.real(_outer(cc)) * np.outer(D0, D0)
            row = 2 * K.sum(axis=0)
            b.add("nonneg", [(idx["u"][n], [[row[0]]]), (idx["e"][n], [[row[1]]]), (idx[key][n], [[-1.0]])],
                  [-K.sum()], name=f"{key}_lin[{n}]")
        b.add("exp", [(idx["tau_d"][n], [[1], [0], [0]]), (idx["rd"][n], [[0], [0], [1]])], [0, 1, 1], name=f"log_d[{n}]")
        b.add("exp", [(idx["tau_u"][n], [[1], [0], [0]]), (idx["ru"][n], [[0], [0], [1]])], [0, 1, 1], name=f"log_u[{n}]")
    for key in ("u", "e", "rd", "ru", "zeta"):
        b.add("nonneg", [(idx[key], np.eye(N))], np.zeros(N), name=f"{key}>=0")

    # mobility
    D = sc.D / Lq
    b.add("zero", [(idx["q"][0], I2)], -np.asarray(sc.q0) / Lq, name="q[1]=q0")
    for n in range(N - 1):
        b.add("soc", [(idx["q"][n + 1], np.vstack([[0, 0], I2])), (idx["q"][n], np.vstack([[0, 0], -I2]))],
              [D, 0, 0], name=f"step[{n}]")
    b.add("soc", [(idx["q"][N - 1], np.vstack([[0, 0], -I2]))], [D, *(np.asarray(sc.q_f) / Lq)], name="final")
    for n, pos in (pinned or {}).items():
        b.add("zero", [(idx["q"][n], I2)], -np.asarray(pos, dtype=float) / Lq, name=f"pin[{n}]")

    w = sc.w
    b.maximize(idx["tau_d"], w)
    b.maximize(idx["zeta"], -w / (1.0 + zeta0))
    b.maximize(idx["tau_u"], 1.0 - w)
    layout = TrajectoryLayout(idx, u0, e0, s0, t0, scale_d, scale_u)
    return b.build(), layout


def objective_bps(program: conic.ConicProgram, x) -> float:
    """Program objective converted to the average rate unit (bps/Hz)."""
    N = program.names["q"].shape[0]
    return program.objective(x) / (N * LN2)


def point_from_slacks(program: conic.ConicProgram, layout: TrajectoryLayout, slacks: TrajectorySlacks,
                      frozen: FrozenChannelData, scenario: Scenario) -> np.ndarray:
    """Program vector at the linearisation point with every slack tight."""
    idx = layout.idx
    x = np.zeros(program.n)
    x[idx["q"]] = slacks.q0 / LENGTH
    for key in ("u", "e", "s", "t", "sig_s", "sig_t"):
        x[idx[key]] = 1.0
    a_d = layout.scale_d * np.abs(frozen.c_qg[:, 0] * layout.u0 + frozen.c_qg[:, 1] * layout.e0) ** 2
    a_u = layout.scale_u * np.abs(frozen.c_gq[:, 0] * layout.u0 + frozen.c_gq[:, 1] * layout.e0) ** 2
    b_d = layout.scale_d * np.abs(frozen.c_qe[:, 0] * layout.s0 + frozen.c_qe[:, 1] * layout.t0) ** 2
    x[idx["rd"]] = a_d
    x[idx["ru"]] = a_u
    x[idx["zeta"]] = b_d
    x[idx["tau_d"]] = np.log1p(a_d)
    x[idx["tau_u"]] = np.log1p(a_u)
    return x


def _straight_line(scenario: Scenario, N: int) -> np.ndarray:
    frac = np.arange(N)[:, None] / N
    return np.asarray(scenario.q0) + frac * (np.asarray(scenario.q_f) - np.asarray(scenario.q0))


def enforce_mobility(q, scenario: Scenario, tol: float = 1e-9) -> np.ndarray:
    """Pull a solver trajectory toward the straight-line path until every step fits ``D``.

    The straight line from ``q0`` to ``q_F`` in equal steps is strictly feasible
    whenever ``||q_F - q0|| < N D``, so a tiny convex combination removes
    interior-point overshoot without visibly moving the trajectory.
    """
    q = np.array(q, dtype=float)
    q[0] = scenario.q0
    plan = TrajectoryPlan(q)
    over = plan.mobility_violation(scenario)
    if over <= tol:
        return q
    line = _straight_line(scenario, q.shape[0])
    slack = scenario.D - float(np.max(TrajectoryPlan(line).steps(scenario.q_f)))
    if slack <= 0:
        return q
    lam = min(1.0, 2.0 * over / (over + slack))
    q = (1.0 - lam) * q + lam * line
    q[0] = scenario.q0
    return q


class TrajectoryResult(NamedTuple):
    plan: TrajectoryPlan
    slacks: TrajectorySlacks
    surrogate: float
    surrogate_start: float
    solution: conic.ConicSolution


def solve_trajectory(program: conic.ConicProgram, layout: TrajectoryLayout, scenario: Scenario,
                     start=None, context: str = "trajectory") -> TrajectoryResult:
    sol = conic.solve_or_raise(program, context)
    idx = layout.idx
    x = sol.x
    q = enforce_mobility(x[idx["q"]] * LENGTH, scenario)
    slacks = TrajectorySlacks(
        u=x[idx["u"]] * layout.u0, e=x[idx["e"]] * layout.e0,
        s=x[idx["s"]] * layout.s0, t=x[idx["t"]] * layout.t0,
        zeta=x[idx["zeta"]],
        rd=np.where(layout.scale_d > 0, x[idx["rd"]] / np.where(layout.scale_d > 0, layout.scale_d, 1.0), 0.0),
        ru=np.where(layout.scale_u > 0, x[idx["ru"]] / np.where(layout.scale_u > 0, layout.scale_u, 1.0), 0.0),
        q0=q, zeta0=x[idx["zeta"]],
    )
    start_val = objective_bps(program, start) if start is not None else math.nan
    return TrajectoryResult(TrajectoryPlan(q), slacks, objective_bps(program, x), start_val, sol)


def optimize_trajectory(realization: ChannelRealization, q_prev, v_d, v_u, p, g, scenario: Scenario,
                        delta_a: float, pinned: dict | None = None, context: str = "trajectory") -> TrajectoryResult:
    """Freeze channels at ``q_prev``, take tight slacks there, build and solve the surrogate."""
    frozen = freeze_channels(realization, q_prev, v_d, v_u, scenario, delta_a)
    slacks = tight_slacks(frozen, q_prev, p, g, scenario)
    program, layout = build_trajectory_program(frozen, slacks, p, g, scenario, pinned)
    start = point_from_slacks(program, layout, slacks, frozen, scenario)
    return solve_trajectory(program, layout, scenario, start, context)
