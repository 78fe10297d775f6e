"""Alternating optimisation driver, worst-case secrecy evaluation and benchmark variants."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import beamforming, channel, conic, csi, power, trajectory
from .beamforming import PhaseSchedule
from .channel import ChannelRealization, TrajectoryPlan
from .power import PowerSchedule
from .scenario import Scenario, ScenarioError

log = logging.getLogger(__name__)

ALGORITHMS = ("JO", "JO_NPB", "JO_HT", "JO_NR")
BACKTRACK_STEPS = 8


class StageError(RuntimeError):
    """A sub-solver failed inside the AO loop."""

    def __init__(self, stage: str, iteration: int, cause: Exception):
        super().__init__(f"iteration {iteration}, {stage} stage: {cause}")
        self.stage = stage
        self.iteration = iteration
        self.cause = cause


@dataclass(frozen=True)
class Design:
    trajectory: TrajectoryPlan
    phases: PhaseSchedule
    powers: PowerSchedule


@dataclass(frozen=True)
class SecrecySlice:
    per_slot_down: np.ndarray
    per_slot_up: np.ndarray
    R_sec: float


@dataclass(frozen=True)
class SecrecyReport:
    per_slot_down: np.ndarray
    per_slot_up: np.ndarray
    per_iteration: tuple[float, ...]
    initial: float
    iterations: int
    converged: bool
    diagnostics: tuple[dict, ...] = field(default=(), repr=False)

    @property
    def R_sec(self) -> float:
        return self.per_iteration[-1] if self.per_iteration else self.initial


def evaluate_secrecy(design: Design, realization: ChannelRealization, scenario: Scenario,
                     delta_a: float | None = None) -> SecrecySlice:
    """Average worst-case secrecy rate, with ``[x]^+`` applied per slot and link."""
    q = design.trajectory.q
    v_d, v_u = design.phases.v_d, design.phases.v_u
    p, g = design.powers.p, design.powers.g
    nominal = channel.rates(realization, q, v_d, v_u, p, g, scenario)
    dl, ul = csi.worst_case_gains(realization, q, v_d, v_u, scenario, delta_a)
    s2 = scenario.sigma2
    r_ue = np.log2(1.0 + p * dl / s2)
    r_ge = np.log2(1.0 + g * ul / s2)
    down = np.maximum(nominal.ug - r_ue, 0.0)
    up = np.maximum(nominal.gu - r_ge, 0.0)
    w = scenario.w
    return SecrecySlice(down, up, float(np.mean(w * down + (1.0 - w) * up)))


def heuristic_trajectory(scenario: Scenario) -> TrajectoryPlan:
    """Fly to the user at full speed, hover, and leave just in time to reach ``q_F``."""
    s = scenario
    N, D = s.N, s.D
    k_out, k_back = s.heuristic_leg_steps()
    if k_out + k_back > N:
        raise ScenarioError("T", "heuristic path does not fit in the flight period")
    q0, w_g, q_f = (np.asarray(x, dtype=float) for x in (s.q0, s.w_g, s.q_f))

    def along(start, end, dist):
        span = np.linalg.norm(end - start)
        if span == 0:
            return np.broadcast_to(start, (len(dist), 2)).copy()
        return start + np.minimum(dist, span)[:, None] / span * (end - start)

    q = np.tile(w_g, (N, 1))
    steps = np.arange(N, dtype=float)
    out = steps <= k_out
    q[out] = along(q0, w_g, steps[out] * D)
    # slot N - 1 - j sits j + 1 steps away from q_F
    j = np.arange(N, dtype=float)[::-1]
    back = j < k_back - 1
    q[back] = along(q_f, w_g, (j[back] + 1) * D)
    q[0] = q0
    return TrajectoryPlan(q)


def initial_design(scenario: Scenario, plan: TrajectoryPlan | None = None) -> Design:
    plan = heuristic_trajectory(scenario) if plan is None else plan
    return Design(plan, PhaseSchedule.zeros(scenario.N, scenario.M), PowerSchedule.uniform(scenario))


def _model_value(realization, scenario, q, phases, powers, delta_a) -> float:
    d = Design(TrajectoryPlan(q), phases, powers)
    return evaluate_secrecy(d, realization, scenario, delta_a).R_sec


def _trajectory_stage(realization, scenario, design, delta_a, context):
    q_old = design.trajectory.q
    res = trajectory.optimize_trajectory(realization, q_old, design.phases.v_d, design.phases.v_u,
                                         design.powers.p, design.powers.g, scenario, delta_a, context=context)
    base = _model_value(realization, scenario, q_old, design.phases, design.powers, delta_a)
    q_new = res.plan.q
    # the surrogate freezes the RIS-side channels, so guard the true value with backtracking
    lam = 1.0
    for _ in range(BACKTRACK_STEPS + 1):
        cand = q_old + lam * (q_new - q_old)
        if _model_value(realization, scenario, cand, design.phases, design.powers, delta_a) >= base:
            return TrajectoryPlan(cand), res, lam
        lam *= 0.5
    return design.trajectory, res, 0.0


def run_jo(scenario: Scenario, realization: ChannelRealization, initial: Design | None = None, *,
           update_trajectory: bool = True, update_phases: bool = True,
           working_delta_a: float | None = None, count: int = beamforming.DEFAULT_COUNT,
           on_iteration: Callable[[int, Design, float], None] | None = None) -> tuple[Design, SecrecyReport]:
    """Trajectory, beamforming and power updates in turn until the rate settles.

    ``working_delta_a`` is the uncertainty assumed inside the sub-problems; the
    reported rates always use ``scenario.delta_a``.
    """
    sc = scenario
    design = initial_design(sc) if initial is None else initial
    da = sc.delta_a if working_delta_a is None else float(working_delta_a)
    prev = evaluate_secrecy(design, realization, sc).R_sec
    initial_rate = prev
    trace: list[float] = []
    diags: list[dict] = []
    converged = False
    for j in range(1, sc.j_max + 1):
        diag = {"iteration": j}
        if update_trajectory:
            try:
                plan, res, lam = _trajectory_stage(realization, sc, design, da, f"trajectory (iteration {j})")
            except (conic.SolverError, np.linalg.LinAlgError) as exc:
                raise StageError("trajectory", j, exc) from exc
            design = replace(design, trajectory=plan)
            diag.update(traj_surrogate=res.surrogate, traj_surrogate_start=res.surrogate_start, traj_step=lam)
        if update_phases:
            try:
                phases = beamforming.optimize_phases(realization, design.trajectory.q, design.phases,
                                                     design.powers.p, design.powers.g, sc, da,
                                                     seed=realization.seed, stage=j, count=count)
            except (conic.SolverError, np.linalg.LinAlgError) as exc:
                raise StageError("beamforming", j, exc) from exc
            design = replace(design, phases=phases)
        try:
            gains = power.effective_gains(realization, design.trajectory.q, design.phases.v_d,
                                          design.phases.v_u, sc, da)
            design = replace(design, powers=power.solve_power(gains, sc))
        except (RuntimeError, ValueError) as exc:
            raise StageError("power", j, exc) from exc
        rate = evaluate_secrecy(design, realization, sc).R_sec
        trace.append(rate)
        diags.append(diag)
        if on_iteration is not None:
            on_iteration(j, design, rate)
        log.debug("iteration %d: R_sec = %.6f", j, rate)
        if abs(rate - prev) <= sc.eps_c:
            converged = True
            break
        prev = rate
    final = evaluate_secrecy(design, realization, sc)
    report = SecrecyReport(final.per_slot_down, final.per_slot_up, tuple(trace), initial_rate,
                           len(trace), converged, tuple(diags))
    return design, report


def run_benchmark(kind: str, scenario: Scenario, realization: ChannelRealization,
                  **kwargs) -> tuple[Design, SecrecyReport]:
    """``JO`` and its variants: no beamforming (NPB), fixed trajectory (HT), non-robust (NR)."""
    if kind == "JO":
        return run_jo(scenario, realization, **kwargs)
    if kind == "JO_NPB":
        return run_jo(scenario, realization, update_phases=False, **kwargs)
    if kind == "JO_HT":
        return run_jo(scenario, realization, update_trajectory=False, **kwargs)
    if kind == "JO_NR":
        return run_jo(scenario, realization, working_delta_a=0.0, **kwargs)
    raise ValueError(f"unknown algorithm {kind!r}; expected one of {ALGORITHMS}")
