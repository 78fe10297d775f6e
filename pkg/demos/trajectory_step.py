"""
One trajectory update
=====================

Freeze the channels at the heuristic path, solve the convex surrogate once and
compare the surrogate value with the exact rate at the new path.
"""
import numpy as np

from secure_ris_uav import ao, channel, trajectory
from secure_ris_uav.scenario import Scenario

sc = Scenario(Mx=2, Mz=2, q0=(-150.0, 60.0), q_f=(150.0, 60.0), T=24.8)
real = channel.sample_realization(sc, seed=0)
design = ao.initial_design(sc)
q_prev = design.trajectory.q

res = trajectory.optimize_trajectory(real, q_prev, design.phases.v_d, design.phases.v_u,
                                     design.powers.p, design.powers.g, sc, sc.delta_a)
print(f"surrogate: {res.surrogate_start:.4f} -> {res.surrogate:.4f} bps/Hz")
print(f"largest step {res.plan.steps(sc.q_f).max():.3f} m (limit {sc.D:g} m)")

###############################################################################
# The surrogate leaves out the UL eavesdropper term, which does not depend on
# the path, and it holds the phases fixed. Phases tuned for the old path can
# lose alignment at the new one, which is why the outer loop backtracks toward
# the previous path when the exact rate drops.
moved = ao.Design(res.plan, design.phases, design.powers)
before = ao.evaluate_secrecy(design, real, sc).R_sec
after = ao.evaluate_secrecy(moved, real, sc).R_sec
print(f"exact rate: {before:.4f} -> {after:.4f} bps/Hz")
print("path:", np.round(res.plan.q[::3], 1).tolist())
