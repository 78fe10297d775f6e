"""
Channels and the worst-case eavesdropper
========================================

Draw one channel realization, evaluate the legitimate and eavesdropper gains
along a straight flight, and compare the closed-form worst-case error against
random errors of the same norm.
"""
import numpy as np

from secure_ris_uav import channel, csi
from secure_ris_uav.scenario import Scenario

sc = Scenario()
real = channel.sample_realization(sc, seed=0)
print(f"N = {sc.N} slots, M = {sc.M} elements, step D = {sc.D:g} m")

###############################################################################
# Straight line from q0 to qF, identity phases (all ones, last entry fixed).
frac = np.arange(sc.N)[:, None] / (sc.N - 1)
q = np.asarray(sc.q0) + frac * (np.asarray(sc.q_f) - np.asarray(sc.q0))
ones = np.ones((sc.N, sc.M + 1), dtype=complex)
p = np.full(sc.N, sc.P_bar)
g = np.full(sc.N, sc.G_bar)

nominal = channel.rates(real, q, ones, ones, p, g, sc)
print("nominal DL rate to the user, first/middle/last slot:",
      np.round(nominal.ug[[0, sc.N // 2, -1]], 3))

###############################################################################
# Worst case over the error ball: the error co-phases with the nominal sum.
unc = csi.uncertainty(real, sc.delta_a)
comp = channel.composite_channels(real, q, ones, ones, sc)
worst = csi.worst_case_error(real.h_bar_e1, comp.H_e1, ones, unc.eps1)

n = sc.N // 2
c = comp.H_e1[n] * ones[n]
rng = np.random.default_rng(1)
z = rng.standard_normal((20000, c.size)) + 1j * rng.standard_normal((20000, c.size))
dh = unc.eps1 * z / np.linalg.norm(z, axis=1, keepdims=True)
sampled = np.abs((np.conj(real.h_bar_e1)[None, :] + np.conj(dh)) @ c) ** 2
print(f"slot {n}: closed form {worst.gain[n]:.4e}, best of 20000 random errors {sampled.max():.4e}")
