"""
RIS phases by semidefinite relaxation
=====================================

Optimise the DL phases of one slot with the relaxed program and Gaussian
randomization, then check the result against a brute-force phase grid.
"""
import numpy as np

from secure_ris_uav import beamforming, channel, csi
from secure_ris_uav.scenario import Scenario

sc = Scenario(Mx=2, Mz=1, q0=(-150.0, 60.0), q_f=(150.0, 60.0), T=24.8, delta_a=0.0)
real = channel.sample_realization(sc, seed=3)
q = np.array([[-20.0, 100.0]] * sc.N)
ones = np.ones((sc.N, sc.M + 1), dtype=complex)
p = np.full(sc.N, sc.P_bar)
g = np.full(sc.N, sc.G_bar)

unc = csi.uncertainty(real, sc.delta_a)
comp = channel.composite_channels(real, q, ones, ones, sc)
down, _ = beamforming.slot_links(real, comp, 0, p, g, sc, unc)

v, state = beamforming.sca_slot(down, ones[0], rng=np.random.default_rng(0))
found = float(beamforming.secrecy_value(down, v))
print(f"relaxation + randomization: {found:.4f} bps/Hz, LMI min eig {beamforming.lmi_min_eig(down, state):.1e}")

###############################################################################
# Brute force over 256 levels per element (the last entry stays 1).
levels = np.exp(2j * np.pi * np.arange(256) / 256)
v1, v2 = np.meshgrid(levels, levels, indexing="ij")
grid = np.stack([v1.ravel(), v2.ravel(), np.ones(v1.size)], axis=1)
best = float(np.max(beamforming.secrecy_value(down, grid)))
print(f"grid search: {best:.4f} bps/Hz")
