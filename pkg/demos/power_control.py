"""
Secrecy power control
=====================

Per-slot closed form under a price ``varpi`` and the bisection that meets the
average budget.
"""
import numpy as np

from secure_ris_uav import power

a = np.array([5e3, 2e3, 8e2, 3e2, 1e2])
b = np.array([1e2, 1.5e3, 9e2, 1e1, 5e1])
peak = 0.4

###############################################################################
# Slots where the eavesdropper is stronger (b >= a) get nothing at any price.
for varpi in (1.0, 10.0, 100.0):
    print(f"varpi = {varpi:6.1f}:", np.round(power.closed_form_power(a, b, varpi, peak), 4))

###############################################################################
# The bisection raises the price until the schedule fits the budget.
p, varpi = power.dual_bisection(a, b, budget=0.1, peak=peak)
print("schedule:", np.round(p, 4), f"mean {p.mean():.6f}, price {varpi:.4f}")
print("secrecy per slot:", np.round(power.secrecy_objective(p, a, b), 3))
