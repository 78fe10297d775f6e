"""
Joint design and the benchmarks
===============================

Run the full alternating loop and its three restricted variants on one
realization of a short flight.
"""
from secure_ris_uav import ao, channel
from secure_ris_uav.scenario import Scenario

sc = Scenario(Mx=2, Mz=2, q0=(-150.0, 60.0), q_f=(150.0, 60.0), T=24.8)
real = channel.sample_realization(sc, seed=0)

for kind in ao.ALGORITHMS:
    design, report = ao.run_benchmark(kind, sc, real)
    trace = ", ".join(f"{r:.3f}" for r in report.per_iteration)
    print(f"{kind:7s} R_sec {report.R_sec:.4f} after {report.iterations} iterations: {trace}")
