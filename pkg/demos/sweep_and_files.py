"""
Monte-Carlo sweep and result files
==================================

Sweep the CSI error bound over two values with two seeds, write the result
files and read the summary back.
"""
import tempfile
from pathlib import Path

from secure_ris_uav import experiment
from secure_ris_uav.scenario import Scenario

sc = Scenario(Mx=2, Mz=1, q0=(-150.0, 60.0), q_f=(150.0, 60.0), T=24.8, j_max=5)
spec = experiment.SweepSpec("deltaA2", [0.0, 0.5], realizations=2, base_seed=0, algorithms=("JO", "JO_NR"))
rows = experiment.run_sweep(spec, sc, workers=1)

out = Path(tempfile.mkdtemp())
experiment.emit_results(rows, out)
for path in sorted(out.rglob("*.csv"))[:4]:
    print(path.relative_to(out))
for alg in spec.algorithms:
    print(alg, experiment.mean_rates(rows, alg))
print("\n".join(experiment.dump_scenario(sc).splitlines()[:8]))
