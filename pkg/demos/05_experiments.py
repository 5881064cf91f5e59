"""
Experiments through the harness
===============================

The same machinery the ``tltr-bench`` command drives: a solver comparison
and a sweep over the subspace size. Traces land in /tmp/tltr_demo.
"""

import dataclasses

from tltr.harness import ExperimentSpec, compare, sweep
from tltr.solvers import TrConfig

base = ExperimentSpec(loss="logistic", tr=TrConfig(fine_solver="cp"),
                      ell_frac=0.3, seeds=list(range(5)))

specs = [dataclasses.replace(base, solver="tr"),
         dataclasses.replace(base, solver="tltr"),
         dataclasses.replace(base, solver="tltr", sketch="shash"),
         dataclasses.replace(base, solver="sn", ell_frac=0.5)]
print(compare(specs).format())

# bigger subspaces mean fewer iterations (and more Hessian-vector products)
for row in sweep(dataclasses.replace(base, solver="tltr", out="/tmp/tltr_demo/ell"),
                 "ell_frac", [0.1, 0.2, 0.3, 0.6]):
    print(row.format())

# an impossible hashing parameter fails its own row only
for row in sweep(dataclasses.replace(base, solver="tltr", sketch="shash", ell=5,
                                     ell_frac=None, seeds=[0]), "s", [1, 3, 8]):
    print(row.format())
