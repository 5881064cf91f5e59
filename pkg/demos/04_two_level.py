"""
One cheap step, one sketched step
=================================

With the Cauchy point as fine solver the plain trust-region method crawls.
Adding an accurately solved step in a random 15-dimensional subspace cuts
the iteration count roughly in half.
"""

import statistics

from tltr import LogisticLoss, SketchKind, SubspaceConfig, TrConfig, tltr_solve, tr_solve
from tltr.data import LabelConvention, map_labels, synthetic_classification
from tltr.harness import initial_guess

d = map_labels(synthetic_classification(500, 50, seed=0, noise=0.1, scale_decay=0.5),
               LabelConvention.PLUS_MINUS_ONE)
cfg = TrConfig(fine_solver="cp")
sub = SubspaceConfig(ell=15, kind=SketchKind.GAUSSIAN)

tr_its, tltr_its = [], []
for seed in range(5):
    x0 = initial_guess(50, seed)
    a = tr_solve(LogisticLoss(d), x0, cfg)
    b = tltr_solve(LogisticLoss(d), x0, cfg, sub, seed=seed)
    tr_its.append(a.iterations)
    tltr_its.append(b.iterations)
    print(f"seed {seed}: TR {a.iterations:4d}   TLTR {b.iterations:4d}   "
          f"final |g| {b.final_grad_norm:.1e}")
print("median", statistics.median(tr_its), statistics.median(tltr_its))

# how often the subspace step helped, and what it did to the ratio
trace = tltr_solve(LogisticLoss(d), initial_guess(50, 0), cfg, sub, seed=0)
used = [r for r in trace.records if r.subspace_used]
print(f"subspace step used in {len(used)} of {trace.iterations} iterations")
for r in used[:5]:
    print(f"  k={r.k:3d}  rho_tr={r.rho_tr:7.3f}  rho={r.rho:7.3f}  alpha={r.alpha}")

# with the subspace switched off the two solvers agree exactly
x0 = initial_guess(50, 0)
print(tr_solve(LogisticLoss(d), x0, cfg).records
      == tltr_solve(LogisticLoss(d), x0, cfg, None).records)
