"""
Random sketches
===============

Gaussian and s-hashing sketches compress R^n to R^ell while keeping
squared norms right on average.
"""

import numpy as np

from tltr import LogisticLoss, gaussian_sketch, shash_sketch, sketch_hessian
from tltr.data import LabelConvention, map_labels, synthetic_classification
from tltr.sketch import sketch_rng

n, ell = 50, 15
rng = np.random.default_rng(0)
v = rng.standard_normal(n)

S = shash_sketch(ell, n, 2, rng)
print("nonzeros per column:", set((S.toarray() != 0).sum(axis=0)))

for name, make in [("gaussian", lambda: gaussian_sketch(ell, n, rng)),
                   ("shash s=2", lambda: shash_sketch(ell, n, 2, rng))]:
    sq = np.array([np.sum(make().apply(v) ** 2) for _ in range(2000)])
    print(f"{name:10s} mean |Sv|^2/|v|^2 = {sq.mean() / (v @ v):.3f}   spread {sq.std() / (v @ v):.3f}")

# the k-th sketch of a run depends only on (seed, k)
a = gaussian_sketch(ell, n, sketch_rng(7, 3))
b = gaussian_sketch(ell, n, sketch_rng(7, 3))
print("reproducible:", a.tobytes() == b.tobytes())

# the sketched Hessian costs ell Hessian-vector products
d = map_labels(synthetic_classification(500, n, seed=0, scale_decay=0.5),
               LabelConvention.PLUS_MINUS_ONE)
obj = LogisticLoss(d)
hs = sketch_hessian(a, obj, np.zeros(n))
print(hs.shape, obj.eval_counters)
print("eigenvalues of S H S^T:", np.round(np.linalg.eigvalsh(hs)[[0, -1]], 3))
