"""
The trust-region subproblem
===========================

Cauchy point, truncated CG and a brute-force oracle on small models.
"""

import numpy as np

from tltr import QuadraticModel, brute_force_tr, cauchy_point, steihaug_toint

rng = np.random.default_rng(1)

# a convex model whose Newton step lies outside the ball
h = np.diag([1.0, 10.0])
g = np.array([1.0, 1.0])
for radius in (10.0, 0.5, 0.1):
    m = QuadraticModel.from_matrix(g, h, radius)
    cp, st, bf = cauchy_point(m), steihaug_toint(m), brute_force_tr(m)
    print(f"radius {radius:5}: CP {cp.model_decrease:.5f}  "
          f"ST-CG {st.model_decrease:.5f}  brute {bf.model_decrease:.5f}")

# negative curvature sends truncated CG straight to the boundary
m = QuadraticModel.from_matrix(np.array([0.3, 1.0]), np.diag([-1.0, 2.0]), 1.0)
st = steihaug_toint(m)
print("indefinite:", st.p, np.linalg.norm(st.p), st.boundary_hit)

# capping CG at one iteration gives back the Cauchy point
a = rng.standard_normal((6, 6))
m = QuadraticModel.from_matrix(rng.standard_normal(6), a @ a.T + np.eye(6), 50.0)
print(np.allclose(steihaug_toint(m, max_iter=1).p, cauchy_point(m).p))
for cap in (1, 2, 4, 6):
    print(f"cap {cap}: decrease {steihaug_toint(m, max_iter=cap).model_decrease:.6f}")
