# coding: utf-8

# # Curvature far out on the quotient
#
# Along a ray of the null cone the Eguchi-Hanson curvature decays like R^-6.  For the product of
# two copies, a ray in one factor keeps the other factor at its core, where the curvature is
# fixed, so the maximum never decays.  The action there is not locally free on the null cone.

# In[1]:

import numpy as np

from hkcurv import catalog, curv

radii = [1, 2, 4, 8, 16]


# In[2]:

for cid in ("eguchi-hanson", "tp1xtp1"):
    e = catalog.load_catalog_example(cid)
    rows = curv.asymptotic_scan(e.spec, e.level, e.ray(np.random.default_rng(0)), radii, n_planes=200)
    print(cid, "locally free on the null cone:", e.spec.null_cone_locally_free)
    for r in rows:
        print(f"  R={r.radius:5g} |q|={r.norm_q:8.4f} max|K|={r.max_abs_K:.3e} V={r.V:.3e} l={r.l:.3e}")
