# coding: utf-8

# # Curvature of quotients
#
# Points are pushed onto a level set by Newton steps inside the span of I_i applied to the orbit
# directions.  The tangent space then splits orthogonally into the orbit, its three rotations
# and the horizontal part, which models the tangent space of the quotient.

# In[1]:

import numpy as np

from hkcurv import catalog, curv
from hkcurv.chart import chart_sectional_curvature
from hkcurv.hkquot import project_to_level

rng = np.random.default_rng(1)


# In[2]:

eh = catalog.eguchi_hanson()
p = project_to_level(eh.spec, rng.standard_normal(8), eh.level)
print("residual", p.residual, "iterations", p.iterations, "dim H", p.dim_h)
print("orthogonality defect", p.orthogonality_defect())


# Sectional curvature of a random horizontal plane, split into the level-set part and the
# O'Neill part.  The difference is exactly three times the squared vertical component.

# In[3]:

x, y = curv.sample_planes(p.dim_h, 1, rng)
s = curv.sectional_curvature(p, p.horizontal @ x[0], p.horizontal @ y[0])
print(s.K_Q, s.K_level, s.K_Q - s.K_level - 3 * s.vertical_sq)


# The same number from a slice chart: solve for the quotient metric in coordinates and
# differentiate it twice.

# In[4]:

print(chart_sectional_curvature(p, x[0], y[0]))


# The Hopf circle action on C^2 at level -1/2 gives the round sphere of radius 1/2.

# In[5]:

hopf = catalog.hopf_kahler()
ph = project_to_level(hopf.spec, rng.standard_normal(4), hopf.level)
xs, ys = curv.sample_planes(2, 1, rng)
print(curv.sectional_curvature(ph, ph.horizontal @ xs[0], ph.horizontal @ ys[0]).K_Q)


# Pointwise estimators and every inequality between them, over 1000 planes.

# In[6]:

rep = curv.verify_bounds(p, 1000, seed=1)
for name, (ok, margin) in rep.checks().items():
    print(f"{name:28s} {ok!s:5s} {margin: .3e}")
print("V", rep.V, "F", rep.euclidean.F, "l", rep.euclidean.l)
