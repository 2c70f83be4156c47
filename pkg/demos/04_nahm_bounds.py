# coding: utf-8

# # Nahm data and the Green kernel bound
#
# su(2) Nahm data on (a, b) with simple poles.  The axially symmetric solution is
# f1 = f2 = -c / sin(c x), f3 = -c cot(c x) with c = pi / (b - a).

# In[1]:

import numpy as np

from hkcurv import nahm

sol = nahm.make_axial_solution(0.0, 1.0)
print("residual", nahm.nahm_residual(sol))


# The spectral floor lambda(s) is the square root of the smallest eigenvalue of -sum ad(T_i)^2.
# At the midpoint it equals pi.

# In[2]:

lam = nahm.lambda_floor(sol)
print(nahm.lambda_floor_at(sol, 0.5))


# N(lambda) is the sup of the Green kernel of u'' - lambda^2 u with Dirichlet ends.  With
# lambda = 0 it is (b - a)/4; a positive floor makes it smaller.

# In[3]:

print(nahm.compute_N(sol.config, 0.0).N, nahm.compute_N(sol.config, lam).N)
for k in (0.5, 1, 5):
    print(k, nahm.compute_N(sol.config, k).N, np.tanh(k / 2) / (2 * k))


# Curvature bounds: 18 sqrt(N), the composed 36 N, and 9 sqrt(b - a) from N(0).

# In[4]:

rep = nahm.curvature_bound(sol)
print(rep)


# A random based gauge transformation changes the fields but not lambda or the bounds.

# In[5]:

g = nahm.gauge_transform(sol, nahm.random_gauge(sol.config, np.random.default_rng(3)))
print(g.T0_norm(), nahm.nahm_residual(g), np.abs(nahm.lambda_floor(g) - lam).max())
print(nahm.curvature_bound(g).N - rep.N)
print(nahm.kill_T0(g).T0_norm())
