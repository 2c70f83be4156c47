# coding: utf-8

# # Quaternions, complex structures and moment maps
#
# H^d is stored as a (d, 4) array, scalar part first, and flattened to R^{4d}.
# The three complex structures are right multiplication by i, j and k.

# In[1]:

import numpy as np

from hkcurv import catalog
from hkcurv.hkquot import local_freeness, moment
from hkcurv.quatalg import I, J, K, qmul, qconj, right_mul_ops, su2_basis


# Hamilton's rules, and a rotation by 90 degrees about k sending i to j.

# In[2]:

print(qmul(I, J), qmul(qmul(I, J), K))
q = (np.array([1.0, 0, 0, 0]) + K) / np.sqrt(2)
print(qmul(qmul(q, I), qconj(q)))


# The complex structures anticommute, and applying e1, e2, e3 in turn gives -1.

# In[3]:

e1, e2, e3 = right_mul_ops(2)
v = np.random.default_rng(0).standard_normal(8)
print(np.abs(e1 @ e2 + e2 @ e1).max(), np.abs(e3 @ e2 @ e1 @ v + v).max())


# su(2) in the basis (i/2, j/2, k/2) has bracket [e1, e2] = e3; its inner product is scaled so
# that |[A, B]| <= 2|A||B| is sharp.

# In[4]:

b = su2_basis()
print(b.bracket([1, 0, 0], [0, 1, 0]), b.norm(b.bracket([1, 0, 0], [0, 1, 0])) / (2 * b.norm([1, 0, 0]) ** 2))


# The Eguchi-Hanson action: the circle generated by i Id on H^2.  At q = (1, 0) the first moment
# component is -1/2, which is the catalog level.

# In[5]:

eh = catalog.eguchi_hanson()
print(moment(eh.spec, eh.base_point).covector.ravel())
print(local_freeness(eh.spec, eh.base_point))
print(local_freeness(eh.spec, np.zeros(8)))
