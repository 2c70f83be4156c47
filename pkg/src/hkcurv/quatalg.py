"""Quaternion arithmetic, quaternionic matrices and Lie-algebra bases.

Quaternions are stored scalar-first as float arrays whose last axis has
length 4: ``(w, x, y, z) = w + x i + y j + z k`` with the Hamilton
convention ``ij = k, jk = i, ki = j``.  A vector in H^d is an array of shape
``(d, 4)`` and a quaternionic matrix an array of shape ``(d, d, 4)``.

Everything downstream works with the real representation: H^d is
identified with R^{4d} by flattening, a quaternionic matrix acting on the
left becomes a real ``(4d, 4d)`` matrix, and the complex structures
``e1, e2, e3`` are right multiplication by ``i, j, k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "ONE", "I", "J", "K", "SU2_INNER_SCALE",
    "qmul", "qconj", "qnorm", "quat_arith",
    "left_matrix", "right_matrix",
    "qmatmul", "qdagger", "is_sp", "qmatvec",
    "real_rep", "complex_real_rep", "right_mul_ops",
    "sp_moment",
    "LieBasis", "su2_basis", "check_su2_triple", "ad_operator",
]

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])

# <A, B> = SU2_INNER_SCALE * (a . b) on coordinates in the basis (i/2, j/2, k/2).
# Smallest scale with |[A, B]| <= 2|A||B|, equality on orthonormal pairs;
# tests/test_quatalg.py recovers it by maximising the bracket ratio.
SU2_INNER_SCALE = 0.25


def _mult_table():
    # T[r, s, t]: coefficient of basis element t in (basis r) * (basis s)
    t = np.zeros((4, 4, 4))
    prods = {
        (0, 0): (0, 1), (0, 1): (1, 1), (0, 2): (2, 1), (0, 3): (3, 1),
        (1, 0): (1, 1), (1, 1): (0, -1), (1, 2): (3, 1), (1, 3): (2, -1),
        (2, 0): (2, 1), (2, 1): (3, -1), (2, 2): (0, -1), (2, 3): (1, 1),
        (3, 0): (3, 1), (3, 1): (2, 1), (3, 2): (1, -1), (3, 3): (0, -1),
    }
    for (r, s), (out, sign) in prods.items():
        t[r, s, out] = sign
    return t


_TABLE = _mult_table()
_CONJ = np.array([1.0, -1.0, -1.0, -1.0])


def qmul(p, q):
    """Hamilton product, broadcasting over leading axes."""
    return np.einsum("...r,...s,rst->...t", np.asarray(p, float), np.asarray(q, float), _TABLE)


def qconj(q):
    return np.asarray(q, float) * _CONJ


def qnorm(q):
    return np.linalg.norm(np.asarray(q, float), axis=-1)


def quat_arith(p, q=None, op="mul"):
    """Dispatch ``mul``, ``conj`` or ``norm`` (``q`` is ignored by the unary ops)."""
    if op == "mul":
        return qmul(p, q)
    if op == "conj":
        return qconj(p)
    if op == "norm":
        return qnorm(p)
    raise ValueError(f"unknown quaternion op {op!r}")


def left_matrix(a):
    """4x4 real matrix of v -> a v."""
    return np.einsum("r,rst->ts", np.asarray(a, float), _TABLE)


def right_matrix(a):
    """4x4 real matrix of v -> v a."""
    return np.einsum("s,rst->tr", np.asarray(a, float), _TABLE)


def qmatmul(A, B):
    """Product of quaternionic matrices (or matrix times vector)."""
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    if B.ndim == 2:
        return np.einsum("ijr,js,rst->it", A, B, _TABLE)
    return np.einsum("ijr,jks,rst->ikt", A, B, _TABLE)


def qmatvec(A, q):
    return qmatmul(A, q)


def qdagger(A):
    """Transpose followed by quaternionic conjugation."""
    return qconj(np.swapaxes(np.asarray(A, float), 0, 1))


def is_sp(A, tol=1e-10):
    """Membership test for sp(d): A^dagger = -A entrywise."""
    return bool(np.max(np.abs(qdagger(A) + np.asarray(A, float)), initial=0.0) <= tol)


def real_rep(A):
    """Real (4d, 4d) matrix of the left action q -> A q on H^d = R^{4d}."""
    A = np.asarray(A, float)
    d = A.shape[0]
    blocks = np.einsum("ijr,rst->itjs", A, _TABLE)
    return blocks.reshape(4 * d, 4 * d)


def complex_real_rep(A):
    """Real (2n, 2n) matrix of z -> A z, coordinates ordered (Re z1, Im z1, Re z2, ...)."""
    A = np.asarray(A, complex)
    n = A.shape[0]
    out = np.zeros((n, 2, n, 2))
    out[:, 0, :, 0] = A.real
    out[:, 0, :, 1] = -A.imag
    out[:, 1, :, 0] = A.imag
    out[:, 1, :, 1] = A.real
    return out.reshape(2 * n, 2 * n)


def right_mul_ops(d):
    """The complex structures e1, e2, e3 on R^{4d}: right multiplication by i, j, k.

    Applying e1, then e2, then e3 to q gives q i j k = -q.
    """
    return np.stack([np.kron(np.eye(d), right_matrix(u)) for u in (I, J, K)])


def sp_moment(q):
    """(q i q^dagger, q j q^dagger, q k q^dagger) for q in H^d, as three (d, d, 4) matrices."""
    q = np.asarray(q, float)
    qd = qconj(q)
    out = []
    for u in (I, J, K):
        qu = qmul(q, u)
        out.append(qmul(qu[:, None, :], qd[None, :, :]))
    return np.stack(out)


@dataclass(frozen=True)
class LieBasis:
    """Basis of a matrix Lie algebra with its structure constants.

    ``matrices`` holds real matrices (k, n, n); ``inner`` is the Gram matrix
    of the invariant inner product in this basis.  ``structure[a, b, c]`` is
    the coefficient of basis element c in [xi_a, xi_b].
    """

    matrices: np.ndarray
    inner: np.ndarray
    structure: np.ndarray = field(repr=False)
    quaternionic: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_matrices(cls, mats, inner=None, quaternionic=None, block=1):
        mats = np.asarray(mats, float)
        k = mats.shape[0]
        flat = mats.reshape(k, -1).T
        comm = np.einsum("aij,bjk->abik", mats, mats)
        comm = comm - np.swapaxes(comm, 0, 1)
        coef, *_ = np.linalg.lstsq(flat, comm.reshape(k * k, -1).T, rcond=None)
        structure = coef.T.reshape(k, k, k)
        if inner is None:
            # Re tr(A B^dagger); each scalar entry expands to a block x block real block
            inner = np.einsum("aij,bij->ab", mats, mats) / block
        return cls(mats, np.asarray(inner, float), structure, quaternionic)

    @classmethod
    def from_quaternionic(cls, qmats, inner=None):
        qmats = np.asarray(qmats, float)
        for A in qmats:
            if not is_sp(A):
                raise ValueError("generator is not in sp(d)")
        mats = np.stack([real_rep(A) for A in qmats])
        return cls.from_matrices(mats, inner=inner, quaternionic=qmats, block=4)

    @property
    def dim(self):
        return self.matrices.shape[0]

    def element(self, coords):
        return np.tensordot(np.asarray(coords, float), self.matrices, axes=1)

    def bracket(self, x, y):
        return np.einsum("a,b,abc->c", x, y, self.structure)

    def norm(self, x):
        x = np.asarray(x, float)
        return float(np.sqrt(x @ self.inner @ x))

    def coordinates(self, mat):
        """Coordinates of a matrix in the span; ValueError if it is not in the span."""
        flat = self.matrices.reshape(self.dim, -1).T
        coef, *_ = np.linalg.lstsq(flat, np.ravel(mat), rcond=None)
        err = np.linalg.norm(flat @ coef - np.ravel(mat))
        if err > 1e-9 * max(1.0, np.linalg.norm(mat)):
            raise ValueError("element is not in the span of the basis")
        return coef

    def closure_defect(self):
        k = self.dim
        comm = np.einsum("aij,bjk->abik", self.matrices, self.matrices)
        comm = comm - np.swapaxes(comm, 0, 1)
        recon = np.einsum("abc,cij->abij", self.structure, self.matrices)
        return float(np.max(np.abs(comm - recon), initial=0.0)) if k else 0.0

    def invariance_defect(self, rng=None, samples=8, t=0.3):
        """Max deviation of <Ad(g)x, Ad(g)y> from <x, y> over sampled g = exp(t xi)."""
        rng = np.random.default_rng(0) if rng is None else rng
        worst = 0.0
        for _ in range(samples):
            g = scipy.linalg.expm(t * self.element(rng.standard_normal(self.dim)))
            ad = np.stack([self.coordinates(g @ m @ np.linalg.inv(g)) for m in self.matrices], axis=1)
            worst = max(worst, float(np.max(np.abs(ad.T @ self.inner @ ad - self.inner))))
        return worst


def su2_basis():
    """The basis (i/2, j/2, k/2) of sp(1) = su(2), with [e1, e2] = e3.

    The trace inner product Re(a conj(b)) gives <e_a, e_b> = delta_ab / 4,
    which is the normalisation |[A, B]| <= 2|A||B|.
    """
    qmats = np.stack([0.5 * u.reshape(1, 1, 4) for u in (I, J, K)])
    return LieBasis.from_quaternionic(qmats)


def check_su2_triple(t, basis=None, tol=1e-10):
    """Test [t1, t2] = t3, [t2, t3] = t1, [t3, t1] = t2.

    ``t`` is a (3, k) array of coordinates in ``basis`` (default su(2)).
    Returns ``(ok, defect)`` with defect the largest bracket mismatch norm.
    """
    basis = su2_basis() if basis is None else basis
    t = np.asarray(t, float)
    defect = 0.0
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        defect = max(defect, basis.norm(basis.bracket(t[i], t[j]) - t[k]))
    return defect <= tol, defect


def ad_operator(rho, basis=None):
    """Matrix of ad(rho) in the generator basis, from the structure constants."""
    basis = su2_basis() if basis is None else basis
    rho = np.asarray(rho, float)
    if rho.shape != (basis.dim,):
        raise ValueError(f"expected {basis.dim} coordinates, got shape {rho.shape}")
    return np.einsum("a,abc->cb", rho, basis.structure)
