"""Linear group actions on flat (hyper)Kähler spaces and their level sets.

The ambient space is R^n with the Euclidean metric, a family of ``m``
orthogonal complex structures (m = 3 for H^d, m = 1 for C^n) and a Lie
algebra of skew matrices commuting with them.  For a generator xi the
fundamental field is ``q -> xi q`` and the moment map is the quadratic form

    mu_i(q)(xi) = 1/2 g(I_i xi q, q),

which is the unique choice vanishing at the origin with
``d mu_i(v)(xi) = g(v, I_i xi q)``.  For quaternionic actions this is
``1/2 Re tr(xi q e_i q^dagger)``, the pairing of the Sp(d) moment map
``q e_i q^dagger`` with xi under the trace form.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import quatalg
from .errors import DegenerateAction, MaxIterations, NonInvariantLevel
from .quatalg import LieBasis

__all__ = [
    "GroupActionSpec", "MomentValue", "LevelSetPoint", "Freeness",
    "fundamental_field", "fundamental_fields", "moment", "moment_jacobian",
    "lambda_form", "local_freeness", "check_invariant_level",
    "project_to_level", "splitting", "null_direction",
]


@dataclass(frozen=True)
class GroupActionSpec:
    """A linear action of a compact group on flat R^n.

    ``null_cone_locally_free`` records whether the action is known to be
    locally free on mu^{-1}(0) minus the origin (True), is a declared
    counterexample (False) or is unknown (None).
    """

    lie: LieBasis
    complex_structures: np.ndarray
    name: str = "custom"
    null_cone_locally_free: bool | None = None

    def __post_init__(self):
        cs = np.asarray(self.complex_structures, float)
        n = cs.shape[-1]
        if self.lie.matrices.shape[1:] != (n, n):
            raise ValueError("generator and complex-structure dimensions differ")
        for X in self.lie.matrices:
            if np.max(np.abs(X + X.T)) > 1e-10:
                raise ValueError("generator is not skew; the action is not isometric")
            for Ii in cs:
                if np.max(np.abs(X @ Ii - Ii @ X)) > 1e-10:
                    raise ValueError("generator does not commute with the complex structures")

    @classmethod
    def quaternionic(cls, qmats, inner=None, **kw):
        """Left action of quaternionic matrices in sp(d) on H^d."""
        lie = LieBasis.from_quaternionic(qmats, inner=inner)
        d = lie.quaternionic.shape[1]
        return cls(lie, quatalg.right_mul_ops(d), **kw)

    @classmethod
    def complex(cls, cmats, inner=None, **kw):
        """Kähler case: skew-Hermitian complex matrices acting on C^n."""
        cmats = np.asarray(cmats, complex)
        mats = np.stack([quatalg.complex_real_rep(A) for A in cmats])
        lie = LieBasis.from_matrices(mats, inner=inner, block=2)
        n = cmats.shape[1]
        Jc = quatalg.complex_real_rep(1j * np.eye(n))
        return cls(lie, Jc[None], **kw)

    @property
    def n(self):
        return self.complex_structures.shape[-1]

    @property
    def m(self):
        return self.complex_structures.shape[0]

    @property
    def k(self):
        return self.lie.dim

    @property
    def is_kahler(self):
        return self.m == 1

    @property
    def gens(self):
        return self.lie.matrices


@dataclass(frozen=True)
class MomentValue:
    """Moment map value as ``m`` covectors on g (rows), in the generator basis."""

    covector: np.ndarray

    def element(self, lie: LieBasis):
        """The same value read as elements of g through the pairing 1/2 Re tr(AB).

        For Sp(1) at q = 1 this gives back (i, j, k).
        """
        return -2.0 * np.linalg.solve(lie.inner, self.covector.T).T

    def __sub__(self, other):
        return MomentValue(self.covector - _as_cov(other))

    def norm(self):
        return float(np.linalg.norm(self.covector))


def _as_cov(c):
    return np.asarray(c.covector if isinstance(c, MomentValue) else c, float)


def fundamental_field(rho, q, spec=None):
    """rho q for a coordinate vector ``rho`` (needs ``spec``) or a matrix ``rho``."""
    rho = np.asarray(rho, float)
    q = np.asarray(q, float)
    mat = spec.lie.element(rho) if rho.ndim == 1 else rho
    if mat.shape[1] != q.shape[0]:
        raise ValueError(f"dimension mismatch: {mat.shape} acting on {q.shape}")
    return mat @ q


def fundamental_fields(spec, q):
    """(n, k) matrix whose columns are the fundamental fields of the generators."""
    return np.einsum("aij,j->ia", spec.gens, q)


def moment(spec, q):
    q = np.asarray(q, float)
    F = fundamental_fields(spec, q)
    cov = 0.5 * np.einsum("i,mij,ja->ma", q, spec.complex_structures, F)
    return MomentValue(cov)


def moment_jacobian(spec, q):
    """(m*k, n) matrix of d mu: row (i, a) is (I_i xi_a q)^T."""
    F = fundamental_fields(spec, q)
    rows = np.einsum("mij,ja->mai", spec.complex_structures, F)
    return rows.reshape(spec.m * spec.k, spec.n)


def lambda_form(spec, q, v):
    """Lambda(v)(xi_a) = g(v, xi_a q), the adjoint of rho -> rho q."""
    return fundamental_fields(spec, q).T @ np.asarray(v, float)


class Freeness(str, enum.Enum):
    # infinitesimal data certifies local freeness only; FREE needs the
    # stabilisers, which a linear-algebra test cannot see
    FREE = "free"
    LOCALLY_FREE = "locally_free"
    DEGENERATE = "degenerate"


def local_freeness(spec, q, tol=1e-10):
    """Classify the point by the smallest singular value of rho -> rho q."""
    F = fundamental_fields(spec, q)
    if spec.k == 0:
        return Freeness.LOCALLY_FREE, np.inf
    # generator coordinates taken as orthonormal, so i Id on H^2 at (1, 0) gives 1
    s = np.linalg.svd(F, compute_uv=False)
    smin = float(s[-1]) if len(s) == spec.k else 0.0
    return (Freeness.DEGENERATE if smin < tol else Freeness.LOCALLY_FREE), smin


def check_invariant_level(spec, c, tol=1e-10, rng=None, samples=6):
    """Raise NonInvariantLevel unless c is fixed by sampled Ad*(exp(t xi))."""
    c = _as_cov(c)
    if np.max(np.abs(spec.lie.structure), initial=0.0) == 0.0:
        return
    rng = np.random.default_rng(1) if rng is None else rng
    lie = spec.lie
    for t in (0.3, 1.1):
        for a in range(lie.dim):
            coef = np.zeros(lie.dim)
            coef[a] = t
            gens = [coef] + [t * rng.standard_normal(lie.dim) for _ in range(samples // 3)]
            for x in gens:
                g = scipy.linalg.expm(lie.element(x))
                ginv = g.T
                ad = np.stack([lie.coordinates(g @ X @ ginv) for X in lie.matrices], axis=1)
                # (Ad* c)(xi) = c(Ad(g^-1) xi); fixed iff c composed with Ad(g) equals c
                if np.max(np.abs(c @ ad - c)) > tol:
                    raise NonInvariantLevel("level is not fixed by the coadjoint action")


def _orthonormal_columns(V, tol=1e-12):
    """Modified Gram-Schmidt with one re-orthogonalisation pass, in column order."""
    V = np.array(V, float)
    Q = np.zeros_like(V)
    for j in range(V.shape[1]):
        v = V[:, j].copy()
        for _ in range(2):
            for i in range(j):
                v -= (Q[:, i] @ v) * Q[:, i]
        nv = np.linalg.norm(v)
        if nv < tol:
            raise DegenerateAction("fundamental fields are linearly dependent")
        Q[:, j] = v / nv
    return Q


@dataclass(frozen=True)
class LevelSetPoint:
    """A point of mu^{-1}(c) with the orthogonal splitting of R^n.

    ``vertical`` spans the orbit directions, ``normals[i]`` spans I_i of
    them and ``horizontal`` is the orthogonal complement.  ``fields`` holds
    the fundamental fields (columns) and ``gram`` their Gram matrix.
    """

    spec: GroupActionSpec
    q: np.ndarray
    c: MomentValue
    residual: float
    iterations: int = 0
    fields: np.ndarray = field(default=None, repr=False)
    gram: np.ndarray = field(default=None, repr=False)
    vertical: np.ndarray = field(default=None, repr=False)
    normals: np.ndarray = field(default=None, repr=False)
    horizontal: np.ndarray = field(default=None, repr=False)

    @property
    def dim_h(self):
        return self.horizontal.shape[1]

    def orthogonality_defect(self):
        blocks = [self.vertical] + list(self.normals) + [self.horizontal]
        worst = 0.0
        for i in range(len(blocks)):
            for j in range(i + 1, len(blocks)):
                if blocks[i].size and blocks[j].size:
                    worst = max(worst, float(np.max(np.abs(blocks[i].T @ blocks[j]))))
        return worst


def splitting(spec, q):
    """Orthonormal bases of g-check, I_i g-check and the horizontal space at q."""
    F = fundamental_fields(spec, q)
    V = _orthonormal_columns(F)
    normals = np.stack([Ii @ V for Ii in spec.complex_structures])
    stacked = np.concatenate([V] + list(normals), axis=1)
    H = scipy.linalg.null_space(stacked.T, rcond=1e-10)
    return F, F.T @ F, V, normals, H


def _make_point(spec, q, c, residual, iterations):
    F, G, V, normals, H = splitting(spec, q)
    return LevelSetPoint(spec, q, c, residual, iterations, F, G, V, normals, H)


def project_to_level(spec, q0, c, tol=1e-12, max_iter=100, check_level=True):
    """Gauss-Newton onto mu^{-1}(c), stepping inside I_1 g-check + ... + I_m g-check.

    Raises DegenerateAction if the action degenerates along the way,
    MaxIterations if the residual does not drop below ``tol``.
    """
    c = MomentValue(_as_cov(c).reshape(spec.m, spec.k))
    if check_level:
        check_invariant_level(spec, c)
    q = np.array(q0, float)
    scale = max(1.0, float(np.abs(c.covector).max(initial=0.0)))
    for it in range(max_iter + 1):
        r = (moment(spec, q) - c).covector.ravel()
        res = float(np.linalg.norm(r))
        if res < tol * scale:
            return _make_point(spec, q, c, res, it)
        if it == max_iter:
            break
        status, smin = local_freeness(spec, q)
        if status is Freeness.DEGENERATE:
            raise DegenerateAction(f"sigma_min = {smin:.3g} at iteration {it}")
        F = fundamental_fields(spec, q)
        # step v = sum_{i,b} y_{ib} I_i xi_b q
        dirs = np.einsum("mij,ja->ima", spec.complex_structures, F).reshape(spec.n, -1)
        Jac = moment_jacobian(spec, q) @ dirs
        y, *_ = np.linalg.lstsq(Jac, -r, rcond=None)
        step = dirs @ y
        # damp steps that would leave the region where the quadratic model is trusted
        t = 1.0
        qn = np.linalg.norm(q)
        if np.linalg.norm(step) > 0.5 * qn and qn > 0:
            t = 0.5 * qn / np.linalg.norm(step)
        q = q + t * step
    raise MaxIterations(f"residual {res:.3g} after {max_iter} iterations")


def null_direction(spec, rng, tries=20):
    """A unit vector on the null cone mu^{-1}(0), by projecting a random point."""
    zero = np.zeros((spec.m, spec.k))
    for _ in range(tries):
        x = rng.standard_normal(spec.n)
        x /= np.linalg.norm(x)
        try:
            p = project_to_level(spec, x, zero, check_level=False)
        except (DegenerateAction, MaxIterations):
            continue
        return p.q / np.linalg.norm(p.q)
    raise MaxIterations("could not find a point on the null cone")
