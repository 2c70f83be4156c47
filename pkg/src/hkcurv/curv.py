"""Curvature of quotients of flat space and the O'Neill-type estimators.

Let X, Y be horizontal at a level-set point q and extend Y horizontally
and tangentially to the level set.  The ambient connection is the plain
derivative and the fundamental fields are linear, so ``nabla_X (nu q) =
nu X``.  Differentiating ``g(Y, nu q) = 0`` and ``g(Y, I_i nu q) = 0``
along X gives, for every generator nu,

    g(rho_0 q, nu q) = -g(Y, nu X),    g(rho_i q, nu q) = -g(Y, I_i nu X),

where the normal part of nabla_X Y is rho_0 q + sum_i I_i rho_i q.  These
Gram systems are all that is used: rho_0 is the O'Neill tensor A(X, Y)
and sum_i I_i rho_i q the second fundamental form alpha(X, Y).  Then

    K_level = g(alpha(X,X), alpha(Y,Y)) - |alpha(X,Y)|^2
    K_Q     = K_level + 3 |rho_0(X,Y) q|^2

for an orthonormal horizontal pair (the ambient curvature is zero).

Operator norms of the bilinear maps (V, F, |C|) are found by alternating
maximisation with random restarts.  The results are lower bounds on the
supremum (non-certified); a dense sampling routine is provided for
cross-checks at small dimension.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import GramSingular, NonOrthonormalPlane
from .hkquot import LevelSetPoint, project_to_level

__all__ = [
    "NormChoice", "PerpComponents", "CurvatureSample", "BilinearNorm", "LNorm",
    "EstimatorReport", "BoundsReport", "ScanRow",
    "perp_components", "sectional_curvature", "curvature_batch",
    "bilinear_norm", "sampled_bilinear_norm",
    "a_tensor", "b_tensor", "c_tensor",
    "v_norm", "f_norm", "c_norm", "l_norm", "estimators",
    "sample_planes", "verify_bounds", "optimize_plane", "asymptotic_scan",
]

SLACK = 1e-8


class NormChoice(str, enum.Enum):
    METRIC = "metricNorm"
    EUCLIDEAN = "fixedEuclidean"


@dataclass(frozen=True)
class PerpComponents:
    """Coordinates of rho_0, rho_1, ..., rho_m (rows) in the generator basis."""

    rho: np.ndarray
    fields: np.ndarray = field(repr=False)

    def vectors(self):
        """rho_i q for each i, as rows."""
        return self.rho @ self.fields.T


@dataclass(frozen=True)
class CurvatureSample:
    X: np.ndarray
    Y: np.ndarray
    K_Q: float
    K_level: float
    vertical_sq: float
    components: PerpComponents = field(repr=False)


def _gram_solver(point):
    try:
        return scipy.linalg.cho_factor(point.gram)
    except np.linalg.LinAlgError as exc:
        raise GramSingular("action is not locally free at this point") from exc


def _perp_coeffs(point, X, Y):
    """rho coefficients for batches X, Y of shape (p, n); returns (p, m + 1, k)."""
    spec = point.spec
    XA = np.einsum("aij,pj->pai", spec.gens, X)  # nu X
    b0 = -np.einsum("pi,pai->pa", Y, XA)
    bi = -np.einsum("pi,mij,paj->pma", Y, spec.complex_structures, XA)
    rhs = np.concatenate([b0[:, None, :], bi], axis=1)
    cf = _gram_solver(point)
    p, mm, k = rhs.shape
    sol = scipy.linalg.cho_solve(cf, rhs.reshape(-1, k).T).T
    return sol.reshape(p, mm, k)


def _check_horizontal(point, *vecs, tol=1e-8):
    P = np.concatenate([point.vertical] + list(point.normals), axis=1)
    for v in vecs:
        scale = max(1.0, float(np.linalg.norm(v)))
        if np.linalg.norm(P.T @ v) > tol * scale:
            raise ValueError("vector is not horizontal at this point")


def perp_components(point: LevelSetPoint, X, Y, check=True):
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    if check:
        _check_horizontal(point, X, Y)
    rho = _perp_coeffs(point, X[None], Y[None])[0]
    return PerpComponents(rho, point.fields)


def _alpha(point, rho):
    # rho: (p, m, k) -> sum_i I_i F rho_i, shape (p, n)
    Frho = np.einsum("ia,pma->pmi", point.fields, rho)
    return np.einsum("mij,pmj->pi", point.spec.complex_structures, Frho)


def curvature_batch(point, X, Y):
    """K_Q, K_level and |A(X,Y)|^2 for orthonormal horizontal pairs (p, n)."""
    rXY = _perp_coeffs(point, X, Y)
    rXX = _perp_coeffs(point, X, X)
    rYY = _perp_coeffs(point, Y, Y)
    aXY, aXX, aYY = (_alpha(point, r[:, 1:]) for r in (rXY, rXX, rYY))
    k_level = np.einsum("pi,pi->p", aXX, aYY) - np.einsum("pi,pi->p", aXY, aXY)
    v0 = rXY[:, 0] @ point.fields.T
    vert = np.einsum("pi,pi->p", v0, v0)
    return k_level + 3.0 * vert, k_level, vert, rXY


def sectional_curvature(point, X, Y, tol=1e-9):
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    if abs(X @ X - 1) > tol or abs(Y @ Y - 1) > tol or abs(X @ Y) > tol:
        raise NonOrthonormalPlane("X, Y must be orthonormal")
    _check_horizontal(point, X, Y)
    kq, kl, vert, rho = curvature_batch(point, X[None], Y[None])
    return CurvatureSample(X, Y, float(kq[0]), float(kl[0]), float(vert[0]),
                           PerpComponents(rho[0], point.fields))


@dataclass(frozen=True)
class BilinearNorm:
    value: float
    x: np.ndarray
    y: np.ndarray
    restarts: int
    iterations: int
    certified: bool = False


def _top_singular(M):
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    return s[0], vt[0]


def bilinear_norm(T, restarts=32, rng=None, max_iter=500, rtol=1e-15):
    """sup |B(x, y)| over unit x, y for B(x, y)_i = sum T[i, j, k] x_j y_k.

    Alternating maximisation: for fixed y the best x is the top right
    singular vector of T.y, and vice versa; each sweep cannot decrease the
    value.  Returns the best of ``restarts`` random starts.
    """
    T = np.asarray(T, float)
    p, r, s = T.shape
    if p == 0 or r == 0 or s == 0:
        return BilinearNorm(0.0, np.zeros(r), np.zeros(s), 0, 0, certified=True)
    rng = np.random.default_rng(0) if rng is None else rng
    best = BilinearNorm(-1.0, None, None, restarts, 0)
    total = 0
    for _ in range(max(1, restarts)):
        y = rng.standard_normal(s)
        y /= np.linalg.norm(y)
        val = 0.0
        for it in range(max_iter):
            _, x = _top_singular(np.einsum("ijk,k->ij", T, y))
            new, y = _top_singular(np.einsum("ijk,j->ik", T, x))
            total += 1
            if new - val <= rtol * max(new, 1e-300):
                val = max(val, new)
                break
            val = new
        if val > best.value:
            best = BilinearNorm(float(val), x, y, restarts, 0)
    return BilinearNorm(best.value, best.x, best.y, restarts, total)


def sampled_bilinear_norm(T, n_samples=100_000, rng=None, chunk=20_000):
    """Dense-sampling estimate of the bilinear norm.

    Samples pairs (u, x) on the unit spheres of the output and first input
    space and evaluates sup over y in closed form, |sum_i u_i T_i^T x|.
    No iteration is involved.
    """
    T = np.asarray(T, float)
    p, r, s = T.shape
    if p == 0 or r == 0 or s == 0:
        return 0.0
    rng = np.random.default_rng(12345) if rng is None else rng
    best = 0.0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        u = rng.standard_normal((m, p))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        x = rng.standard_normal((m, r))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        vals = np.linalg.norm(np.einsum("ni,ijk,nj->nk", u, T, x), axis=1)
        best = max(best, float(vals.max()))
        done += m
    return best


def _inv_sqrt(G):
    w, U = np.linalg.eigh(G)
    if w.min(initial=np.inf) <= 0:
        raise GramSingular("Gram matrix is not positive definite")
    return (U / np.sqrt(w)) @ U.T


def _restricted_gens(point):
    H = point.horizontal
    return np.einsum("ia,kij,jb->kab", H, point.spec.gens, H)


def a_tensor(point):
    """A as a map R^h x R^h -> R^k, orthonormal coordinates on both sides.

    Entry [c, j, k]: component c of A(H e_j, H e_k) in a g-check-orthonormal frame.
    """
    W = _inv_sqrt(point.gram)
    N = _restricted_gens(point)  # (k, h, h): H^T xi_a H
    M = -np.einsum("ca,aij->cij", W, N)  # B(x, y)_c = y^T M_c x
    return np.swapaxes(M, 1, 2)


def _norm_gram(point, choice):
    choice = NormChoice(choice)
    return point.gram if choice is NormChoice.METRIC else np.eye(point.spec.k)


def b_tensor(point, choice=NormChoice.EUCLIDEAN):
    """B(X, rho) = horizontal part of rho X, unit balls of |.| on H and the chosen norm on g."""
    P = _inv_sqrt(_norm_gram(point, choice))
    N = _restricted_gens(point)
    return np.einsum("aij,ab->ijb", N, P)


def c_tensor(point):
    """C(X, U) = horizontal part of rho X with rho q = U, over unit U in g-check."""
    coef, *_ = np.linalg.lstsq(point.fields, point.vertical, rcond=None)
    N = _restricted_gens(point)
    return np.einsum("aij,ab->ijb", N, coef)


def _empty_h(point):
    return point.dim_h == 0


def v_norm(point, restarts=32, seed=0):
    if _empty_h(point):
        return BilinearNorm(0.0, np.zeros(0), np.zeros(0), 0, 0, certified=True)
    return bilinear_norm(a_tensor(point), restarts, np.random.default_rng(seed))


def f_norm(point, choice=NormChoice.EUCLIDEAN, restarts=32, seed=0):
    if _empty_h(point):
        return BilinearNorm(0.0, np.zeros(0), np.zeros(0), 0, 0, certified=True)
    return bilinear_norm(b_tensor(point, choice), restarts, np.random.default_rng(seed))


def c_norm(point, restarts=32, seed=0):
    if _empty_h(point):
        return BilinearNorm(0.0, np.zeros(0), np.zeros(0), 0, 0, certified=True)
    return bilinear_norm(c_tensor(point), restarts, np.random.default_rng(seed))


@dataclass(frozen=True)
class LNorm:
    value: float
    bound1: float
    bound2: float

    @property
    def within_bounds(self):
        return self.value <= min(self.bound1, self.bound2) + SLACK


def l_norm(point, choice=NormChoice.EUCLIDEAN):
    """Norm of the inverse of rho-check -> Lambda(rho-check), with both upper bounds.

    With P the Gram matrix of the chosen norm on g, the dual norm of a
    covector L is sqrt(L^T P^-1 L) and Lambda(rho-check) = G rho, so every
    quantity is a top generalized eigenvalue.
    """
    G = point.gram
    P = _norm_gram(point, choice)
    GPG = G @ np.linalg.solve(P, G)
    top = lambda A, B: float(scipy.linalg.eigh(A, B, eigvals_only=True)[-1])
    try:
        l = np.sqrt(top(G, GPG))
        b1 = np.sqrt(top(P, G))
        b2 = top(P, GPG) ** 0.25
    except np.linalg.LinAlgError as exc:
        raise GramSingular("Gram matrix is singular") from exc
    return LNorm(float(l), float(b1), float(b2))


@dataclass(frozen=True)
class EstimatorReport:
    V: float
    F: float
    l: float
    Cnorm: float
    norm_choice: str
    l_bound1: float
    l_bound2: float
    restarts: int
    iterations: int

    @property
    def v_le_lf(self):
        return self.V <= self.l * self.F + SLACK

    @property
    def v_le_c(self):
        return self.V <= self.Cnorm + SLACK


def estimators(point, choice=NormChoice.EUCLIDEAN, restarts=32, seed=0, V=None, C=None):
    V = v_norm(point, restarts, seed) if V is None else V
    C = c_norm(point, restarts, seed) if C is None else C
    F = f_norm(point, choice, restarts, seed)
    L = l_norm(point, choice)
    return EstimatorReport(V.value, F.value, L.value, C.value, NormChoice(choice).value,
                           L.bound1, L.bound2, restarts, V.iterations + F.iterations + C.iterations)


def sample_planes(h, count, rng):
    """Haar-random orthonormal pairs in R^h, as two (count, h) arrays."""
    x = rng.standard_normal((count, h))
    y = rng.standard_normal((count, h))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y -= np.einsum("pi,pi->p", x, y)[:, None] * x
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    return x, y


def _plane_curvature_coords(point, x, y):
    H = point.horizontal
    kq, _, _, _ = curvature_batch(point, (H @ x)[None], (H @ y)[None])
    return float(kq[0])


def optimize_plane(point, starts, maximize=True):
    """Local search over 2-planes in the horizontal space for extreme K_Q.

    ``starts`` is a list of (x, y) pairs in horizontal coordinates.
    Returns (best value, x, y).
    """
    h = point.dim_h
    sign = -1.0 if maximize else 1.0

    def objective(z):
        x, y = z[:h], z[h:]
        nx = np.linalg.norm(x)
        if nx < 1e-12:
            return 0.0
        x = x / nx
        y = y - (x @ y) * x
        ny = np.linalg.norm(y)
        if ny < 1e-12:
            return 0.0
        return sign * _plane_curvature_coords(point, x, y / ny)

    best = (np.inf, None, None)
    for x0, y0 in starts:
        z0 = np.concatenate([x0, y0])
        res = scipy.optimize.minimize(objective, z0, method="BFGS",
                                      options={"gtol": 1e-10, "maxiter": 200})
        for f, z in ((res.fun, res.x), (objective(z0), z0)):
            if f < best[0]:
                x = z[:h] / np.linalg.norm(z[:h])
                y = z[h:] - (x @ z[h:]) * x
                best = (f, x, y / np.linalg.norm(y))
    return sign * best[0], best[1], best[2]


@dataclass
class BoundsReport:
    mode: str
    seed: int
    n_planes: int
    K_Q: np.ndarray
    K_level: np.ndarray
    vertical_sq: np.ndarray
    euclidean: EstimatorReport
    metric: EstimatorReport
    kahler_best: float | None = None
    kahler_best_plane: tuple | None = None

    @property
    def V(self):
        return self.euclidean.V

    @property
    def quotient_factor(self):
        return 5.0 if self.mode == "kahler" else 9.0

    @property
    def level_factor(self):
        return 2.0 if self.mode == "kahler" else 6.0

    def checks(self):
        """Inequality name -> (passed, worst margin); margin >= 0 means satisfied."""
        V2 = self.V ** 2
        out = {}

        def add(name, margins):
            margins = np.atleast_1d(np.asarray(margins, float))
            worst = float(margins.min()) if margins.size else np.inf
            out[name] = (bool(worst >= -SLACK), worst)

        add("K_Q<=%gV^2" % self.quotient_factor, self.quotient_factor * V2 - np.abs(self.K_Q))
        add("K_level<=%gV^2" % self.level_factor, self.level_factor * V2 - np.abs(self.K_level))
        add("K_Q-K_level=3|A|^2",
            -np.abs(self.K_Q - self.K_level - 3 * self.vertical_sq) / np.maximum(1.0, np.abs(self.K_Q)))
        add("K_Q-K_level>=0", self.K_Q - self.K_level)
        for rep in (self.euclidean, self.metric):
            add(f"V<=lF[{rep.norm_choice}]", rep.l * rep.F - rep.V)
        add("V<=|C|", self.metric.Cnorm - self.metric.V)
        add("l_metric<=1", 1.0 - self.metric.l)
        add("l<=min(bound1,bound2)",
            [min(r.l_bound1, r.l_bound2) - r.l for r in (self.euclidean, self.metric)])
        return out

    @property
    def passed(self):
        return all(ok for ok, _ in self.checks().values())


def verify_bounds(point, n_planes, mode=None, seed=0, restarts=32):
    """Sample ``n_planes`` horizontal planes and evaluate every curvature inequality.

    In Kähler mode the best plane for K_Q found by a local optimiser is
    reported for the lower bound sup K_Q >= V; that bound is never declared
    violated from sampling alone.
    """
    spec = point.spec
    mode = ("kahler" if spec.is_kahler else "hyperkahler") if mode is None else mode
    if (mode == "kahler") != spec.is_kahler:
        raise ValueError(f"mode {mode!r} does not match a spec with {spec.m} complex structures")
    rng = np.random.default_rng(seed)
    V = v_norm(point, restarts, seed)
    C = c_norm(point, restarts, seed)
    eu = estimators(point, NormChoice.EUCLIDEAN, restarts, seed, V=V, C=C)
    me = estimators(point, NormChoice.METRIC, restarts, seed, V=V, C=C)
    h = point.dim_h
    if n_planes == 0 or h < 2:
        K = np.zeros(0)
        report = BoundsReport(mode, seed, 0, K, K.copy(), K.copy(), eu, me)
    else:
        x, y = sample_planes(h, n_planes, rng)
        H = point.horizontal
        kq, kl, vert, _ = curvature_batch(point, x @ H.T, y @ H.T)
        report = BoundsReport(mode, seed, n_planes, kq, kl, vert, eu, me)
    if mode == "kahler" and h >= 2:
        starts = []
        if report.n_planes:
            top = np.argsort(report.K_Q)[::-1][:3]
            starts += [(x[i], y[i]) for i in top]
        if V.value > 0:
            # the certificate pair of V spans a plane where the O'Neill term is maximal
            vx = V.x - (V.x @ V.y) * V.y
            if np.linalg.norm(vx) > 1e-8:
                starts.append((V.y, vx / np.linalg.norm(vx)))
        if not starts:
            xs, ys = sample_planes(h, 1, rng)
            starts.append((xs[0], ys[0]))
        best, bx, by = optimize_plane(point, starts)
        report.kahler_best = best
        report.kahler_best_plane = (bx, by)
    return report


@dataclass(frozen=True)
class ScanRow:
    radius: float
    norm_q: float
    max_abs_K: float
    V: float
    l: float
    F: float
    residual: float


def asymptotic_scan(spec, level, ray, radii, n_planes=200, seed=0, restarts=16):
    """Curvature along a ray of starting points projected to the level set.

    ``ray(R)`` returns the starting point for radius R.  The spec must say
    whether it is locally free on the null cone (``null_cone_locally_free``
    True) or is a declared counterexample (False).
    """
    if spec.null_cone_locally_free is None:
        raise ValueError("spec does not declare null_cone_locally_free")
    rows = []
    for R in radii:
        point = project_to_level(spec, ray(R), level)
        rng = np.random.default_rng(seed)
        if point.dim_h >= 2 and n_planes:
            x, y = sample_planes(point.dim_h, n_planes, rng)
            H = point.horizontal
            kq, _, _, _ = curvature_batch(point, x @ H.T, y @ H.T)
            kmax = float(np.abs(kq).max())
        else:
            kmax = 0.0
        V = v_norm(point, restarts, seed).value
        L = l_norm(point, NormChoice.EUCLIDEAN).value
        F = f_norm(point, NormChoice.EUCLIDEAN, restarts, seed).value
        rows.append(ScanRow(float(R), float(np.linalg.norm(point.q)), kmax, V, L, F, point.residual))
    return rows
