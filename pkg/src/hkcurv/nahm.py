"""su(2) Nahm data on an interval with simple poles, and the curvature bound pipeline.

Lie-algebra values are coordinate 3-vectors in the basis (i/2, j/2, k/2)
of su(2), so the bracket is the cross product and the invariant norm is
|x| / 2 (see ``quatalg.SU2_INNER_SCALE``).  A quadruple (T0, T1, T2, T3)
on the grid is an array of shape (n, 4, 3).

Every field is split into an exact pole part and a bounded remainder,

    T_i = S_i + R_i,   S_i(s) = -(alpha_i / (s - a) + beta_i / (s - b)),   S_0 = 0,

with alpha, beta su(2) triples ([alpha_1, alpha_2] = alpha_3 and cyclic).
The minus sign is forced: near s = a, T_i ~ c_i / (s - a) solves
dT_1/ds = [T_2, T_3] only when [c_2, c_3] = -c_1.  Only the remainder is
sampled; derivatives of the pole part are exact.

The grid is the Chebyshev points of the first kind, which avoid the
endpoints, with Fejer quadrature weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.optimize
import scipy.special
from scipy.interpolate import BarycentricInterpolator

from .errors import GaugeBoundaryError, NegativeSpectrum, WronskianCollapse
from .quatalg import SU2_INNER_SCALE, check_su2_triple

__all__ = [
    "NahmConfig", "NahmSolution", "GaugePath", "GreenEval", "BoundReport", "VerticalSolution",
    "TangentResidual", "chebyshev_grid", "axial_profiles", "make_axial_solution",
    "make_elliptic_solution", "nahm_residual", "gauge_transform", "random_gauge",
    "killing_gauge", "kill_T0", "nahm_metric", "nahm_fundamental_field",
    "quaternion_images", "nahm_lambda_form", "tangent_residual", "lambda_floor", "lambda_floor_at",
    "hamiltonian", "compute_N", "curvature_bound", "solve_vertical", "comparison_solution",
    "su2_norm", "cross_matrix",
]

E3 = np.eye(3)
AXIAL_ALPHA = E3.copy()
AXIAL_BETA = np.diag([-1.0, -1.0, 1.0])
_SQRT_INNER = np.sqrt(SU2_INNER_SCALE)


def su2_norm(x):
    return _SQRT_INNER * np.linalg.norm(x, axis=-1)


def cross_matrix(v):
    """[v]_x, the matrix of ad(v) = v x ., broadcasting over leading axes."""
    v = np.asarray(v, float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def chebyshev_grid(a, b, n):
    """Chebyshev nodes of the first kind on (a, b), increasing, with Fejer weights."""
    k = np.arange(n)
    theta = (2 * k + 1) * np.pi / (2 * n)
    j = np.arange(1, n // 2 + 1)
    w = (2.0 / n) * (1 - 2 * np.sum(np.cos(2 * np.outer(theta, j)) / (4 * j ** 2 - 1), axis=1))
    x = -np.cos(theta)
    L = b - a
    return a + 0.5 * L * (x + 1), 0.5 * L * w


def _bary_weights(x):
    x = np.asarray(x, float)
    scale = 4.0 / (x.max() - x.min())
    diff = scale * (x[:, None] - x[None, :])
    np.fill_diagonal(diff, 1.0)
    logw = -np.sum(np.log(np.abs(diff)), axis=1)
    sign = np.prod(np.sign(diff), axis=1)
    return sign * np.exp(logw - logw.max())


def _diff_matrix(x):
    w = _bary_weights(x)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


@dataclass(frozen=True)
class NahmConfig:
    a: float = 0.0
    b: float = 1.0
    alpha: np.ndarray = field(default_factory=lambda: AXIAL_ALPHA.copy())
    beta: np.ndarray = field(default_factory=lambda: AXIAL_BETA.copy())
    n: int = 96
    nodes: np.ndarray = field(default=None, repr=False)
    weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("need b > a")
        for name in ("alpha", "beta"):
            t = np.asarray(getattr(self, name), float)
            ok, defect = check_su2_triple(t)
            if not ok:
                raise ValueError(f"{name} is not an su(2) triple (defect {defect:.3g})")
            object.__setattr__(self, name, t)
        if self.nodes is None:
            s, w = chebyshev_grid(self.a, self.b, self.n)
            object.__setattr__(self, "nodes", s)
            object.__setattr__(self, "weights", w)

    @property
    def length(self):
        return self.b - self.a

    def pole(self, s=None):
        """Pole parts S and dS/ds, each (len(s), 4, 3)."""
        s = self.nodes if s is None else np.asarray(s, float)
        x = (s - self.a)[:, None, None]
        y = (s - self.b)[:, None, None]
        S = np.zeros((len(s), 4, 3))
        dS = np.zeros_like(S)
        S[:, 1:] = -(self.alpha[None] / x + self.beta[None] / y)
        dS[:, 1:] = self.alpha[None] / x ** 2 + self.beta[None] / y ** 2
        return S, dS

    def integrate(self, values):
        """Quadrature over (a, b) along the first axis."""
        return np.tensordot(self.weights, values, axes=1)

    def diff_matrix(self):
        return _diff_matrix(self.nodes)

    def with_beta(self, beta):
        return NahmConfig(self.a, self.b, self.alpha, beta, self.n, self.nodes, self.weights)


@dataclass(frozen=True)
class NahmSolution:
    """Pole part from ``config`` plus the sampled remainder (n, 4, 3).

    ``dremainder`` holds the exact remainder derivative when known; otherwise
    it is obtained by spectral differentiation on the grid.
    """

    config: NahmConfig
    remainder: np.ndarray
    dremainder: np.ndarray | None = None
    tag: str = "numeric"

    def fields(self):
        S, _ = self.config.pole()
        return S + self.remainder

    def remainder_derivative(self):
        if self.dremainder is not None:
            return self.dremainder
        D = self.config.diff_matrix()
        return np.einsum("ij,jab->iab", D, self.remainder)

    def derivative(self):
        _, dS = self.config.pole()
        return dS + self.remainder_derivative()

    def T0_norm(self):
        return float(np.max(su2_norm(self.remainder[:, 0])))

    def interpolator(self):
        return BarycentricInterpolator(self.config.nodes, self.remainder.reshape(len(self.config.nodes), -1))


# Bernoulli series for csc(v) - 1/v and cot(v) - 1/v, used for |v| <= pi/2
_NTERMS = 30
_B = scipy.special.bernoulli(2 * _NTERMS)[2::2]
_n = np.arange(1, _NTERMS + 1)
_FACT = scipy.special.factorial(2 * _n)
_CSC = (-1.0) ** (_n + 1) * 2 * (2.0 ** (2 * _n - 1) - 1) * _B / _FACT
_COT = (-1.0) ** _n * 2.0 ** (2 * _n) * _B / _FACT
_POW = 2 * _n - 1


def _series(coef, v, der=False):
    v = np.asarray(v, float)[..., None]
    if der:
        return np.sum(coef * _POW * v ** (_POW - 1), axis=-1)
    return np.sum(coef * v ** _POW, axis=-1)


def _axial_remainders(u):
    """A = csc u - 1/u - 1/(pi-u) and B = cot u - 1/u + 1/(pi-u) with u-derivatives."""
    u = np.asarray(u, float)
    lo = u <= np.pi / 2
    v = np.where(lo, u, np.pi - u)
    phi, dphi = _series(_CSC, v), _series(_CSC, v, True)
    psi, dpsi = _series(_COT, v), _series(_COT, v, True)
    A = np.where(lo, phi - 1 / (np.pi - u), phi - 1 / u)
    dA = np.where(lo, dphi - 1 / (np.pi - u) ** 2, -dphi + 1 / u ** 2)
    B = np.where(lo, psi + 1 / (np.pi - u), -psi - 1 / u)
    dB = np.where(lo, dpsi + 1 / (np.pi - u) ** 2, dpsi + 1 / u ** 2)
    return A, dA, B, dB


def axial_profiles(a, b, s):
    """f1 = f2 = -c / sin(c(s-a)), f3 = -c cot(c(s-a)), c = pi / (b - a)."""
    c = np.pi / (b - a)
    u = c * (np.asarray(s, float) - a)
    f1 = -c / np.sin(u)
    f3 = -c / np.tan(u)
    return f1, f1.copy(), f3


def make_axial_solution(a=0.0, b=1.0, n=96):
    """Axially symmetric solution T_i = f_i e_i with residues (e1, e2, e3) and (-e1, -e2, e3)."""
    config = NahmConfig(a, b, AXIAL_ALPHA, AXIAL_BETA, n)
    c = np.pi / (b - a)
    u = c * (config.nodes - a)
    A, dA, B, dB = _axial_remainders(u)
    R = np.zeros((n, 4, 3))
    dR = np.zeros_like(R)
    R[:, 1, 0] = R[:, 2, 1] = -c * A
    R[:, 3, 2] = -c * B
    dR[:, 1, 0] = dR[:, 2, 1] = -c ** 2 * dA
    dR[:, 3, 2] = -c ** 2 * dB
    return NahmSolution(config, R, dR, "closedFormAxial")


def make_elliptic_solution(m, a=0.0, b=1.0, n=96):
    """Elliptic deformation f1 = -D dn/sn, f2 = -D/sn, f3 = -D cn/sn with D = 2K(m)/(b-a).

    Same residues as the axial solution (m = 0).  The remainder is computed
    directly as f - S, so it is less accurate near the poles.
    """
    config = NahmConfig(a, b, AXIAL_ALPHA, AXIAL_BETA, n)
    D = 2 * scipy.special.ellipk(m) / (b - a)
    sn, cn, dn, _ = scipy.special.ellipj(D * (config.nodes - a), m)
    f = np.stack([-D * dn / sn, -D / sn, -D * cn / sn], axis=1)
    df = np.stack([f[:, 1] * f[:, 2], f[:, 2] * f[:, 0], f[:, 0] * f[:, 1]], axis=1)
    S, dS = config.pole()
    T = np.zeros((n, 4, 3))
    dT = np.zeros_like(T)
    for i in range(3):
        T[:, i + 1, i] = f[:, i]
        dT[:, i + 1, i] = df[:, i]
    return NahmSolution(config, T - S, dT - dS, "numeric")


_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def nahm_residual(sol: NahmSolution, pointwise=False):
    """max |dT_i/ds + [T0, T_i] - [T_j, T_k]| over nodes, (i, j, k) cyclic.

    The pole-pole terms are expanded analytically.  The 1/x^2 and 1/y^2
    pieces are alpha_i - [alpha_j, alpha_k] and the same for beta, which
    vanish because the configuration only admits su(2) triples; they are
    dropped rather than evaluated, since their rounding error would be
    amplified by 1/x^2 at the nodes nearest the poles.
    """
    cfg = sol.config
    s = cfg.nodes
    x = (s - cfg.a)[:, None]
    y = (s - cfg.b)[:, None]
    al, be = cfg.alpha, cfg.beta
    R = sol.remainder
    dR = sol.remainder_derivative()
    S, _ = cfg.pole()
    T0 = R[:, 0]
    out = np.zeros((len(s), 3))
    for i, j, k in _CYCLIC:
        poles = -(np.cross(al[j], be[k]) + np.cross(be[j], al[k])) / (x * y)
        Sj, Sk = S[:, j + 1], S[:, k + 1]
        Rj, Rk = R[:, j + 1], R[:, k + 1]
        mixed = np.cross(Sj, Rk) + np.cross(Rj, Sk) + np.cross(Rj, Rk)
        r = poles + dR[:, i + 1] + np.cross(T0, S[:, i + 1] + R[:, i + 1]) - mixed
        out[:, i] = su2_norm(r)
    return out if pointwise else float(out.max())


@dataclass(frozen=True)
class GaugePath:
    """A path g(s) in SU(2) through its adjoint rotation.

    Callables of s (array): ``rot`` (len, 3, 3), ``delta`` = rot - I computed
    without cancellation, ``omega`` = coordinates of g' g^-1 and ``domega``.
    """

    rot: Callable
    delta: Callable
    omega: Callable
    domega: Callable
    a: float = 0.0
    b: float = 1.0
    delta_b: Callable | None = None

    def delta_from_b(self, s):
        """rot(s) - rot(b), without cancellation when ``delta_b`` is given."""
        if self.delta_b is not None:
            return self.delta_b(s)
        return self.delta(s) - self.delta(np.array([self.b]))[0]

    @classmethod
    def identity(cls, a=0.0, b=1.0):
        z3 = lambda s: np.zeros((len(np.atleast_1d(s)), 3))
        return cls(lambda s: np.broadcast_to(E3, (len(np.atleast_1d(s)), 3, 3)).copy(),
                   lambda s: np.zeros((len(np.atleast_1d(s)), 3, 3)), z3, z3, a, b)

    @classmethod
    def about_axis(cls, axis, theta, dtheta, ddtheta, a=0.0, b=1.0):
        """g(s) = exp(theta(s) n) for a fixed unit axis n; rotation by theta about n."""
        n = np.asarray(axis, float) / np.linalg.norm(axis)
        K = cross_matrix(n)
        K2 = K @ K

        def delta(s):
            th = np.asarray(theta(np.atleast_1d(s)), float)[:, None, None]
            return np.sin(th) * K + (2 * np.sin(th / 2) ** 2) * K2

        return cls(lambda s: E3 + delta(s), delta,
                   lambda s: np.asarray(dtheta(np.atleast_1d(s)), float)[:, None] * n,
                   lambda s: np.asarray(ddtheta(np.atleast_1d(s)), float)[:, None] * n, a, b)

    def compose(self, other):
        """The product path s -> self(s) other(s)."""
        def rot(s):
            return self.rot(s) @ other.rot(s)

        def delta(s):
            d1, d2 = self.delta(s), other.delta(s)
            return d1 + d2 + d1 @ d2

        def omega(s):
            return self.omega(s) + np.einsum("pij,pj->pi", self.rot(s), other.omega(s))

        def domega(s):
            R1 = self.rot(s)
            w2 = np.einsum("pij,pj->pi", R1, other.omega(s))
            return (self.domega(s) + np.cross(self.omega(s), w2)
                    + np.einsum("pij,pj->pi", R1, other.domega(s)))

        return GaugePath(rot, delta, omega, domega, self.a, self.b)

    def boundary_defect(self):
        d = self.delta(np.array([self.a, self.b]))
        return float(np.max(np.abs(d)))


def random_gauge(config, rng, factors=3, modes=4, amplitude=1.0):
    """Product of rotations about random axes with angles sum_k c_k sin(k pi (s-a)/L)."""
    a, L = config.a, config.length
    path = GaugePath.identity(a, config.b)
    for _ in range(factors):
        axis = rng.standard_normal(3)
        ck = amplitude * rng.standard_normal(modes) / np.arange(1, modes + 1)
        kk = np.arange(1, modes + 1) * np.pi / L

        def th(s, ck=ck, kk=kk):
            return np.sin(np.outer(s - a, kk)) @ ck

        def dth(s, ck=ck, kk=kk):
            return np.cos(np.outer(s - a, kk)) @ (ck * kk)

        def ddth(s, ck=ck, kk=kk):
            return -np.sin(np.outer(s - a, kk)) @ (ck * kk ** 2)

        path = path.compose(GaugePath.about_axis(axis, th, dth, ddth, a, config.b))
    return path


def gauge_transform(sol: NahmSolution, g: GaugePath, check_boundary=True, tol=1e-12):
    """T_i -> Ad(g) T_i, T0 -> Ad(g) T0 - g' g^-1.

    The residue at a is kept (g(a) = id is required); the residue at b
    becomes Ad(g(b)) beta, which equals beta for based gauges.  Raises
    GaugeBoundaryError when ``check_boundary`` and g(a), g(b) are not the identity.
    """
    cfg = sol.config
    s = cfg.nodes
    da = float(np.max(np.abs(g.delta(np.array([cfg.a])))))
    if check_boundary and g.boundary_defect() > tol:
        raise GaugeBoundaryError("gauge transformation is not the identity at the endpoints")
    if da > 1e-9:
        raise GaugeBoundaryError("gauge transformation must be the identity at s = a")
    Rot = g.rot(s)
    Dl = g.delta(s)
    Db = g.delta(np.array([cfg.b]))[0]
    Rb = E3 + Db
    w = g.omega(s)
    dw = g.domega(s)
    W = cross_matrix(w)
    dRot = W @ Rot
    new_beta = (Rb @ cfg.beta.T).T
    R = sol.remainder
    dR = sol.remainder_derivative()
    x = (s - cfg.a)[:, None]
    y = (s - cfg.b)[:, None]
    mv = lambda M, v: np.einsum("pij,pj->pi", M, v)
    newR = np.zeros_like(R)
    newdR = np.zeros_like(R)
    newR[:, 0] = mv(Rot, R[:, 0]) - w
    newdR[:, 0] = mv(dRot, R[:, 0]) + mv(Rot, dR[:, 0]) - dw
    Dlb = g.delta_from_b(s)
    for i in range(3):
        al = np.broadcast_to(cfg.alpha[i], (len(s), 3))
        be = np.broadcast_to(cfg.beta[i], (len(s), 3))
        newR[:, i + 1] = -mv(Dl, al) / x - mv(Dlb, be) / y + mv(Rot, R[:, i + 1])
        newdR[:, i + 1] = (-mv(dRot, al) / x + mv(Dl, al) / x ** 2
                           - mv(dRot, be) / y + mv(Dlb, be) / y ** 2
                           + mv(dRot, R[:, i + 1]) + mv(Rot, dR[:, i + 1]))
    return NahmSolution(cfg.with_beta(new_beta), newR, newdR, "numeric")


def killing_gauge(sol: NahmSolution, rtol=1e-13):
    """The gauge with g(a) = id and g' = g T0, which sends T0 to zero.

    In the adjoint picture Rot' = Rot [T0]_x.  Not based at b in general.
    """
    cfg = sol.config
    interp = BarycentricInterpolator(cfg.nodes, sol.remainder[:, 0])
    dinterp = BarycentricInterpolator(cfg.nodes, sol.remainder_derivative()[:, 0])

    def rhs_delta(s, d):
        return ((E3 + d.reshape(3, 3)) @ cross_matrix(interp(s))).ravel()

    # integrate rot - I forwards and rot - rot(b) backwards so both stay
    # accurate relative to their size near the poles
    fwd = scipy.integrate.solve_ivp(rhs_delta, (cfg.a, cfg.b), np.zeros(9), method="DOP853",
                                    rtol=rtol, atol=1e-30, dense_output=True)
    # snap to SO(3): the new residue Ad(g(b)) beta must be an exact su(2) triple
    u, _, vt = np.linalg.svd(E3 + fwd.y[:, -1].reshape(3, 3))
    Rb = u @ vt
    bwd = scipy.integrate.solve_ivp(lambda s, e: ((Rb + e.reshape(3, 3)) @ cross_matrix(interp(s))).ravel(),
                                    (cfg.b, cfg.a), np.zeros(9), method="DOP853",
                                    rtol=rtol, atol=1e-30, dense_output=True)
    mid = 0.5 * (cfg.a + cfg.b)

    def delta(s):
        s = np.atleast_1d(s)
        d = fwd.sol(s).T.reshape(len(s), 3, 3)
        e = bwd.sol(s).T.reshape(len(s), 3, 3)
        return np.where((s > mid)[:, None, None], Rb - E3 + e, d)

    def delta_b(s):
        s = np.atleast_1d(s)
        d = fwd.sol(s).T.reshape(len(s), 3, 3)
        e = bwd.sol(s).T.reshape(len(s), 3, 3)
        return np.where((s > mid)[:, None, None], e, d + E3 - Rb)

    def rot(s):
        return E3 + delta(s)

    def T0(s):
        return np.atleast_2d(interp(np.atleast_1d(s)))

    def omega(s):
        return np.einsum("pij,pj->pi", rot(s), T0(s))

    def domega(s):
        return np.einsum("pij,pj->pi", rot(s), np.atleast_2d(dinterp(np.atleast_1d(s))))

    return GaugePath(rot, delta, omega, domega, cfg.a, cfg.b, delta_b)


def kill_T0(sol: NahmSolution):
    return gauge_transform(sol, killing_gauge(sol), check_boundary=False)


def nahm_metric(t, tp, config):
    """sum_i int <t_i, t'_i> ds for quadruples (n, 4, 3) on the grid."""
    t = np.asarray(t, float)
    tp = np.asarray(tp, float)
    return float(config.integrate(SU2_INNER_SCALE * np.einsum("pij,pij->p", t, tp)))


def nahm_fundamental_field(sol, rho, drho=None):
    """(-rho' + [rho, T0], [rho, T1], [rho, T2], [rho, T3]) on the grid."""
    rho = np.asarray(rho, float)
    if drho is None:
        drho = sol.config.diff_matrix() @ rho
    T = sol.fields()
    out = np.cross(rho[:, None, :], T)
    out[:, 0] -= drho
    return out


def quaternion_images(t):
    """Right multiplication of t0 + i t1 + j t2 + k t3 by i, j, k."""
    t = np.asarray(t, float)
    t0, t1, t2, t3 = (t[:, i] for i in range(4))
    e1 = np.stack([-t1, t0, t3, -t2], axis=1)
    e2 = np.stack([-t2, -t3, t0, t1], axis=1)
    e3 = np.stack([-t3, t2, -t1, t0], axis=1)
    return e1, e2, e3


def nahm_lambda_form(sol, t, dt=None):
    """The density f of Lambda(t)(rho) = int <f, rho> ds: t0' + sum_i [T_i, t_i]."""
    t = np.asarray(t, float)
    if dt is None:
        dt = np.einsum("ij,jab->iab", sol.config.diff_matrix(), t)
    T = sol.fields()
    return dt[:, 0] + np.cross(T, t).sum(axis=1)


@dataclass(frozen=True)
class TangentResidual:
    absolute: np.ndarray
    relative: np.ndarray


def tangent_residual(sol, t, dt):
    """Residuals of the four linear equations cutting out the horizontal tangent space.

    The first equation is orthogonality to the gauge orbit, the other three
    linearise Nahm's equations.  ``relative`` divides by the largest term.
    """
    T = sol.fields()
    t = np.asarray(t, float)
    dt = np.asarray(dt, float)
    br = lambda i, j: np.cross(T[:, i], t[:, j])
    terms = [
        [dt[:, 0], br(0, 0), br(1, 1), br(2, 2), br(3, 3)],
        [dt[:, 1], br(0, 1), -br(1, 0), -br(2, 3), br(3, 2)],
        [dt[:, 2], br(0, 2), br(1, 3), -br(2, 0), -br(3, 1)],
        [dt[:, 3], br(0, 3), -br(1, 2), br(2, 1), -br(3, 0)],
    ]
    absolute = np.zeros(4)
    relative = np.zeros(4)
    for e, parts in enumerate(terms):
        r = su2_norm(sum(parts))
        scale = np.max([su2_norm(p) for p in parts], axis=0)
        absolute[e] = r.max()
        relative[e] = np.max(r / np.maximum(scale, 1e-300))
    return TangentResidual(absolute, relative)


def hamiltonian(sol):
    """H(s) = -sum_i ad(T_i)^2 at each node, (n, 3, 3)."""
    T = sol.fields()[:, 1:]
    sq = np.einsum("pic,pic->p", T, T)
    return sq[:, None, None] * E3 - np.einsum("pia,pib->pab", T, T)


def lambda_floor(sol, tol=1e-12):
    """sqrt of the smallest eigenvalue of H(s) at each node.

    H does not involve T0 and its spectrum is invariant under conjugation,
    so no gauge fixing is needed.
    """
    ev = np.linalg.eigvalsh(hamiltonian(sol))[:, 0]
    scale = np.maximum(1.0, np.abs(np.linalg.eigvalsh(hamiltonian(sol))[:, -1]))
    if np.any(ev < -tol * scale):
        raise NegativeSpectrum(f"smallest eigenvalue {ev.min():.3g}")
    return np.sqrt(np.clip(ev, 0.0, None))


def lambda_floor_at(sol, s):
    """lambda at arbitrary interior points, from the pole part and the interpolated remainder."""
    s = np.atleast_1d(np.asarray(s, float))
    S, _ = sol.config.pole(s)
    T = (S + sol.interpolator()(s).reshape(len(s), 4, 3))[:, 1:]
    sq = np.einsum("pic,pic->p", T, T)
    H = sq[:, None, None] * E3 - np.einsum("pia,pib->pab", T, T)
    return np.sqrt(np.clip(np.linalg.eigvalsh(H)[:, 0], 0.0, None))


def _frobenius_exponent(kappa):
    return 0.5 * (1 + np.sqrt(1 + 4 * kappa ** 2))


@dataclass
class GreenEval:
    """Green kernel of u'' - lambda^2 u with u(a) = u(b) = 0.

    G(s, t) = u_L(min) u_R(max) / W with u_L, u_R the homogeneous solutions
    vanishing at a and b, and W = u_L u_R' - u_L' u_R (constant).  G <= 0 and
    N is the sup of |G|, attained on the diagonal.
    """

    a: float
    b: float
    N: float
    s_star: float
    W: float
    kappa: tuple
    lam: Callable = field(repr=False)
    _left: object = field(repr=False, default=None)
    _right: object = field(repr=False, default=None)
    _span: tuple = field(repr=False, default=None)

    def _clip(self, s):
        return np.clip(np.asarray(s, float), *self._span)

    def _eval(self, ode, s):
        s = self._clip(s)
        return ode.sol(s.ravel())[0].reshape(s.shape)

    def u_left(self, s):
        return self._eval(self._left, s)

    def u_right(self, s):
        return self._eval(self._right, s)

    def kernel(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        lo, hi = np.minimum(s, t), np.maximum(s, t)
        return self.u_left(lo) * self.u_right(hi) / self.W

    def diagonal(self, s):
        return -self.kernel(s, s)

    def solve(self, f, s_eval, rtol=1e-12):
        """Solution of -rho'' + lambda^2 rho = f, rho(a) = rho(b) = 0, by variation of parameters.

        ``f`` is a callable (scalar or vector valued).  Independent of any
        collocation: uses the shooting solutions and adaptive quadrature.
        """
        s0, s1 = self._span
        fv = lambda s: np.atleast_1d(f(s))
        dim = len(fv(0.5 * (s0 + s1)))
        IL = scipy.integrate.solve_ivp(lambda s, y: self.u_left(s) * fv(s), (s0, s1), np.zeros(dim),
                                       method="DOP853", rtol=rtol, atol=1e-16, dense_output=True)
        IR = scipy.integrate.solve_ivp(lambda s, y: self.u_right(s) * fv(s), (s1, s0), np.zeros(dim),
                                       method="DOP853", rtol=rtol, atol=1e-16, dense_output=True)
        s_eval = np.atleast_1d(np.asarray(s_eval, float))
        se = self._clip(s_eval)
        out = (self.u_right(se)[:, None] * IL.sol(se).T - self.u_left(se)[:, None] * IR.sol(se).T) / -self.W
        return out

    def forcing_check(self, rng, count=20, width=None, m=4001):
        """Ratios ||L^-1 f||_inf / (N ||f||_1) for random nonnegative bumps; all should be <= 1.

        The inverse is applied by trapezoidal quadrature of the kernel on a
        fine uniform grid, which resolves the bumps.
        """
        L = self.b - self.a
        width = 0.02 * L if width is None else width
        tau = np.linspace(self.a, self.b, m)
        wq = np.full(m, tau[1] - tau[0])
        wq[[0, -1]] *= 0.5
        uLt, uRt = self.u_left(tau), self.u_right(tau)
        ratios = []
        for _ in range(count):
            c = self.a + L * rng.uniform(0.1, 0.9)
            w = width * rng.uniform(0.5, 2.0)
            f = np.exp(-0.5 * ((tau - c) / w) ** 2)
            s_eval = np.append(np.linspace(c - 3 * w, c + 3 * w, 61), c)
            s_eval = s_eval[(s_eval > self.a) & (s_eval < self.b)]
            uLs, uRs = self.u_left(s_eval)[:, None], self.u_right(s_eval)[:, None]
            G = np.where(s_eval[:, None] <= tau[None, :], uLs * uRt, uLt * uRs) / self.W
            rho = -G @ (wq * f)
            ratios.append(float(np.max(np.abs(rho)) / (self.N * (wq @ f))))
        return np.array(ratios)


def _lambda_callable(config, lam):
    """Turn a constant, callable or grid samples into (callable, kappa_a, kappa_b)."""
    a, b, L = config.a, config.b, config.length
    if lam is None:
        lam = 0.0
    if callable(lam):
        d = 1e-9 * L
        return lam, float(lam(np.array([a + d]))[0] * d), float(lam(np.array([b - d]))[0] * d)
    arr = np.asarray(lam, float)
    if arr.ndim == 0:
        val = float(arr)
        return (lambda s: np.full(np.shape(s), val)), 0.0, 0.0
    if arr.shape != config.nodes.shape:
        raise ValueError("lambda samples must live on the configuration grid")
    # lambda may grow like kappa / (s - a) at the ends; interpolate the regular part
    s = config.nodes
    g = BarycentricInterpolator(s, arr * (s - a) * (b - s) / L)
    ka, kb = float(g(a)), float(g(b))

    def fn(t):
        t = np.asarray(t, float)
        return g(t) * L / ((t - a) * (b - t))

    return fn, ka, kb


def compute_N(config, lam=None, delta=1e-6, rtol=1e-12):
    """N(lambda) = sup |G| by shooting from both ends.

    Near an end where lambda ~ kappa / x the regular solution behaves like
    x^nu with nu (nu - 1) = kappa^2, which gives the starting values.
    """
    fn, ka, kb = _lambda_callable(config, lam)
    a, b, L = config.a, config.b, config.length
    s0, s1 = a + delta * L, b - delta * L
    nua, nub = _frobenius_exponent(ka), _frobenius_exponent(kb)

    def rhs(s, y):
        return [y[1], float(fn(np.array([s]))[0]) ** 2 * y[0]]

    x0 = s0 - a
    left = scipy.integrate.solve_ivp(rhs, (s0, s1), [x0, nua], method="DOP853",
                                     rtol=rtol, atol=1e-300, dense_output=True)
    right = scipy.integrate.solve_ivp(rhs, (s1, s0), [x0, -nub], method="DOP853",
                                      rtol=rtol, atol=1e-300, dense_output=True)
    mid = 0.5 * (a + b)
    uL, duL = left.sol(mid)
    uR, duR = right.sol(mid)
    W = uL * duR - duL * uR
    if not np.isfinite(W) or abs(W) <= 1e-13 * (abs(uL * duR) + abs(duL * uR)):
        raise WronskianCollapse(f"Wronskian {W:.3g}")
    ge = GreenEval(a, b, 0.0, mid, float(W), (ka, kb), fn, left, right, (s0, s1))
    grid = np.linspace(s0, s1, 2001)
    diag = ge.diagonal(grid)
    i = int(np.argmax(diag))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = scipy.optimize.minimize_scalar(lambda t: -ge.diagonal(np.array([t]))[0], bounds=(lo, hi),
                                         method="bounded", options={"xatol": 1e-12 * L})
    best, s_star = (-res.fun, res.x) if -res.fun >= diag[i] else (diag[i], grid[i])
    ge.N = float(best)
    ge.s_star = float(s_star)
    return ge


@dataclass(frozen=True)
class BoundReport:
    N: float
    stated: float
    composed: float
    coarse: float
    identity_defect: float
    lam_min: float


def curvature_bound(sol, lam=None):
    """Stated bound 18 sqrt(N), composed bound 9 (l F)^2 = 36 N and the coarse 9 sqrt(b - a)."""
    cfg = sol.config
    lam = lambda_floor(sol) if lam is None else lam
    ge = compute_N(cfg, lam)
    L = cfg.length
    coarse = 9 * np.sqrt(L)
    identity = abs(18 * np.sqrt(L / 4) - coarse)
    lam_min = float(np.min(lam)) if np.ndim(lam) else float(lam)
    return BoundReport(ge.N, float(18 * np.sqrt(ge.N)), 36 * ge.N, float(coarse), float(identity), lam_min)


def _augmented(config):
    z = np.concatenate([[config.a], config.nodes, [config.b]])
    D = _diff_matrix(z)
    return z, D, D @ D


@dataclass(frozen=True)
class VerticalSolution:
    rho: np.ndarray
    residual: float
    sup_norm: float
    forcing_l1: float


def solve_vertical(sol, f):
    """Solve -rho'' + 2[rho', T0] + [rho, T0'] - sum_{i=0..3} [T_i, [T_i, rho]] = f, rho(a) = rho(b) = 0.

    In the T0 = 0 gauge this is -rho'' + H rho = f with H >= 0.  ``f`` is
    sampled on the grid (n, 3).  Collocation on the grid plus both endpoints.
    """
    cfg = sol.config
    f = np.asarray(f, float)
    n = len(cfg.nodes)
    _, D, D2 = _augmented(cfg)
    T = sol.fields()
    dT0 = sol.remainder_derivative()[:, 0]
    A = np.zeros((n, 3, n, 3))
    inner = slice(1, n + 1)
    A += -D2[inner, inner][:, None, :, None] * E3[None, :, None, :]
    C0 = cross_matrix(T[:, 0])
    # 2 [rho', T0] = -2 [T0]_x rho'
    A += -2 * np.einsum("pab,pq->paqb", C0, D[inner, inner])
    Cd = cross_matrix(dT0)
    Hfull = -np.einsum("piab,pibc->pac", cross_matrix(T), cross_matrix(T))
    idx = np.arange(n)
    A[idx, :, idx, :] += -Cd + Hfull
    M = A.reshape(3 * n, 3 * n)
    rho = np.linalg.solve(M, f.ravel()).reshape(n, 3)
    res = float(np.max(np.abs(M @ rho.ravel() - f.ravel())) / max(1.0, np.max(np.abs(f))))
    return VerticalSolution(rho, res, float(np.max(su2_norm(rho))),
                            float(cfg.integrate(su2_norm(f))))


def comparison_solution(config, lam, g):
    """Collocation solution of -u'' + lambda^2 u = g with Dirichlet ends (scalar)."""
    lam = np.asarray(lam, float)
    n = len(config.nodes)
    _, _, D2 = _augmented(config)
    M = -D2[1:n + 1, 1:n + 1] + np.diag(lam ** 2)
    return np.linalg.solve(M, np.asarray(g, float))
