"""Finite-difference sectional curvature of a quotient in a local slice chart.

Independent of the Gauss/O'Neill route in ``curv``: it only uses the moment
map, the fundamental fields and the metric.  Around a level-set point q
the chart is

    phi(u) = q + H u + N w(u),      mu(phi(u)) = c,

with H the horizontal basis at q and N a fixed orthonormal basis of the
normal directions (the span of I_i g-check at q); w(u) is found by Newton.
The quotient metric in these coordinates is the ambient metric of d phi
with the orbit directions projected out, and the curvature of the (u_x,
u_y) coordinate plane comes from the Brioschi-type formula in terms of the
metric and its first and second derivatives (central differences).
"""
from __future__ import annotations

import numpy as np

from .hkquot import fundamental_fields, moment, moment_jacobian
from .errors import MaxIterations

__all__ = ["chart_point", "quotient_metric", "chart_sectional_curvature"]


def _normal_basis(point):
    return np.concatenate(list(point.normals), axis=1)


def chart_point(point, u, N=None, tol=1e-14, max_iter=50):
    """phi(u) and its tangent map (n, h)."""
    spec = point.spec
    N = _normal_basis(point) if N is None else N
    c = point.c.covector.ravel()
    H = point.horizontal
    base = point.q + H @ u
    w = np.zeros(N.shape[1])
    for _ in range(max_iter):
        x = base + N @ w
        r = moment(spec, x).covector.ravel() - c
        Jn = moment_jacobian(spec, x) @ N
        dw = np.linalg.solve(Jn, -r)
        w += dw
        if np.linalg.norm(dw) < tol * max(1.0, np.linalg.norm(w)):
            break
    else:
        raise MaxIterations("slice chart Newton did not converge")
    x = base + N @ w
    Jm = moment_jacobian(spec, x)
    dw = -np.linalg.solve(Jm @ N, Jm @ H)
    return x, H + N @ dw


def quotient_metric(point, u, N=None):
    """Metric of the quotient pulled back to chart coordinates (h, h)."""
    x, T = chart_point(point, u, N)
    F = fundamental_fields(point.spec, x)
    G = F.T @ F
    P = F.T @ T
    return T.T @ T - P.T @ np.linalg.solve(G, P)


def chart_sectional_curvature(point, xh, yh, step=None):
    """Sectional curvature of span(H xh, H yh) at the base point.

    ``xh, yh`` are orthonormal horizontal coordinates.  The chart is
    rotated so that they are the first two coordinate directions, and
    the metric is restricted to that 2-dimensional coordinate slice
    with the Christoffel terms of the full chart kept.
    """
    xh = np.asarray(xh, float)
    yh = np.asarray(yh, float)
    h = point.dim_h
    # orthonormal frame of R^h starting with xh, yh
    Q, _ = np.linalg.qr(np.column_stack([xh, yh, np.eye(h)]))
    Q = Q[:, :h]
    N = _normal_basis(point)
    scale = float(np.linalg.norm(point.q))
    eps = 1e-2 * scale if step is None else step

    def g(v):
        return Q.T @ quotient_metric(point, Q @ v, N) @ Q

    e = np.eye(h)
    g0 = g(np.zeros(h))

    def d1(i):
        # fourth-order central first derivative
        return (-g(2 * eps * e[i]) + 8 * g(eps * e[i]) - 8 * g(-eps * e[i]) + g(-2 * eps * e[i])) / (12 * eps)

    def d2dir(v):
        return (-g(2 * eps * v) + 16 * g(eps * v) - 30 * g0 + 16 * g(-eps * v) - g(-2 * eps * v)) / (12 * eps ** 2)

    dg = np.stack([d1(i) for i in range(h)])  # dg[l, i, j] = d_l g_ij
    gxx2 = d2dir(e[0])
    gyy2 = d2dir(e[1])
    # mixed derivative from directional second derivatives along x +- y
    gpp = d2dir(e[0] + e[1])
    gmm = d2dir(e[0] - e[1])
    gxy2 = (gpp - gmm) / 4.0

    # Christoffel symbols of the first kind, Gamma[l, i, j] = 1/2 (d_i g_lj + d_j g_li - d_l g_ij)
    Gam = 0.5 * (np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg)
    ginv = np.linalg.inv(g0)
    # R_xyyx = -1/2 (...second derivatives...) + Gamma terms
    R = 0.5 * (2 * gxy2[0, 1] - gyy2[0, 0] - gxx2[1, 1])
    R += np.einsum("l,lm,m->", Gam[:, 0, 1], ginv, Gam[:, 0, 1]) \
        - np.einsum("l,lm,m->", Gam[:, 1, 1], ginv, Gam[:, 0, 0])
    denom = g0[0, 0] * g0[1, 1] - g0[0, 1] ** 2
    return float(R / denom)
