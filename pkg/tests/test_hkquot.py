import numpy as np
import pytest
import scipy.linalg

from hkcurv import catalog
from hkcurv.errors import DegenerateAction, MaxIterations, NonInvariantLevel
from hkcurv.hkquot import (
    Freeness, GroupActionSpec, MomentValue, fundamental_field, fundamental_fields, lambda_form,
    local_freeness, moment, moment_jacobian, null_direction, project_to_level,
)
from hkcurv.quatalg import I, J, K, real_rep, su2_basis

from oracles import moment_by_quaternions


def sp1():
    return GroupActionSpec.quaternionic(su2_basis().quaternionic, name="sp1")


def su2_diag(d=4):
    # Sp(1) acting by left scalar multiplication on H^d; quotient dimension 4d - 12
    gens = np.zeros((3, d, d, 4))
    for a, u in enumerate((I, J, K)):
        for l in range(d):
            gens[a, l, l] = 0.5 * u
    return GroupActionSpec.quaternionic(gens, name="sp1-diag")


def test_fundamental_field_examples():
    eh = catalog.eguchi_hanson().spec
    q = np.zeros(8)
    q[0] = 1.0
    v = fundamental_field([1.0], q, eh)
    np.testing.assert_array_equal(v.reshape(2, 4), [I, np.zeros(4)])
    assert np.all(fundamental_field([0.3], np.zeros(8), eh) == 0)
    with pytest.raises(ValueError):
        fundamental_field(np.eye(4), q)


def test_fundamental_field_is_i1_orthogonal():
    rng = np.random.default_rng(0)
    spec = su2_diag()
    for _ in range(50):
        v = fundamental_field(rng.standard_normal(3), rng.standard_normal(spec.n), spec)
        for Ii in spec.complex_structures:
            assert abs(v @ Ii @ v) < 1e-12 * (1 + v @ v)


def test_moment_examples():
    spec = sp1()
    mu = moment(spec, np.array([1.0, 0, 0, 0]))
    # mu = (i, j, k) as elements of sp(1), whatever basis carries the coordinates
    elems = [spec.lie.element(c) for c in mu.element(spec.lie)]
    for E, u in zip(elems, (I, J, K)):
        np.testing.assert_allclose(E, real_rep(u.reshape(1, 1, 4)), atol=1e-15)
    eh = catalog.eguchi_hanson().spec
    q = np.zeros(8)
    q[0] = 1.0
    np.testing.assert_allclose(moment(eh, q).covector, [[-0.5], [0.0], [0.0]], atol=1e-15)
    assert moment(eh, np.zeros(8)).norm() == 0.0


@pytest.mark.parametrize("make", [sp1, su2_diag, lambda: catalog.tp1xtp1().spec])
def test_moment_matches_quaternion_oracle(make):
    spec = make()
    rng = np.random.default_rng(1)
    for _ in range(20):
        q = rng.standard_normal(spec.n)
        np.testing.assert_allclose(moment(spec, q).covector, moment_by_quaternions(spec, q), atol=1e-12)


def test_moment_equivariance():
    spec = su2_diag()
    lie = spec.lie
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        g = scipy.linalg.expm(lie.element(rng.standard_normal(3)))
        q = rng.standard_normal(spec.n)
        ad = np.stack([lie.coordinates(g @ X @ g.T) for X in lie.matrices], axis=1)
        # mu(gq)(xi) = mu(q)(Ad(g^-1) xi)
        lhs = moment(spec, g @ q).covector @ ad
        worst = max(worst, np.max(np.abs(lhs - moment(spec, q).covector)))
    assert worst < 1e-10


def test_jacobian_and_lambda_form_by_differences():
    spec = su2_diag()
    rng = np.random.default_rng(3)
    h = 1e-5
    for _ in range(10):
        q = rng.standard_normal(spec.n)
        v = rng.standard_normal(spec.n)
        fd = (moment(spec, q + h * v).covector - moment(spec, q - h * v).covector) / (2 * h)
        np.testing.assert_allclose(moment_jacobian(spec, q) @ v, fd.ravel(), atol=1e-8)
        # Lambda = -I_i dmu_i with I_i acting on covectors dually: Lambda(v) = dmu_i(I_i v)
        for i, Ii in enumerate(spec.complex_structures):
            w = Ii @ v
            fdi = (moment(spec, q + h * w).covector[i] - moment(spec, q - h * w).covector[i]) / (2 * h)
            assert np.max(np.abs(lambda_form(spec, q, v) - fdi)) < 1e-6


def test_lambda_form_on_fields_and_horizontal():
    e = catalog.tp1xtp1()
    p = project_to_level(e.spec, e.base_point, e.level)
    F = p.fields
    np.testing.assert_allclose(lambda_form(e.spec, p.q, F[:, 1]), p.gram[1], atol=1e-14)
    for v in p.horizontal.T:
        assert np.max(np.abs(lambda_form(e.spec, p.q, v))) < 1e-12


def test_local_freeness():
    eh = catalog.eguchi_hanson().spec
    q = np.zeros(8)
    q[0] = 1.0
    status, smin = local_freeness(eh, q)
    assert status is Freeness.LOCALLY_FREE
    assert smin == pytest.approx(1.0, abs=1e-12)
    assert local_freeness(eh, np.zeros(8))[0] is Freeness.DEGENERATE
    spec = sp1()
    rng = np.random.default_rng(4)
    u = rng.standard_normal(4)
    u /= np.linalg.norm(u)
    s1 = local_freeness(spec, u)[1]
    for R in (0.5, 2.0, 7.0):
        assert local_freeness(spec, R * u)[1] == pytest.approx(R * s1, rel=1e-12)


def test_projection_eh_converges():
    e = catalog.eguchi_hanson()
    rng = np.random.default_rng(20240611)
    for _ in range(10):
        q0 = rng.standard_normal(8)
        q0 /= np.linalg.norm(q0)
        p = project_to_level(e.spec, q0, e.level)
        assert p.residual < 1e-12
        assert p.iterations <= 30


def test_projection_fixed_point_and_splitting():
    e = catalog.tp1xtp1()
    p = project_to_level(e.spec, e.base_point, e.level)
    np.testing.assert_array_equal(p.q, e.base_point)
    assert p.iterations == 0
    p2 = project_to_level(e.spec, p.q, e.level)
    assert p2.residual <= p.residual
    assert p.orthogonality_defect() < 1e-10
    assert p.dim_h == e.spec.n - 4 * e.spec.k
    total = p.vertical.shape[1] + sum(N.shape[1] for N in p.normals) + p.dim_h
    assert total == e.spec.n


def test_projection_nonabelian_splitting():
    spec = su2_diag()
    rng = np.random.default_rng(5)
    for _ in range(5):
        p = project_to_level(spec, rng.standard_normal(spec.n), np.zeros((3, 3)))
        assert p.residual < 1e-12
        assert p.orthogonality_defect() < 1e-10
        assert p.dim_h == spec.n - 12


def test_projection_errors():
    e = catalog.eguchi_hanson()
    with pytest.raises(DegenerateAction):
        project_to_level(e.spec, np.zeros(8), e.level)
    spec = su2_diag()
    with pytest.raises(NonInvariantLevel):
        project_to_level(spec, np.ones(spec.n), np.array([[1.0, 0, 0], [0, 0, 0], [0, 0, 0]]))
    with pytest.raises(MaxIterations):
        project_to_level(e.spec, np.ones(8), e.level, max_iter=1)


def test_null_direction_on_null_cone():
    spec = catalog.eguchi_hanson().spec
    v = null_direction(spec, np.random.default_rng(6))
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert moment(spec, v).norm() < 1e-12


def test_spec_validation():
    with pytest.raises(ValueError):
        GroupActionSpec.quaternionic(np.ones((1, 1, 1, 4)))
    assert isinstance(moment(sp1(), np.ones(4)), MomentValue)
