import numpy as np
import pytest
from scipy.stats import unitary_group

from hkcurv import catalog, curv
from hkcurv.curv import NormChoice
from hkcurv.errors import NonOrthonormalPlane
from hkcurv.hkquot import GroupActionSpec, moment, project_to_level
from hkcurv.quatalg import I, J, K, real_rep, su2_basis

from oracles import fd_perp_components, sampled_v

# Eguchi-Hanson point and plane; components frozen from the finite-difference oracle
EH_Q = np.array([0.9794358770077206, 0.43060945294637487, 0.2783881794628834, 0.01238915241972356,
                 -0.47792823767100623, -0.19513637212975848, 0.5774534056155204, 0.01033619894527321])
EH_X = np.array([-0.08343067087276963, -0.3970707771053021, 0.3712018508446794, -0.16384104997256443,
                 -0.40210513542737203, -0.6436850146085795, -0.06809953584070542, 0.3001381892556349])
EH_Y = np.array([-0.16617640675247686, -0.01275765479644764, -0.26359370377831937, -0.48166542953721964,
                 0.4513916801919923, -0.4205741999334687, -0.37857138797839307, -0.38312663051264007])
EH_RHO = np.array([-0.17146467812364777, 0.11867733331890437, 0.00839654350448197, 0.21702985082117934])
EH_V = 0.40646703563503034


@pytest.fixture(scope="module")
def eh_point():
    e = catalog.eguchi_hanson()
    return project_to_level(e.spec, EH_Q, e.level)


def su2_diag(d=4):
    gens = np.zeros((3, d, d, 4))
    for a, u in enumerate((I, J, K)):
        for l in range(d):
            gens[a, l, l] = 0.5 * u
    return GroupActionSpec.quaternionic(gens, name="sp1-diag")


def random_plane(point, rng):
    x, y = curv.sample_planes(point.dim_h, 1, rng)
    return point.horizontal @ x[0], point.horizontal @ y[0]


def test_perp_components_golden(eh_point):
    pc = curv.perp_components(eh_point, EH_X, EH_Y)
    np.testing.assert_allclose(pc.rho.ravel(), EH_RHO, atol=1e-9)


@pytest.mark.parametrize("which", ["eguchi-hanson", "tp1xtp1", "sp1-diag"])
def test_perp_components_match_projector_derivative(which):
    rng = np.random.default_rng(11)
    if which == "sp1-diag":
        spec, level, base = su2_diag(), np.zeros((3, 3)), rng.standard_normal(16)
    else:
        e = catalog.load_catalog_example(which)
        spec, level, base = e.spec, e.level, e.base_point + 0.5 * rng.standard_normal(e.spec.n)
    p = project_to_level(spec, base, level)
    for _ in range(3):
        X, Y = random_plane(p, rng)
        np.testing.assert_allclose(curv.perp_components(p, X, Y).rho, fd_perp_components(p, X, Y), atol=1e-8)


def test_perp_components_symmetries_and_bilinearity(eh_point):
    rng = np.random.default_rng(12)
    X1, Y = random_plane(eh_point, rng)
    X2, _ = random_plane(eh_point, rng)
    r = lambda X, Y: curv.perp_components(eh_point, X, Y, check=False).rho
    # rho_0 is skew and rho_1..3 symmetric in (X, Y); the symmetric part of rho_0 vanishes
    np.testing.assert_allclose(r(X1, Y)[0] + r(Y, X1)[0], 0.0, atol=1e-10)
    np.testing.assert_allclose(r(X1, Y)[1:], r(Y, X1)[1:], atol=1e-10)
    a, b = 0.7, -1.9
    np.testing.assert_allclose(r(a * X1 + b * X2, Y), a * r(X1, Y) + b * r(X2, Y), atol=1e-10)


def test_perp_components_vanish_on_split_plane():
    # on tp1xtp1 a plane with one leg in each factor sees no O'Neill or normal terms
    e = catalog.tp1xtp1()
    p = project_to_level(e.spec, e.base_point, e.level)
    P = p.horizontal @ p.horizontal.T  # block diagonal for a product action
    X = P[:, np.argmax(np.linalg.norm(P[:, :8], axis=0))]
    Y = P[:, 8 + np.argmax(np.linalg.norm(P[:, 8:], axis=0))]
    X /= np.linalg.norm(X)
    Y /= np.linalg.norm(Y)
    assert np.linalg.norm(X[8:]) < 1e-12 and np.linalg.norm(Y[:8]) < 1e-12
    s = curv.sectional_curvature(p, X, Y)
    np.testing.assert_allclose(s.components.rho, 0.0, atol=1e-12)
    assert abs(s.K_Q) < 1e-12


def test_hopf_round_sphere():
    e = catalog.hopf_kahler()
    rng = np.random.default_rng(13)
    for _ in range(5):
        p = project_to_level(e.spec, rng.standard_normal(4), e.level)
        X, Y = random_plane(p, rng)
        s = curv.sectional_curvature(p, X, Y)
        assert s.K_Q == pytest.approx(4.0, rel=1e-12)
        assert s.K_Q - s.K_level == pytest.approx(3 * s.vertical_sq, abs=1e-12)


def test_rotation_invariance_and_errors(eh_point):
    rng = np.random.default_rng(14)
    X, Y = random_plane(eh_point, rng)
    k0 = curv.sectional_curvature(eh_point, X, Y).K_Q
    for t in rng.uniform(0, 2 * np.pi, 10):
        Xr = np.cos(t) * X + np.sin(t) * Y
        Yr = -np.sin(t) * X + np.cos(t) * Y
        assert abs(curv.sectional_curvature(eh_point, Xr, Yr).K_Q - k0) < 1e-9
    with pytest.raises(NonOrthonormalPlane):
        curv.sectional_curvature(eh_point, X, 2 * Y)
    with pytest.raises(ValueError):
        v = eh_point.vertical[:, 0]
        curv.sectional_curvature(eh_point, v, Y - (Y @ v) * v)


def test_each_component_bounded_by_V(eh_point):
    V = curv.v_norm(eh_point).value
    assert V == pytest.approx(EH_V, rel=1e-9)
    rng = np.random.default_rng(15)
    for _ in range(50):
        X, Y = random_plane(eh_point, rng)
        vecs = curv.perp_components(eh_point, X, Y).vectors()
        assert np.all(np.linalg.norm(vecs, axis=1) <= V + 1e-10)


def test_v_norm_matches_sampling_oracle(eh_point):
    assert curv.v_norm(eh_point).value == pytest.approx(sampled_v(eh_point, 100_000, np.random.default_rng(0)),
                                                        rel=1e-3)
    assert curv.sampled_bilinear_norm(curv.a_tensor(eh_point), 100_000, np.random.default_rng(1)) \
        <= curv.v_norm(eh_point).value * (1 + 1e-12)


def test_bilinear_norm_of_known_tensor():
    # T(x, y) = (x . y, x^T R y) with R a rotation: norm 1
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    T = np.stack([np.eye(2), R])
    assert curv.bilinear_norm(T, rng=np.random.default_rng(0)).value == pytest.approx(1.0, rel=1e-12)
    assert curv.bilinear_norm(np.zeros((1, 3, 3))).value == 0.0


def test_empty_horizontal_space():
    # Sp(1) on H^1: the quotient is a point; take the level through q itself
    spec = GroupActionSpec.quaternionic(su2_basis().quaternionic)
    q = np.array([1.0, 0.0, 0.0, 0.0])
    p = project_to_level(spec, q, moment(spec, q), check_level=False)
    assert p.dim_h == 0
    assert curv.v_norm(p).value == 0.0
    assert curv.f_norm(p).value == 0.0
    rep = curv.verify_bounds(p, 10)
    assert rep.n_planes == 0 and rep.passed


def test_metric_scaling_of_V(eh_point):
    # g -> t^2 g: scale the coordinates by t (q -> t q, level -> t^2 c); V picks up 1/t
    e = catalog.eguchi_hanson()
    V0 = curv.v_norm(eh_point).value
    for t in (0.5, 3.0):
        p = project_to_level(e.spec, t * eh_point.q, t ** 2 * e.level)
        assert p.iterations == 0
        assert curv.v_norm(p).value == pytest.approx(V0 / t, rel=1e-10)


def test_f_norm_metric_equals_c_norm(eh_point):
    for cid in ("eguchi-hanson", "tp1xtp1"):
        e = catalog.load_catalog_example(cid)
        rng = np.random.default_rng(16)
        p = project_to_level(e.spec, e.base_point + 0.5 * rng.standard_normal(e.spec.n), e.level)
        assert curv.f_norm(p, NormChoice.METRIC).value == pytest.approx(curv.c_norm(p).value, rel=1e-9)


def test_f_uniform_on_eh():
    e = catalog.eguchi_hanson()
    rng = np.random.default_rng(17)
    # the shell |q| = const of the level set is one orbit of U(2), which commutes with the circle
    p0 = project_to_level(e.spec, e.ray(np.random.default_rng(1))(3.0), e.level)
    F0 = curv.f_norm(p0, restarts=8).value
    Fs = []
    for _ in range(100):
        U = unitary_group.rvs(2, random_state=rng)
        Q = np.zeros((2, 2, 4))
        Q[..., 0], Q[..., 1] = U.real, U.imag
        p = project_to_level(e.spec, real_rep(Q) @ p0.q, e.level)
        assert abs(np.linalg.norm(p.q) - np.linalg.norm(p0.q)) < 1e-10
        Fs.append(curv.f_norm(p, restarts=8).value)
    assert (max(Fs) - min(Fs)) / F0 < 0.1
    # and a uniform bound over unconstrained points
    for _ in range(100):
        p = project_to_level(e.spec, rng.standard_normal(8), e.level)
        assert curv.f_norm(p, restarts=8).value <= 1.0 + 1e-9


def test_l_norm():
    e = catalog.hopf_kahler()
    p = project_to_level(e.spec, e.base_point, e.level)
    assert curv.l_norm(p, NormChoice.METRIC).value == pytest.approx(1.0, abs=1e-14)
    e = catalog.eguchi_hanson()
    ray = e.ray(np.random.default_rng(1))
    prev = None
    for R in (1.0, 2.0, 4.0, 8.0):
        p = project_to_level(e.spec, ray(R), e.level)
        ln = curv.l_norm(p, NormChoice.EUCLIDEAN)
        assert ln.value * np.linalg.norm(p.q) == pytest.approx(1.0, rel=1e-10)
        assert ln.value <= min(ln.bound1, ln.bound2) + 1e-12
        if prev is not None:
            assert prev / ln.value == pytest.approx(2.0, rel=0.15)
        prev = ln.value
    e = catalog.tp1xtp1()
    p = project_to_level(e.spec, e.base_point + 0.3, e.level)
    assert curv.l_norm(p, NormChoice.METRIC).value <= 1.0 + 1e-12


def test_verify_bounds_eh(eh_point):
    rep = curv.verify_bounds(eh_point, 1000, seed=3)
    assert rep.passed, rep.checks()
    assert rep.mode == "hyperkahler"
    assert len(rep.K_Q) == 1000
    empty = curv.verify_bounds(eh_point, 0)
    assert empty.n_planes == 0 and empty.passed


def test_verify_bounds_kahler():
    e = catalog.hopf_kahler()
    p = project_to_level(e.spec, e.base_point, e.level)
    rep = curv.verify_bounds(p, 100, seed=0)
    assert rep.passed
    assert rep.kahler_best >= 0.9 * rep.V
    assert rep.kahler_best <= 5 * rep.V ** 2 + 1e-8
    with pytest.raises(ValueError):
        curv.verify_bounds(p, 10, mode="hyperkahler")


def test_scan_single_radius_and_flag():
    e = catalog.eguchi_hanson()
    rows = curv.asymptotic_scan(e.spec, e.level, e.ray(np.random.default_rng(1)), [4.0], n_planes=50)
    assert len(rows) == 1 and rows[0].residual < 1e-12
    spec = GroupActionSpec(e.spec.lie, e.spec.complex_structures)
    with pytest.raises(ValueError):
        curv.asymptotic_scan(spec, e.level, lambda R: R * e.base_point, [1.0])


def test_v_norm_sampling_non_conformal():
    # on Eguchi-Hanson |A(x, .)| is the same for every unit x, so sampling is exact there;
    # tp1xtp1 away from its base point is a genuine maximisation
    e = catalog.tp1xtp1()
    rng = np.random.default_rng(7)
    p = project_to_level(e.spec, e.base_point + 0.5 * rng.standard_normal(16), e.level)
    V = curv.v_norm(p).value
    S = sampled_v(p, 100_000, np.random.default_rng(8))
    assert S <= V * (1 + 1e-12)
    assert (V - S) / V < 3e-3
    assert V - S > 1e-6
