import numpy as np
import pytest

from hkcurv import catalog, curv
from hkcurv.chart import chart_point, chart_sectional_curvature, quotient_metric
from hkcurv.hkquot import moment, moment_jacobian, project_to_level


def test_chart_stays_on_level_set():
    e = catalog.eguchi_hanson()
    p = project_to_level(e.spec, e.base_point + 0.3, e.level)
    u = np.array([0.05, -0.02, 0.01, 0.03])
    x, T = chart_point(p, u)
    np.testing.assert_allclose(moment(e.spec, x).covector, e.level, atol=1e-13)
    # the tangent map annihilates d mu
    assert np.max(np.abs(moment_jacobian(e.spec, x) @ T)) < 1e-12
    np.testing.assert_allclose(quotient_metric(p, np.zeros(4)), np.eye(4), atol=1e-12)


@pytest.mark.parametrize("cid,rtol", [("hopf-kahler", 1e-6), ("eguchi-hanson", 1e-5), ("tp1xtp1", 1e-5)])
def test_chart_matches_gauss_route(cid, rtol):
    e = catalog.load_catalog_example(cid)
    rng = np.random.default_rng(21)
    p = project_to_level(e.spec, e.base_point + 0.4 * rng.standard_normal(e.spec.n), e.level)
    x, y = curv.sample_planes(p.dim_h, 1, rng)
    k = curv.sectional_curvature(p, p.horizontal @ x[0], p.horizontal @ y[0]).K_Q
    kc = chart_sectional_curvature(p, x[0], y[0])
    assert kc == pytest.approx(k, rel=rtol, abs=1e-7)
