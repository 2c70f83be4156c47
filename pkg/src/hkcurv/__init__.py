"""Curvature of hyperkähler and Kähler quotients of flat space, and Nahm-moduli bounds."""
__version__ = "0.1.0"

from . import quatalg, hkquot, curv, chart, nahm, catalog  # noqa: E402
from .errors import HKCurvError  # noqa: E402
from .hkquot import GroupActionSpec, LevelSetPoint, project_to_level  # noqa: E402
from .curv import sectional_curvature, v_norm, f_norm, c_norm, l_norm, verify_bounds, asymptotic_scan  # noqa: E402
from .catalog import load_catalog_example  # noqa: E402

__all__ = [
    "quatalg", "hkquot", "curv", "chart", "nahm", "catalog", "HKCurvError",
    "GroupActionSpec", "LevelSetPoint", "project_to_level",
    "sectional_curvature", "v_norm", "f_norm", "c_norm", "l_norm", "verify_bounds",
    "asymptotic_scan", "load_catalog_example",
]
