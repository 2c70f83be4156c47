"""Worked examples shipped with the package."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UnknownExample
from .hkquot import GroupActionSpec, null_direction
from .quatalg import I

__all__ = ["CatalogEntry", "NahmExample", "EXAMPLES", "load_catalog_example", "catalog_ids",
           "eguchi_hanson", "tp1xtp1", "hopf_kahler"]


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    description: str
    spec: GroupActionSpec
    level: np.ndarray
    base_point: np.ndarray

    ray_factory: Callable | None = None

    def random_start(self, rng, scale=1.0):
        return scale * rng.standard_normal(self.spec.n)

    def ray(self, rng):
        """R -> starting point for asymptotic scans; default R times a null-cone direction."""
        if self.ray_factory is not None:
            return self.ray_factory(self, rng)
        qh = null_direction(self.spec, rng)
        return lambda R: R * qh


@dataclass(frozen=True)
class NahmExample:
    id: str
    description: str
    a: float = 0.0
    b: float = 1.0
    nodes: int = 96


def _diag_i(d, mask):
    A = np.zeros((d, d, 4))
    for l in range(d):
        if mask[l]:
            A[l, l] = I
    return A


def eguchi_hanson():
    """Diagonal U(1), generator i Id_2, on H^2 at level mu_1 = -1/2.

    The quotient is T*P^1 with the Eguchi-Hanson metric; q = (1, 0) lies on
    the level set.
    """
    spec = GroupActionSpec.quaternionic(
        _diag_i(2, [1, 1])[None], name="eguchi-hanson", null_cone_locally_free=True)
    level = np.array([[-0.5], [0.0], [0.0]])
    base = np.zeros(8)
    base[0] = 1.0
    return CatalogEntry("eguchi-hanson", eguchi_hanson.__doc__.strip().splitlines()[0],
                        spec, level, base)


def tp1xtp1():
    """U(1) x U(1) on H^2 x H^2, each factor acting separately on its own H^2.

    Not locally free on the null cone: (q, 0) is fixed by the second circle.
    """
    gens = np.stack([_diag_i(4, [1, 1, 0, 0]), _diag_i(4, [0, 0, 1, 1])])
    spec = GroupActionSpec.quaternionic(gens, name="tp1xtp1", null_cone_locally_free=False)
    level = np.array([[-0.5, -0.5], [0.0, 0.0], [0.0, 0.0]])
    base = np.zeros(16)
    base[0] = 1.0
    base[8] = 1.0
    return CatalogEntry("tp1xtp1", tp1xtp1.__doc__.strip().splitlines()[0], spec, level, base,
                        _factor_one_ray)


def _factor_one_ray(entry, rng):
    # move out along the null cone of the first factor, keep the second at its core point
    factor = GroupActionSpec.quaternionic(_diag_i(2, [1, 1])[None])
    qh = null_direction(factor, rng)
    core = entry.base_point.copy()

    def ray(R):
        q = core.copy()
        q[:8] = R * qh
        return q

    return ray


def hopf_kahler():
    """U(1) acting diagonally on C^2, Kähler quotient at mu = -1/2.

    The level set is the unit 3-sphere and the quotient the round 2-sphere of
    radius 1/2 (curvature 4).
    """
    spec = GroupActionSpec.complex([1j * np.eye(2)], name="hopf-kahler", null_cone_locally_free=True)
    level = np.array([[-0.5]])
    base = np.array([1.0, 0.0, 0.0, 0.0])
    return CatalogEntry("hopf-kahler", hopf_kahler.__doc__.strip().splitlines()[0], spec, level, base)


def nahm_axial():
    return NahmExample("nahm-axial", "Axially symmetric su(2) Nahm data on (0, 1)")


EXAMPLES = {
    "eguchi-hanson": eguchi_hanson,
    "tp1xtp1": tp1xtp1,
    "hopf-kahler": hopf_kahler,
    "nahm-axial": nahm_axial,
}


def catalog_ids():
    return sorted(EXAMPLES)


def load_catalog_example(example_id):
    try:
        return EXAMPLES[example_id]()
    except KeyError:
        raise UnknownExample(example_id) from None
