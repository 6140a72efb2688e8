from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rieszfield import Discretization, KernelContext

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


def make_cloud(points, radii=None, dim=None) -> Discretization:
    """Hand-built discretization for synthetic solver tests."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dim = dim or pts.shape[1]
    if radii is None:
        from rieszfield.geometry import _default_cell_radii

        radii = _default_cell_radii(pts)
    return Discretization(
        dim=dim,
        points=pts,
        cell_radius=np.asarray(radii, dtype=float),
        region_tag=tuple("interior" for _ in range(pts.shape[0])),
    )


def make_ctx(gram, dim=3, alpha=2.0) -> KernelContext:
    """Kernel context around an explicit Gram matrix (synthetic instances)."""
    gram = np.asarray(gram, dtype=float)
    n = gram.shape[0]
    return KernelContext(
        dim=dim,
        alpha=alpha,
        gram=gram,
        points=np.column_stack([np.arange(n), np.zeros(n), np.zeros(n)]),
        cell_radius=np.full(n, 0.25),
    )


@pytest.fixture(scope="session")
def sphere500():
    import rieszfield as rf

    d = rf.discretize(rf.GeometrySpec(kind="sphere", dim=3, radius=1.0, n_nodes=500))
    ctx = rf.assemble_gram(d, 2.0)
    return d, ctx
