import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from adaptive_eit.mesh import ElectrodeLayout, Mesh, build_initial_mesh

settings.register_profile(
    "default", max_examples=30, deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


def square_layout(L=16, length=0.25, perimeter=8.0, impedance=1.0):
    return ElectrodeLayout.evenly_spaced(L, length, perimeter, 0.0, impedance)


@pytest.fixture
def unit_square():
    """2 x 2 criss-cross split of the unit square, no electrodes."""
    return build_initial_mesh((0.0, 1.0, 0.0, 1.0), None, 2)


@pytest.fixture
def single_triangle():
    return Mesh(
        vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        elements=np.array([[0, 1, 2]]),
        refinement_edge=np.array([0]),
        generation=np.array([0]),
        extents=(0.0, 1.0, 0.0, 1.0),
    )


@pytest.fixture(scope="session")
def example_mesh():
    """The 81-vertex initial mesh with sixteen electrodes of length 1/4."""
    return build_initial_mesh((-1.0, 1.0, -1.0, 1.0), square_layout(), 8)


@pytest.fixture(scope="session")
def small_mesh():
    """Coarse 4 x 4 mesh of the unit square with two electrodes."""
    layout = ElectrodeLayout(((0.25, 0.75), (2.25, 2.75)), (1.0, 1.0))
    return build_initial_mesh((0.0, 1.0, 0.0, 1.0), layout, 4)


def random_field(mesh, rng, lo=1.0, hi=2.0):
    return rng.uniform(lo, hi, mesh.n_vertices)


@pytest.fixture(scope="session")
def desk_runs(tmp_path_factory):
    """Adaptive K=8 and uniform K=4 runs of the default problem on shared data."""
    from adaptive_eit.experiments.afem import make_data, run_afem
    from adaptive_eit.experiments.config import DESK

    root = tmp_path_factory.mktemp("desk")
    t0 = time.perf_counter()
    data = make_data(DESK)
    adaptive = run_afem(DESK, data, str(root / "adaptive"))
    adaptive.elapsed = time.perf_counter() - t0
    uniform = run_afem(DESK.replace(mode="uniform", K=4), data, str(root / "uniform"))
    return adaptive, uniform, root
