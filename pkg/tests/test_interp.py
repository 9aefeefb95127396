import numpy as np
import pytest

from adaptive_eit.errors import GeometryError
from adaptive_eit.interp import evaluate, lagrange_interp, prolong, quasi_interp, star_averages
from adaptive_eit.mesh import build_initial_mesh, element_patch, refine, refine_uniform
from adaptive_eit.quadrature import DEGREE6, evaluate_p1

from oracles import collapsed_gauss


def test_lagrange_reproduces_linears(example_mesh):
    fine = refine_uniform(refine(example_mesh, {1, 2, 60}), 1)
    np.testing.assert_array_equal(lagrange_interp(example_mesh, np.full(81, 1.7), fine), 1.7)
    f = lambda V: V[:, 0] + 2 * V[:, 1]
    np.testing.assert_allclose(lagrange_interp(example_mesh, f(example_mesh.vertices), fine),
                               f(fine.vertices), atol=1e-14)
    # non-nested target goes through point evaluation
    other = build_initial_mesh(example_mesh.extents, None, 5)
    np.testing.assert_allclose(lagrange_interp(example_mesh, f(example_mesh.vertices), other),
                               f(other.vertices), atol=1e-14)


def test_transfer_max_norm(example_mesh):
    rng = np.random.default_rng(0)
    v = rng.standard_normal(81)
    fine = refine_uniform(example_mesh, 2)
    out = prolong(v, fine)
    # new values are averages of coarse values, so the max is attained on coarse nodes
    assert np.abs(out).max() == np.abs(v).max()
    other = build_initial_mesh(example_mesh.extents, None, 7)
    ev = lagrange_interp(example_mesh, v, other)
    assert np.abs(ev).max() <= np.abs(v).max() + 1e-14


def test_evaluate_outside(example_mesh):
    with pytest.raises(GeometryError):
        evaluate(example_mesh, np.zeros(81), np.array([[1.5, 0.0]]))


def test_quasi_interp_constants(example_mesh):
    m = refine(example_mesh, {0, 5, 99})
    out = quasi_interp(np.ones(m.n_vertices), m)
    inner = m.interior_vertices
    np.testing.assert_allclose(out[inner], 1.0, rtol=0, atol=1e-14)
    assert not out[m.boundary_vertices].any()
    out = quasi_interp(lambda x, y: 0 * x + 1.0, m)
    np.testing.assert_allclose(out[inner], 1.0, rtol=0, atol=1e-14)


def test_quasi_interp_feasible(example_mesh):
    rng = np.random.default_rng(1)
    for _ in range(100):
        v = rng.uniform(1, 2, 81)
        out = quasi_interp(v, example_mesh)[example_mesh.interior_vertices]
        assert out.min() >= 1.0 and out.max() <= 2.0


def test_star_means_hand_computed(unit_square):
    m = unit_square
    v = np.arange(9, dtype=float) ** 2
    out = star_averages(m, v)
    for x in range(9):
        star = [t for t in range(m.n_elements) if x in m.elements[t]]
        area = sum(m.areas[t] for t in star)
        integral = sum(m.areas[t] * v[m.elements[t]].mean() for t in star)
        assert out[x] == pytest.approx(integral / area, rel=1e-14)
    # the centre vertex sees the whole square: mean of the P1 field
    assert quasi_interp(v, m)[4] == pytest.approx(sum(m.areas * v[m.elements].mean(axis=1)))


def _lr_norms(mesh, f, r, bary, w):
    vals = evaluate_p1(f, mesh.elements, bary)
    if r == np.inf:
        return np.abs(vals).max(axis=1)
    return ((np.abs(vals) ** r @ w) * mesh.areas) ** (1 / r)


@pytest.mark.parametrize("r", [1, 2, np.inf])
def test_lr_stability(example_mesh, r):
    bary, w = collapsed_gauss(6)
    rng = np.random.default_rng(2)
    m = example_mesh
    consts = []
    for level in range(3):
        v = rng.standard_normal(m.n_vertices)
        pv = quasi_interp(v, m)
        lhs = _lr_norms(m, pv, r, bary, w)
        per = _lr_norms(m, v, r, bary, w)
        ratios = []
        for t in range(m.n_elements):
            patch = sorted(element_patch(m, t))
            if r == np.inf:
                rhs = per[patch].max()
            else:
                rhs = np.sum(per[patch] ** r) ** (1 / r)
            ratios.append(lhs[t] / rhs)
        consts.append(max(ratios))
        m = refine_uniform(m, 2)
    assert max(consts) <= 1.0 + 1e-12 or max(consts) / min(consts) < 1.5


def test_first_order_bound(example_mesh):
    # ||v - Pi v|| / (h ||grad v||) stays bounded under uniform refinement
    f = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    grad_norm = np.pi  # ||grad f||_{L2((-1,1)^2)} = pi
    bary, w = DEGREE6
    m = example_mesh
    c = []
    for _ in range(3):
        pts = np.einsum("kj,mjd->mkd", bary, m.vertices[m.elements])
        err = (f(pts[..., 0], pts[..., 1]) - evaluate_p1(quasi_interp(f, m), m.elements, bary)) ** 2
        e = np.sqrt(np.sum((err @ w) * m.areas))
        h = np.sqrt(m.areas.max())
        c.append(e / (h * grad_norm))
        m = refine_uniform(m, 2)
    assert max(c) <= c[0] * 1.01
