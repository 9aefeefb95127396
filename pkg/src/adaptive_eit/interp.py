"""Field transfer between meshes and the star-average quasi-interpolant."""
import numpy as np

from .errors import GeometryError, NotNestedError
from .mesh import is_nested
from .quadrature import DEGREE4


def prolong(values, fine):
    """Extend a nodal P1 field from an ancestor mesh to ``fine``.

    The ancestor's vertices are the first ``len(values)`` vertices of ``fine``;
    every later vertex is the midpoint of an edge whose endpoints precede it,
    so a single ordered sweep reproduces the P1 function exactly.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    out = np.empty(fine.n_vertices)
    out[:n] = values
    vp = fine.vertex_parents
    for v in range(n, fine.n_vertices):
        a, b = vp[v]
        if a < 0:
            raise NotNestedError("vertex without parents beyond the coarse vertex set")
        out[v] = 0.5 * (out[a] + out[b])
    return out


def locate_points(mesh, points, chunk=256):
    """Containing element and barycentric coordinates of each point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    p = mesh.vertices[mesh.elements]
    v0 = p[:, 0]
    T = np.stack([p[:, 1] - v0, p[:, 2] - v0], axis=2)  # (m, 2, 2)
    Tinv = np.linalg.inv(T)
    elem = np.full(len(points), -1, dtype=np.int64)
    bary = np.zeros((len(points), 3))
    scale = max(mesh.extents[1] - mesh.extents[0], mesh.extents[3] - mesh.extents[2])
    tol = 1e-12 * scale
    for s in range(0, len(points), chunk):
        x = points[s:s + chunk]
        d = x[:, None, :] - v0[None]                       # (k, m, 2)
        lam12 = np.einsum("mij,kmj->kmi", Tinv, d)
        lam = np.concatenate([1 - lam12.sum(axis=2, keepdims=True), lam12], axis=2)
        ok = np.all(lam >= -tol, axis=2)
        hit = ok.any(axis=1)
        first = np.argmax(ok, axis=1)
        idx = np.arange(len(x))
        elem[s:s + chunk] = np.where(hit, first, -1)
        bary[s:s + chunk] = lam[idx, first]
    if np.any(elem < 0):
        raise GeometryError("evaluation point outside the domain")
    return elem, bary


def evaluate(mesh, values, points):
    """Evaluate a nodal P1 field at arbitrary points in the domain."""
    elem, bary = locate_points(mesh, points)
    return np.sum(np.asarray(values)[mesh.elements[elem]] * bary, axis=1)


def lagrange_interp(source_mesh, values, target_mesh):
    """Nodal interpolation of a P1 field onto ``target_mesh``.

    Nested targets use the exact midpoint sweep; otherwise the source field
    is evaluated at the target vertices.
    """
    if is_nested(source_mesh, target_mesh):
        return prolong(values, target_mesh)
    return evaluate(source_mesh, values, target_mesh.vertices)


def star_averages(mesh, v, rule=DEGREE4):
    """Mean of ``v`` over the vertex star of every vertex.

    ``v`` is either a nodal array on ``mesh`` (integrated exactly) or a
    callable ``v(x, y)`` integrated with the degree-4 rule.
    """
    if callable(v):
        bary, wts = rule
        pts = np.einsum("qi,mid->mqd", bary, mesh.vertices[mesh.elements])
        vals = np.asarray(v(pts[..., 0], pts[..., 1]), dtype=float)
        elem_int = (vals @ wts) * mesh.areas
    else:
        elem_int = np.asarray(v, dtype=float)[mesh.elements].mean(axis=1) * mesh.areas
    inc = mesh.vertex_element_incidence
    return (inc @ elem_int) / (inc @ mesh.areas)


def quasi_interp(v, mesh):
    """Star-average quasi-interpolant summed over interior nodes.

    Interior vertices get the mean of ``v`` over their star; boundary
    vertices are set to zero.
    """
    out = star_averages(mesh, v)
    out[mesh.boundary_vertices] = 0.0
    return out
