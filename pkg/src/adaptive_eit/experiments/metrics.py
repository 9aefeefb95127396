"""Exact L1 / L2 distances between P1 fields on nested meshes."""
import numpy as np

from ..errors import NotNestedError
from ..interp import prolong
from ..mesh import is_nested


def l2_norm(mesh, f):
    """Exact L2 norm of a nodal P1 field."""
    v = np.asarray(f)[mesh.elements]
    sq = (np.sum(v * v, axis=1) + np.sum(v, axis=1) ** 2) / 12.0  # int_T f^2 / |T|
    return float(np.sqrt(np.sum(sq * mesh.areas)))


def _positive_part_integral(v, area):
    """Exact ``int_T max(f, 0)`` for linear f with vertex values v (k, 3)."""
    out = np.zeros(len(v))
    npos = np.sum(v > 0, axis=1)
    full = npos == 3
    out[full] = v[full].mean(axis=1) * area[full]

    def one_vertex(vals, a):
        # vals[:, 0] > 0 >= vals[:, 1], vals[:, 2]
        t1 = vals[:, 0] / (vals[:, 0] - vals[:, 1])
        t2 = vals[:, 0] / (vals[:, 0] - vals[:, 2])
        return a * t1 * t2 * vals[:, 0] / 3.0

    one = npos == 1
    if np.any(one):
        s = np.argsort(-v[one], axis=1, kind="stable")
        vals = np.take_along_axis(v[one], s, axis=1)
        out[one] = one_vertex(vals, area[one])
    two = npos == 2
    if np.any(two):
        # int f^+ = int f + int (-f)^+, and -f has exactly one positive vertex
        w = -v[two]
        s = np.argsort(-w, axis=1, kind="stable")
        vals = np.take_along_axis(w, s, axis=1)
        out[two] = v[two].mean(axis=1) * area[two] + one_vertex(vals, area[two])
    return out


def l1_norm(mesh, f):
    """Exact L1 norm of a nodal P1 field (split along the zero level line)."""
    v = np.asarray(f, dtype=float)[mesh.elements]
    a = mesh.areas
    return float(np.sum(_positive_part_integral(v, a) + _positive_part_integral(-v, a)))


def error_metrics(mesh, sigma, reference_mesh, reference):
    """(L1, L2) distance after transferring ``sigma`` to the reference mesh."""
    if not is_nested(mesh, reference_mesh):
        raise NotNestedError("the reference mesh must refine the mesh of sigma")
    diff = prolong(sigma, reference_mesh) - np.asarray(reference)
    return l1_norm(reference_mesh, diff), l2_norm(reference_mesh, diff)
