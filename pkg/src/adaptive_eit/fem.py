"""P1 assembly kernels shared by the forward model, objective and optimizer."""
import numpy as np
import scipy.sparse as sp

from .quadrature import DEGREE4


def _scatter_matrix(mesh, local):
    E = mesh.elements
    rows = np.repeat(E, 3, axis=1).ravel()
    cols = np.tile(E, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def scatter_vector(mesh, local):
    """Sum per-element local vectors (m, 3) into a global nodal vector."""
    return np.bincount(mesh.elements.ravel(), weights=np.asarray(local).ravel(), minlength=mesh.n_vertices)


def stiffness_matrix(mesh, coef=None):
    """``(c grad u, grad v)`` with an elementwise constant coefficient ``c``."""
    G = mesh.grad_basis
    local = np.einsum("mid,mjd->mij", G, G) * mesh.areas[:, None, None]
    if coef is not None:
        local = local * np.asarray(coef)[:, None, None]
    return _scatter_matrix(mesh, local)


def stiffness_action(mesh, values):
    """``(grad values, grad phi_i)`` for every node, from element gradients."""
    g = mesh.gradient(values)
    local = np.einsum("md,mid->mi", g, mesh.grad_basis) * mesh.areas[:, None]
    return scatter_vector(mesh, local)


def mass_matrix(mesh):
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = mesh.areas[:, None, None] * ref[None]
    return _scatter_matrix(mesh, local)


def weighted_mass_matrix(mesh, weight, rule=DEGREE4):
    """``(w u, v)`` with ``weight`` given at the rule's points, shape (m, q)."""
    bary, wts = rule
    phi = np.einsum("qi,qj->qij", bary, bary)
    local = np.einsum("mq,q,qij->mij", weight, wts, phi) * mesh.areas[:, None, None]
    return _scatter_matrix(mesh, local)


def load_vector(mesh, values, rule=DEGREE4):
    """``(f, phi_i)`` with ``f`` given at the rule's points, shape (m, q)."""
    bary, wts = rule
    local = np.einsum("mq,q,qi->mi", values, wts, bary) * mesh.areas[:, None]
    return scatter_vector(mesh, local)


def element_means(mesh, values):
    return np.asarray(values)[mesh.elements].mean(axis=1)


def integrate(mesh, values, rule=DEGREE4):
    """Integral of a function given at quadrature points, (m, q)."""
    _, wts = rule
    return float(np.sum((values @ wts) * mesh.areas))
