"""Residual a posteriori indicators for the state, adjoint and variational inequality.

With several current patterns the state and adjoint indicators are summed
over patterns, and the coupling term ``grad u . grad p`` in the element
residual of the variational inequality is summed before taking norms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objective import check_current, double_well_prime, sensitivity_density
from .quadrature import DEGREE6, evaluate_p1


@dataclass(frozen=True)
class IndicatorTable:
    eta1_sq: np.ndarray
    eta2_sq: np.ndarray
    eta3_q: np.ndarray
    q: float

    def totals(self):
        return float(self.eta1_sq.sum()), float(self.eta2_sq.sum()), float(self.eta3_q.sum())

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("element,eta1_sq,eta2_sq,eta3_q\n")
            for t, (a, b, c) in enumerate(zip(self.eta1_sq, self.eta2_sq, self.eta3_q)):
                fh.write(f"{t},{float(a)!r},{float(b)!r},{float(c)!r}\n")


def residual_R1(mesh, sigma, w):
    """``div(sigma grad w)`` per element; for P1 data this is ``grad sigma . grad w``."""
    return np.sum(mesh.gradient(sigma) * mesh.gradient(w), axis=1)


def jump_J1(mesh, sigma, w, W, impedances=None):
    """Flux residual at the two endpoints of every face, shape (n_faces, 2).

    The residual is linear along each face, so endpoint values determine it.
    """
    z = np.asarray(mesh.layout.impedances if impedances is None else impedances, dtype=float)
    fe = mesh.face_elements
    n = mesh.face_normals
    g = mesh.gradient(w)
    flux = np.sum(g[fe[:, 0]] * n, axis=1)
    inner = fe[:, 1] >= 0
    flux[inner] -= np.sum(g[fe[inner, 1]] * n[inner], axis=1)
    s_end = np.asarray(sigma)[mesh.face_vertices]
    out = s_end * flux[:, None]
    tags = mesh.face_tags
    elec = tags >= 0
    if np.any(elec):
        l = tags[elec]
        w_end = np.asarray(w)[mesh.face_vertices[elec]]
        out[elec] += (w_end - np.asarray(W)[l][:, None]) / z[l][:, None]
    return out


def jump_J2(mesh, sigma, alpha_eps):
    """``alpha eps [grad sigma . n]`` on interior faces, ``alpha eps grad sigma . n`` on the boundary."""
    fe = mesh.face_elements
    n = mesh.face_normals
    g = mesh.gradient(sigma)
    out = np.sum(g[fe[:, 0]] * n, axis=1)
    inner = fe[:, 1] >= 0
    out[inner] -= np.sum(g[fe[inner, 1]] * n[inner], axis=1)
    return alpha_eps * out


def residual_R2(mesh, sigma, coupling, params, rule=DEGREE6):
    """``(alpha / (2 eps)) W'(sigma) - coupling`` at the rule's points, (m, q)."""
    bary, _ = rule
    s = evaluate_p1(sigma, mesh.elements, bary)
    return (params.alpha / (2.0 * params.eps)) * double_well_prime(s, params.c0, params.c1) \
        - np.asarray(coupling)[:, None]


def residual_R2_norm(mesh, sigma, states, adjoints, params, q=2.0, rule=DEGREE6):
    """``int_T |R_T2|^q`` per element (exact for q = 2)."""
    coupling = sensitivity_density(mesh, states, adjoints)
    R = residual_R2(mesh, sigma, coupling, params, rule)
    _, wts = rule
    return (np.abs(R) ** q @ wts) * mesh.areas


def _face_l2_sq(ends, lengths):
    a, b = ends[:, 0], ends[:, 1]
    return lengths * (a * a + a * b + b * b) / 3.0


def _to_elements(mesh, face_values):
    """Assign each face value to every adjacent element."""
    fe = mesh.face_elements
    out = np.bincount(fe[:, 0], weights=face_values, minlength=mesh.n_elements)
    inner = fe[:, 1] >= 0
    out += np.bincount(fe[inner, 1], weights=face_values[inner], minlength=mesh.n_elements)
    return out


def flux_indicator(mesh, sigma, w, W):
    """``h_T^2 ||R_T1||^2 + sum_F h_F ||J_F1||^2`` for one field."""
    hT2 = mesh.areas
    elem = hT2 * mesh.areas * residual_R1(mesh, sigma, w) ** 2
    hF = mesh.face_lengths
    face = hF * _face_l2_sq(jump_J1(mesh, sigma, w, W), hF)
    return elem + _to_elements(mesh, face)


def compute_indicators(mesh, sigma, states, adjoints, params, q=2.0):
    sigma = np.asarray(sigma, dtype=float)
    check_current(sigma, states, "state")
    check_current(sigma, adjoints, "adjoint")
    eta1 = np.zeros(mesh.n_elements)
    eta2 = np.zeros(mesh.n_elements)
    for s in states:
        eta1 += flux_indicator(mesh, sigma, s.u, s.U)
    for a in adjoints:
        eta2 += flux_indicator(mesh, sigma, a.p, a.P)
    hT = np.sqrt(mesh.areas)
    hF = mesh.face_lengths
    J2 = jump_J2(mesh, sigma, params.alpha * params.eps)
    eta3 = hT ** q * residual_R2_norm(mesh, sigma, states, adjoints, params, q) \
        + _to_elements(mesh, hF * hF * np.abs(J2) ** q)
    return IndicatorTable(eta1, eta2, eta3, float(q))
