"""Double-well potential, Modica-Mortola penalty, Tikhonov objective and its derivative."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, StaleSolutionError
from .fem import load_vector, stiffness_action
from .quadrature import DEGREE4, evaluate_p1


@dataclass(frozen=True)
class RegularizationParams:
    eps: float = 1e-2
    alpha: float = 2e-2   # the scaled weight alpha / c_W
    c0: float = 1.0
    c1: float = 2.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if not self.alpha >= 0:
            raise ConfigError("alpha must be nonnegative")
        if not 0 < self.c0 < self.c1:
            raise ConfigError("need 0 < c0 < c1")

    @property
    def c_W(self):
        """Integral of sqrt(W) over [c0, c1], equal to (c1 - c0)^3 / 6."""
        return (self.c1 - self.c0) ** 3 / 6.0

    @property
    def alpha_unscaled(self):
        return self.alpha * self.c_W


def double_well(s, c0, c1):
    s = np.asarray(s, dtype=float)
    return (s - c0) ** 2 * (s - c1) ** 2


def double_well_prime(s, c0, c1):
    s = np.asarray(s, dtype=float)
    return 2.0 * (s - c0) * (s - c1) * (2.0 * s - c0 - c1)


def project_box(values, c0, c1):
    return np.clip(np.asarray(values, dtype=float), c0, c1)


def gradient_energy(mesh, sigma):
    """``||grad sigma||^2`` for a nodal P1 field."""
    g = mesh.gradient(sigma)
    return float(np.sum(mesh.areas * np.sum(g * g, axis=1)))


def well_energy(mesh, sigma, c0, c1):
    """``int W(sigma)``, exact for P1 sigma with the degree-4 rule."""
    bary, wts = DEGREE4
    vals = double_well(evaluate_p1(sigma, mesh.elements, bary), c0, c1)
    return float(np.sum((vals @ wts) * mesh.areas))


def mm_functional(mesh, sigma, params):
    """``eps ||grad sigma||^2 + (1/eps) int W(sigma)``."""
    return (params.eps * gradient_energy(mesh, sigma)
            + well_energy(mesh, sigma, params.c0, params.c1) / params.eps)


def fidelity(voltages, data):
    voltages, data = list(voltages), list(data)
    if len(voltages) != len(data):
        raise ConfigError(f"{len(voltages)} simulated patterns but {len(data)} data vectors")
    return 0.5 * sum(float(np.sum((np.asarray(U) - np.asarray(d)) ** 2)) for U, d in zip(voltages, data))


def objective_parts(mesh, sigma, voltages, data, params):
    """(total, fidelity, penalty) with penalty = (alpha / 2) F_eps(sigma)."""
    fid = fidelity(voltages, data)
    pen = 0.5 * params.alpha * mm_functional(mesh, sigma, params)
    return fid + pen, fid, pen


def objective(mesh, sigma, voltages, data, params):
    return objective_parts(mesh, sigma, voltages, data, params)[0]


def check_current(sigma, solutions, what):
    for s in solutions:
        if s.sigma is not sigma and not np.array_equal(s.sigma, sigma):
            raise StaleSolutionError(f"{what} was computed for a different conductivity")


def penalty_gradient(mesh, sigma, params):
    """Dual vector of ``alpha [eps (grad sigma, grad mu) + (1/(2 eps)) (W'(sigma), mu)]``."""
    bary, _ = DEGREE4
    Wp = double_well_prime(evaluate_p1(sigma, mesh.elements, bary), params.c0, params.c1)
    return params.alpha * (params.eps * stiffness_action(mesh, sigma)
                           + load_vector(mesh, Wp) / (2.0 * params.eps))


def sensitivity_density(mesh, states, adjoints):
    """Elementwise ``sum_i grad u_i . grad p_i``."""
    out = np.zeros(mesh.n_elements)
    for st, ad in zip(states, adjoints):
        out += np.sum(mesh.gradient(st.u) * mesh.gradient(ad.p), axis=1)
    return out


def gateaux_gradient(mesh, sigma, states, adjoints, params):
    """Dual vector ``g`` with ``g @ mu = J'(sigma)[mu]`` for nodal P1 directions ``mu``.

    ``adjoints`` must solve the adjoint problem with data ``U(sigma) - U_delta``.
    """
    sigma = np.asarray(sigma, dtype=float)
    check_current(sigma, states, "state")
    check_current(sigma, adjoints, "adjoint")
    if len(states) != len(adjoints):
        raise ConfigError("need one adjoint per state")
    # (mu grad u, grad p) with mu linear and the product constant: |T|/3 per vertex
    dens = sensitivity_density(mesh, states, adjoints) * mesh.areas / 3.0
    fid = np.bincount(mesh.elements.ravel(), weights=np.repeat(dens, 3), minlength=mesh.n_vertices)
    return penalty_gradient(mesh, sigma, params) - fid
