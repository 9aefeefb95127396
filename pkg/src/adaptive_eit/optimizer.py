"""Majorization-minimization / Gauss-Newton solver for the discrete Tikhonov problem.

Each outer step linearizes the forward map and replaces the double well
``W = p^2`` by ``p_L^2`` with ``p_L`` the first-order expansion of
``p(z) = (z - c0)(z - c1)``. The resulting quadratic model is minimized by
PCG, preconditioned by the sparse penalty part, followed by a projected
backtracking line search on the true objective.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .cem import adjoint_states, assemble, forward_states, project_sum_zero
from .errors import NotNestedError
from .fem import load_vector, mass_matrix, stiffness_action, stiffness_matrix, weighted_mass_matrix
from .interp import prolong
from .linalg import PCGInfo, pcg
from .mesh import is_nested
from .objective import objective_parts, project_box
from .quadrature import DEGREE4, evaluate_p1

log = logging.getLogger(__name__)


def well_factor(z, c0, c1):
    return (np.asarray(z) - c0) * (np.asarray(z) - c1)


def well_factor_prime(z, c0, c1):
    return 2.0 * np.asarray(z) - c0 - c1


def linearize_well(z, z_k, c0, c1):
    """First-order expansion of ``p(z) = (z - c0)(z - c1)`` about ``z_k``."""
    return well_factor(z_k, c0, c1) + well_factor_prime(z_k, c0, c1) * (np.asarray(z) - z_k)


# -- sensitivities ----------------------------------------------------------------

def _state_rhs(system, u, dsigma):
    """Dual vector of ``-(dsigma grad u, grad v)``."""
    mesh = system.mesh
    gu = mesh.gradient(u)
    coef = np.asarray(dsigma)[mesh.elements].mean(axis=1) * mesh.areas
    local = -np.einsum("md,mid->mi", gu, mesh.grad_basis) * coef[:, None]
    b = np.zeros(system.ndof)
    b[: system.n_nodes] = np.bincount(mesh.elements.ravel(), weights=local.ravel(),
                                      minlength=mesh.n_vertices)
    return b


def jacobian_action(system, state, dsigma, method="direct"):
    """Directional derivative ``U'(sigma) dsigma`` of the electrode voltages."""
    x, _ = system.solve(_state_rhs(system, state.u, dsigma), method=method)
    _, W = system.split(x)
    return W - W.mean()


def _fidelity_density(mesh, u, w):
    """Dual vector of ``-(phi grad u, grad w)``."""
    dens = np.sum(mesh.gradient(u) * mesh.gradient(w), axis=1) * mesh.areas / 3.0
    return -np.bincount(mesh.elements.ravel(), weights=np.repeat(dens, 3), minlength=mesh.n_vertices)


def adjoint_action(system, state, d, method="direct"):
    """Dual vector ``U'(sigma)^* d``: entries ``-int phi_i grad u . grad p_d``."""
    d = project_sum_zero(d, "adjoint data")
    x, _ = system.solve(system.rhs(d), method=method)
    p_d, _ = system.split(x)
    return _fidelity_density(system.mesh, state.u, p_d)


def sensitivity_matrix(system, states):
    """Rows ``U'(sigma)^* (e_l - 1/L)`` for every pattern, shape (n_patterns * L, n).

    For sum-zero voltage changes, ``S_i @ dsigma`` equals ``U_i'(sigma) dsigma``.
    """
    mesh = system.mesh
    L = system.L
    D = np.eye(L) - 1.0 / L
    w, _ = system.solve_many(D)
    G = mesh.grad_basis
    gw = np.einsum("mil,mid->mld", w[mesh.elements], G)            # (m, L, 2)
    gu = np.stack([mesh.gradient(s.u) for s in states], axis=1)    # (m, P, 2)
    dens = np.einsum("mpd,mld->mpl", gu, gw) * (mesh.areas / 3.0)[:, None, None]
    inc = mesh.vertex_element_incidence
    S = -(inc @ dens.reshape(mesh.n_elements, -1))                 # (n, P*L)
    return np.ascontiguousarray(S.T)


# -- surrogate --------------------------------------------------------------------

class SurrogateOperator:
    """Normal equations of the quadratic MM model at ``sigma_k``.

    ``A x = S^T S x + alpha eps K x + (alpha / eps) M[p'(sigma_k)^2] x``.
    ``rhs`` is minus the Gateaux gradient at ``sigma_k``. Entries listed in
    ``fixed`` are held at zero (bound-active nodes).
    """

    def __init__(self, mesh, sigma_k, S, dU, params):
        self.mesh = mesh
        self.sigma_k = np.asarray(sigma_k, dtype=float)
        self.S = S
        self.params = params
        a, eps, c0, c1 = params.alpha, params.eps, params.c0, params.c1
        bary, _ = DEGREE4
        zq = evaluate_p1(self.sigma_k, mesh.elements, bary)
        pq, dpq = well_factor(zq, c0, c1), well_factor_prime(zq, c0, c1)
        K = stiffness_matrix(mesh)
        self.penalty_matrix = ((a * eps) * K + (a / eps) * weighted_mass_matrix(mesh, dpq ** 2)).tocsr()
        dU = np.asarray(dU, dtype=float).ravel()
        self.rhs = (S.T @ dU - (a / eps) * load_vector(mesh, pq * dpq)
                    - (a * eps) * stiffness_action(mesh, self.sigma_k))
        # a small mass shift keeps the preconditioner invertible where p' vanishes
        tau = 1e-8 * max(a / eps * (c1 - c0) ** 2, 1e-12)
        self._shifted = (self.penalty_matrix + tau * mass_matrix(mesh)).tocsr()

    def matvec(self, x):
        return self.S.T @ (self.S @ x) + self.penalty_matrix @ x

    def solve(self, tol=1e-8, maxiter=500, fixed=None):
        n = self.rhs.size
        free = np.ones(n, dtype=bool) if fixed is None else ~np.asarray(fixed)
        idx = np.flatnonzero(free)
        out = np.zeros(n)
        if idx.size == 0:
            return out, PCGInfo(0, 0.0, True)
        Sf = self.S[:, idx]
        Pf = self.penalty_matrix[idx][:, idx]
        lu = spla.splu(self._shifted[idx][:, idx].tocsc())
        x, info = pcg(lambda v: Sf.T @ (Sf @ v) + Pf @ v, self.rhs[idx], lu.solve,
                      tol=tol, maxiter=maxiter)
        out[idx] = x
        return out, info


@dataclass(frozen=True)
class MMConfig:
    max_outer: int = 50
    step_tol: float = 1e-4        # relative to c1 - c0, sup norm
    inner_tol: float = 1e-8
    inner_maxiter: int = 500
    min_step: float = 2.0 ** -10


@dataclass
class InverseProblem:
    mesh: object
    currents: np.ndarray   # (P, L)
    data: np.ndarray       # (P, L)
    params: object

    def evaluate(self, sigma):
        """Assemble and solve at ``sigma``; returns (system, states, (J, fidelity, penalty))."""
        system = assemble(self.mesh, sigma)
        states = forward_states(system, self.currents)
        parts = objective_parts(self.mesh, system.sigma, [s.U for s in states], self.data, self.params)
        return system, states, parts

    def adjoints(self, system, states):
        return adjoint_states(system, [s.U - d for s, d in zip(states, self.data)])


def solve_surrogate(problem, system, states, config=MMConfig(), box=True):
    """Increment minimizing the MM quadratic model; returns (dsigma, PCGInfo).

    With ``box`` set, nodes on a bound whose gradient or increment points out
    of the box are frozen and the model is re-solved on the remaining nodes,
    so that the projected step is a descent direction.
    """
    p = problem.params
    S = sensitivity_matrix(system, states)
    dU = np.array([d - s.U for s, d in zip(states, problem.data)])
    op = SurrogateOperator(problem.mesh, system.sigma, S, dU, p)
    sigma = system.sigma
    lower = sigma <= p.c0
    upper = sigma >= p.c1
    fixed = None
    if box:
        # rhs is the negative gradient
        fixed = (lower & (op.rhs < 0)) | (upper & (op.rhs > 0))
    for _ in range(10):
        dsigma, info = op.solve(config.inner_tol, config.inner_maxiter, fixed)
        if not box:
            break
        blocked = ((lower & (dsigma < 0)) | (upper & (dsigma > 0))) & ~fixed
        if not blocked.any():
            break
        fixed = fixed | blocked
    if not info.converged:
        log.warning("surrogate PCG stopped at residual %.2e after %d iterations",
                    info.residual, info.iterations)
    return dsigma, info


@dataclass
class MMState:
    sigma: np.ndarray
    k: int
    objective: float
    fidelity: float
    penalty: float
    system: object = field(repr=False)
    states: list = field(repr=False)
    step: float = 0.0
    pcg: PCGInfo | None = None
    status: str = "running"   # running | converged | stalled | max_iter


def initial_state(problem, sigma0):
    sigma0 = project_box(sigma0, problem.params.c0, problem.params.c1)
    system, states, (J, fid, pen) = problem.evaluate(sigma0)
    return MMState(system.sigma, 0, J, fid, pen, system, states)


def mm_step(problem, state, config=MMConfig()):
    """One surrogate solve plus projected backtracking on the objective."""
    p = problem.params
    dsigma, info = solve_surrogate(problem, state.system, state.states, config)
    small = np.max(np.abs(dsigma), initial=0.0) < config.step_tol * (p.c1 - p.c0)
    s = 1.0
    while s >= config.min_step:
        trial = project_box(state.sigma + s * dsigma, p.c0, p.c1)
        system, states, (J, fid, pen) = problem.evaluate(trial)
        if J < state.objective:
            moved = np.max(np.abs(system.sigma - state.sigma), initial=0.0)
            status = "converged" if small or moved < config.step_tol * (p.c1 - p.c0) else "running"
            return MMState(system.sigma, state.k + 1, J, fid, pen, system, states, s, info, status)
        s *= 0.5
    status = "converged" if small else "stalled"
    return MMState(state.sigma, state.k + 1, state.objective, state.fidelity, state.penalty,
                   state.system, state.states, 0.0, info, status)


@dataclass
class MMResult:
    state: MMState
    adjoints: list
    history: list   # dict rows for the iteration log

    @property
    def sigma(self):
        return self.state.sigma


def minimize(problem, sigma0, config=MMConfig(), level=0):
    state = initial_state(problem, sigma0)
    history = [_row(level, state)]
    while state.k < config.max_outer:
        state = mm_step(problem, state, config)
        history.append(_row(level, state))
        if state.status in ("converged", "stalled"):
            break
    else:
        state.status = "max_iter"
    log.info("level %d: %s after %d MM steps, J = %.6e", level, state.status, state.k, state.objective)
    return MMResult(state, problem.adjoints(state.system, state.states), history)


def _row(level, st):
    return {
        "level": level,
        "outer_iter": st.k,
        "J": st.objective,
        "fidelity": st.fidelity,
        "penalty": st.penalty,
        "step": st.step,
        "pcg_iters": st.pcg.iterations if st.pcg else 0,
        "pcg_residual": st.pcg.residual if st.pcg else 0.0,
        "status": st.status,
    }


def warm_start(old_mesh, sigma, new_mesh):
    """Interpolate a conductivity to a refined mesh (exact for nested meshes)."""
    if not is_nested(old_mesh, new_mesh):
        raise NotNestedError("warm start needs a refinement of the old mesh")
    return prolong(sigma, new_mesh)
