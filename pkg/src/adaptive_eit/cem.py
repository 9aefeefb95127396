"""Discrete complete electrode model on ``V_T x R^L_0``.

The sum-zero constraint on electrode voltages is imposed through an
orthonormal basis of the sum-zero subspace, which keeps the reduced system
symmetric positive definite.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, InvalidDataError, InvalidImpedanceError
from .fem import element_means, mass_matrix, stiffness_matrix
from .linalg import PCGInfo, pcg

log = logging.getLogger(__name__)

SUM_TOL = 1e-10


def sum_zero_basis(L):
    """Orthonormal (Helmert) basis of ``{V in R^L : sum V = 0}``, shape (L, L-1)."""
    B = np.zeros((L, max(L - 1, 0)))
    for k in range(1, L):
        B[:k, k - 1] = 1.0
        B[k, k - 1] = -k
        B[:, k - 1] /= np.sqrt(k * (k + 1))
    return B


def project_sum_zero(V, what="vector"):
    """Remove the mean of ``V``; raise if it was not already (nearly) sum-zero."""
    V = np.asarray(V, dtype=float)
    scale = np.max(np.abs(V)) if V.size else 0.0
    if abs(V.sum()) > SUM_TOL * max(scale, 1e-300) * max(V.size, 1):
        raise InvalidDataError(f"{what} must sum to zero (sum = {V.sum():.3e})")
    return V - V.mean() if V.size else V


@dataclass(frozen=True)
class CurrentPattern:
    I: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "I", project_sum_zero(self.I, "current pattern"))


@dataclass(frozen=True)
class StateSolution:
    u: np.ndarray
    U: np.ndarray
    sigma: np.ndarray = field(repr=False)
    info: PCGInfo | None = None


@dataclass(frozen=True)
class AdjointSolution:
    p: np.ndarray
    P: np.ndarray
    sigma: np.ndarray = field(repr=False)
    info: PCGInfo | None = None


@dataclass(frozen=True, eq=False)
class CemSystem:
    mesh: object
    sigma: np.ndarray
    impedances: np.ndarray
    stiffness: sp.csr_matrix     # (sigma grad u, grad v)
    electrode_mass: sp.csr_matrix  # sum_l z_l^-1 (u, v)_{e_l}
    coupling: np.ndarray         # (n, L): -z_l^-1 (1, v)_{e_l}
    voltage_block: np.ndarray    # diag(|e_l| / z_l)
    basis: np.ndarray            # (L, L-1)
    matrix: sp.csr_matrix        # reduced SPD operator

    @property
    def n_nodes(self):
        return self.mesh.n_vertices

    @property
    def L(self):
        return len(self.impedances)

    @property
    def ndof(self):
        return self.matrix.shape[0]

    def rhs(self, data):
        """Right-hand side for ``a(sigma, (u, U), (v, V)) = <data, V>``."""
        b = np.zeros(self.ndof)
        b[self.n_nodes:] = self.basis.T @ data
        return b

    def split(self, x):
        n = self.n_nodes
        return x[:n], self.basis @ x[n:]

    def pack(self, u, U):
        return np.concatenate([u, self.basis.T @ np.asarray(U, dtype=float)])

    def full_matrix(self):
        """The unreduced operator on ``(u, U) in R^n x R^L``."""
        C = sp.csr_matrix(self.coupling)
        A = self.stiffness + self.electrode_mass
        return sp.bmat([[A, C], [C.T, sp.diags(self.voltage_block)]]).tocsr()

    @cached_property
    def _lu(self):
        return spla.splu(self.matrix.tocsc())

    @cached_property
    def _jacobi(self):
        return 1.0 / self.matrix.diagonal()

    def solve(self, b, method="cg", tol=1e-10, maxiter=None):
        if method == "direct":
            x = self._lu.solve(b)
            res = np.linalg.norm(self.matrix @ x - b) / max(np.linalg.norm(b), 1e-300)
            return x, PCGInfo(0, float(res) if np.any(b) else 0.0, True)
        if method != "cg":
            raise ValueError(f"unknown solver method {method!r}")
        d = self._jacobi
        x, info = pcg(lambda v: self.matrix @ v, b, lambda r: d * r, tol=tol,
                      maxiter=maxiter or 10 * self.ndof)
        if not info.converged:
            raise ConvergenceError(
                f"CEM solve did not converge: residual {info.residual:.3e} after {info.iterations} iterations",
                residual=info.residual, iterations=info.iterations,
            )
        log.debug("CEM PCG: %d iterations, residual %.2e", info.iterations, info.residual)
        return x, info

    def solve_many(self, data):
        """Direct solve for several data vectors at once; ``data`` is (L, k)."""
        data = np.atleast_2d(np.asarray(data, dtype=float).T).T
        B = np.zeros((self.ndof, data.shape[1]))
        B[self.n_nodes:] = self.basis.T @ data
        X = self._lu.solve(B)
        return X[: self.n_nodes], self.basis @ X[self.n_nodes:]


def assemble(mesh, sigma, impedances=None):
    """Assemble the CEM operator for a nodal P1 conductivity ``sigma``."""
    sigma = np.array(sigma, dtype=float)
    if sigma.shape != (mesh.n_vertices,):
        raise ValueError("sigma must hold one value per mesh vertex")
    z = np.asarray(mesh.layout.impedances if impedances is None else impedances, dtype=float)
    L = len(z)
    if L != mesh.layout.L:
        raise InvalidImpedanceError("need one contact impedance per electrode")
    if L == 0:
        raise InvalidImpedanceError("the electrode model needs at least one electrode")
    if np.any(z <= 0):
        raise InvalidImpedanceError("contact impedances must be positive")
    n = mesh.n_vertices
    # sigma is linear on each element, grad u . grad v constant: the exact
    # element integral uses the mean of the nodal values
    K = stiffness_matrix(mesh, element_means(mesh, sigma))

    rows, cols, vals = [], [], []
    coupling = np.zeros((n, L))
    lengths = np.zeros(L)
    for l in range(L):
        faces = mesh.electrode_faces(l)
        fv = mesh.face_vertices[faces]
        h = mesh.face_lengths[faces]
        lengths[l] = h.sum()
        w = h / z[l]
        for a in range(2):
            for b in range(2):
                rows.append(fv[:, a])
                cols.append(fv[:, b])
                vals.append(w * (2.0 if a == b else 1.0) / 6.0)
            np.add.at(coupling[:, l], fv[:, a], -0.5 * w)
    M_e = sp.coo_matrix(
        (np.concatenate(vals) if vals else [], (np.concatenate(rows) if rows else [],
                                                 np.concatenate(cols) if cols else [])),
        shape=(n, n),
    ).tocsr()
    D = lengths / z
    B = sum_zero_basis(L)
    CB = sp.csr_matrix(coupling @ B)
    matrix = sp.bmat([[K + M_e, CB], [CB.T, sp.csr_matrix(B.T @ np.diag(D) @ B)]]).tocsr()
    sigma.flags.writeable = False
    return CemSystem(mesh, sigma, z, K, M_e, coupling, D, B, matrix)


def _solve(system, data, method, tol, what):
    data = project_sum_zero(data, what)
    if data.shape != (system.L,):
        raise InvalidDataError(f"{what} must have one entry per electrode")
    x, info = system.solve(system.rhs(data), method=method, tol=tol)
    w, W = system.split(x)
    return w, W - W.mean(), info


def solve_forward(system, I, tol=1e-10, method="cg"):
    """State ``(u, U)`` for the current pattern ``I``."""
    if isinstance(I, CurrentPattern):
        I = I.I
    u, U, info = _solve(system, I, method, tol, "current pattern")
    return StateSolution(u, U, system.sigma, info)


def solve_adjoint(system, residual, tol=1e-10, method="cg"):
    """Adjoint ``(p, P)`` with voltage data ``residual = U(sigma) - U_delta``."""
    p, P, info = _solve(system, residual, method, tol, "adjoint data")
    return AdjointSolution(p, P, system.sigma, info)


def forward_states(system, currents):
    """Direct batched forward solves for several patterns."""
    I = np.array([project_sum_zero(c.I if isinstance(c, CurrentPattern) else c, "current pattern")
                  for c in currents]).T
    u, U = system.solve_many(I)
    return [StateSolution(u[:, k], U[:, k] - U[:, k].mean(), system.sigma) for k in range(I.shape[1])]


def adjoint_states(system, residuals):
    R = np.array([project_sum_zero(r, "adjoint data") for r in residuals]).T
    p, P = system.solve_many(R)
    return [AdjointSolution(p[:, k], P[:, k] - P[:, k].mean(), system.sigma) for k in range(R.shape[1])]


def h_norm(mesh, w, W):
    """``(||w||_{H^1}^2 + ||W||^2)^(1/2)``."""
    K = stiffness_matrix(mesh)
    M = mass_matrix(mesh)
    return float(np.sqrt(w @ (K @ w) + w @ (M @ w) + np.dot(W, W)))


def stability_check(mesh, state, adjoint, I, U_delta):
    """Both sides of the discrete stability bound; ``ratio`` = lhs / data norm."""
    lhs = h_norm(mesh, state.u, state.U) + h_norm(mesh, adjoint.p, adjoint.P)
    rhs = float(np.linalg.norm(I) + np.linalg.norm(U_delta))
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else 0.0}
