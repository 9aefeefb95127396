"""Preconditioned conjugate gradients with iteration statistics."""
from dataclasses import dataclass

import numpy as np


@dataclass
class PCGInfo:
    iterations: int
    residual: float  # relative to the right-hand side norm
    converged: bool


def pcg(apply_A, b, apply_M=None, tol=1e-10, maxiter=None, x0=None):
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    ``apply_A`` and ``apply_M`` (the preconditioner inverse) are callables.
    Stops when ``||r|| <= tol * ||b||``. On stagnation the iterate with the
    smallest residual is returned and ``info.converged`` is False.
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    if maxiter is None:
        maxiter = 10 * n
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros_like(b), PCGInfo(0, 0.0, True)
    r = b - apply_A(x) if x0 is not None else b.copy()
    z = r if apply_M is None else apply_M(r)
    d = z.copy()
    rz = r @ z
    best_x, best_res = x.copy(), np.linalg.norm(r) / bnorm
    k = 0
    while best_res > tol and k < maxiter:
        Ad = apply_A(d)
        dAd = d @ Ad
        if dAd <= 0:
            break
        alpha = rz / dAd
        x += alpha * d
        r -= alpha * Ad
        k += 1
        res = np.linalg.norm(r) / bnorm
        if res < best_res:
            best_res = res
            best_x = x.copy()
        z = r if apply_M is None else apply_M(r)
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    return best_x, PCGInfo(k, float(best_res), bool(best_res <= tol))
