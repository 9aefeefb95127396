"""Symmetric quadrature rules on triangles in barycentric coordinates.

Weights are normalised to sum to one, so an element integral is
``area * sum(w * f(points))``.
"""
import numpy as np


def _orbit3(a, w):
    b = 1.0 - 2.0 * a
    pts = [(a, a, b), (a, b, a), (b, a, a)]
    return pts, [w] * 3


def _orbit6(a, b, w):
    c = 1.0 - a - b
    pts = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
    return pts, [w] * 6


def _rule(*orbits):
    pts, wts = [], []
    for p, w in orbits:
        pts += p
        wts += w
    return np.array(pts), np.array(wts)


# Dunavant (1985); 6 points, exact to degree 4.
DEGREE4 = _rule(
    _orbit3(0.445948490915965, 0.223381589678011),
    _orbit3(0.091576213509771, 0.109951743655322),
)

# Dunavant (1985); 12 points, exact to degree 6.
DEGREE6 = _rule(
    _orbit3(0.249286745170910, 0.116786275726379),
    _orbit3(0.063089014491502, 0.050844906370207),
    _orbit6(0.053145049844817, 0.310352451033784, 0.082851075618374),
)

# One-point centroid rule, exact for linear integrands.
CENTROID = (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0]))


def gauss_legendre_segment(n=2):
    """Gauss points on [0, 1] as (t, weights) with weights summing to one."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def evaluate_p1(values, elements, bary):
    """Values of a nodal P1 field at barycentric points, shape (n_elements, n_points)."""
    v = np.asarray(values)[elements]
    # written relative to vertex 0 so that constants are reproduced exactly
    return v[:, :1] + (v[:, 1:] - v[:, :1]) @ bary[:, 1:].T
