"""Gauss quadrature on the reference triangle and the unit edge.

Triangle rules up to degree 2 are the classical symmetric rules; higher
degrees use collapsed tensor-product Gauss points (Duffy map), which keeps
the weights positive at every degree.  Edge rules are plain Gauss-Legendre
mapped to [0, 1].
"""

from dataclasses import dataclass

import numpy as np

MAX_TRIANGLE_DEGREE = 12
MAX_EDGE_DEGREE = 20


@dataclass(frozen=True)
class QuadratureRule:
    """Points, weights and the polynomial degree integrated exactly."""
    points: np.ndarray
    weights: np.ndarray
    exact_degree: int


def triangle_rule(degree):
    """Rule on the reference triangle {x, y >= 0, x + y <= 1}."""
    if degree < 1 or degree > MAX_TRIANGLE_DEGREE:
        raise ValueError("unsupported triangle degree %r" % (degree,))
    if degree == 1:
        pts = np.array([[1.0 / 3.0, 1.0 / 3.0]])
        wts = np.array([0.5])
    elif degree == 2:
        pts = np.array([[1.0 / 6.0, 1.0 / 6.0],
                        [2.0 / 3.0, 1.0 / 6.0],
                        [1.0 / 6.0, 2.0 / 3.0]])
        wts = np.full(3, 1.0 / 6.0)
    else:
        # Duffy map (u, v) -> (u, v (1 - u)) has Jacobian (1 - u), which adds
        # one degree in u; n points are exact to 2n-1 per direction.
        npt = (degree + 3) // 2
        x, wx = np.polynomial.legendre.leggauss(npt)
        u = 0.5 * (x + 1.0)
        wu = 0.5 * wx
        uu, vv = np.meshgrid(u, u, indexing="ij")
        ww = np.outer(wu, wu) * (1.0 - uu)
        pts = np.column_stack([uu.ravel(), (vv * (1.0 - uu)).ravel()])
        wts = ww.ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, degree)


def edge_rule(degree):
    """Gauss-Legendre rule on [0, 1]."""
    if degree < 1 or degree > MAX_EDGE_DEGREE:
        raise ValueError("unsupported edge degree %r" % (degree,))
    npt = (degree + 2) // 2
    x, w = np.polynomial.legendre.leggauss(npt)
    pts = 0.5 * (x + 1.0)
    wts = 0.5 * w
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, degree)
