"""Physical coefficients: mass density rho, 2x2 SPD stiffness tensor T,
and boundary admittance/impedance fields.

Coefficients are plain callables evaluated pointwise at quadrature nodes;
``rho(x, y)`` maps coordinate arrays to an array, ``T(x, y)`` to an array of
shape (..., 2, 2).  Declared bounds are carried along for sanity checks.
"""

import numpy as np


class MaterialError(ValueError):
    """Singular or indefinite material tensor."""


class MaterialField:
    def __init__(self, rho, T, rho_bounds, T_bounds, name="custom"):
        self.rho = rho
        self.T = T
        self.rho_bounds = tuple(rho_bounds)
        self.T_bounds = tuple(T_bounds)
        self.name = name
        if self.rho_bounds[0] <= 0.0 or self.T_bounds[0] <= 0.0:
            raise MaterialError("lower material bounds must be positive")

    def T_inv(self, x, y):
        return invert_T(self.T(x, y))


def invert_T(T):
    """Exact 2x2 inverse, batched over leading axes."""
    T = np.asarray(T, dtype=float)
    a = T[..., 0, 0]
    b = T[..., 0, 1]
    c = T[..., 1, 0]
    d = T[..., 1, 1]
    det = a * d - b * c
    if np.any(det <= 0.0):
        raise MaterialError("material tensor is singular or indefinite")
    inv = np.empty_like(T)
    inv[..., 0, 0] = d
    inv[..., 0, 1] = -b
    inv[..., 1, 0] = -c
    inv[..., 1, 1] = a
    return inv / det[..., None, None]


def _const_rho(value):
    def rho(x, y):
        return np.full(np.broadcast(x, y).shape, float(value))
    return rho


def _const_T(matrix):
    matrix = np.asarray(matrix, dtype=float)

    def T(x, y):
        shape = np.broadcast(x, y).shape
        out = np.empty(shape + (2, 2))
        out[...] = matrix
        return out
    return T


def unit_material():
    """rho = 1, T = identity."""
    return MaterialField(_const_rho(1.0), _const_T(np.eye(2)),
                         (1.0, 1.0), (1.0, 1.0), name="unit")


def aniso_const_material():
    """Constant anisotropic tensor [[5, 2], [2, 3]] with rho = 1."""
    T = np.array([[5.0, 2.0], [2.0, 3.0]])
    eigs = np.linalg.eigvalsh(T)
    return MaterialField(_const_rho(1.0), _const_T(T),
                         (1.0, 1.0), (eigs[0], eigs[1]), name="aniso-const")


def disk_hetero_material():
    """Smooth heterogeneous anisotropic coefficients on the unit disk:
    off-diagonal 0.2 (1+x)(1-x) coupling and rho = 2 + 0.25 (1+x)(1-x)."""
    def rho(x, y):
        x = np.asarray(x, dtype=float)
        return 2.0 + 0.25 * (1.0 + x) * (1.0 - x)

    def T(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        off = 0.2 * (1.0 + x) * (1.0 - x) * np.ones(shape)
        out = np.empty(shape + (2, 2))
        out[..., 0, 0] = 2.0
        out[..., 0, 1] = off
        out[..., 1, 0] = off
        out[..., 1, 1] = 1.0
        return out

    # eigenvalues of [[2, s], [s, 1]] with |s| <= 0.2: within [0.96, 2.04]
    return MaterialField(rho, T, (2.0, 2.25), (0.95, 2.05), name="disk-hetero")


NAMED_MATERIALS = {
    "unit": unit_material,
    "aniso-const": aniso_const_material,
    "disk-hetero": disk_hetero_material,
}


def named_material(name):
    if name not in NAMED_MATERIALS:
        raise ValueError("unknown material %r (available: %s)"
                         % (name, ", ".join(sorted(NAMED_MATERIALS))))
    return NAMED_MATERIALS[name]()
