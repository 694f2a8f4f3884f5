"""Executable test problems: manufactured solutions on the square and
L-shape, a constant-anisotropy case, and the driven/damped disk.

Field callables are vectorized over coordinate arrays; controls take the
outward normal of the edge they are evaluated on, so corner jumps of the
normal stress are handled per edge.  Exact Hamiltonians use closed-form 1D
antiderivatives (no mesh quadrature involved).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import materials, mesh as meshmod


@dataclass
class Scenario:
    name: str
    build_mesh: Callable
    material: materials.MaterialField
    causality: str
    horizon: float
    dt: float
    alpha_q: Optional[Callable] = None      # (t, x, y) -> (n, 2) strain
    alpha_p: Optional[Callable] = None      # (t, x, y) -> (n,) momentum
    control: Optional[Callable] = None      # (t, x, y, nx, ny) -> (n,)
    admittance: Optional[Callable] = None   # (t, x, y) -> (n,)
    exact_H: Optional[Callable] = None

    @property
    def has_exact(self):
        return self.alpha_q is not None

    def e_q(self, t, x, y):
        """Stress co-energy T alpha_q."""
        aq = np.asarray(self.alpha_q(t, x, y), dtype=float)
        T = self.material.T(np.asarray(x, dtype=float),
                            np.asarray(y, dtype=float))
        return np.einsum("...ij,...j->...i", T, aq)

    def e_p(self, t, x, y):
        """Velocity co-energy alpha_p / rho."""
        return (np.asarray(self.alpha_p(t, x, y), dtype=float)
                / self.material.rho(np.asarray(x, dtype=float),
                                    np.asarray(y, dtype=float)))

    def normal_stress(self, t, x, y, nx, ny):
        """(T alpha_q) . n, the force-control trace."""
        eq = self.e_q(t, x, y)
        return eq[..., 0] * nx + eq[..., 1] * ny

    def velocity_control(self, t, x, y, nx, ny):
        """Velocity trace, the input under the switched causality."""
        return self.e_p(t, x, y)


def _f(t):
    return 2.0 * np.sin(np.sqrt(2.0) * t) + 3.0 * np.cos(np.sqrt(2.0) * t)


def _fprime(t):
    r = np.sqrt(2.0)
    return 2.0 * r * np.cos(r * t) - 3.0 * r * np.sin(r * t)


def _square_alpha_q(t, x, y):
    f = _f(t)
    return np.stack([-f * np.sin(x) * np.sin(y),
                     f * np.cos(x) * np.cos(y)], axis=-1)


def _square_alpha_p(t, x, y):
    return _fprime(t) * np.cos(x) * np.sin(y)


def _square_control(t, x, y, nx, ny):
    """Side-wise normal stress on the unit square: -f cos x on y=0,
    -f sin(1) sin y on x=1, f cos x cos(1) on y=1, and 0 on x=0."""
    f = _f(t)
    out = np.zeros_like(np.asarray(x, dtype=float))
    bottom = ny < -0.5
    right = nx > 0.5
    top = ny > 0.5
    out = np.where(bottom, -f * np.cos(x), out)
    out = np.where(right, -f * np.sin(1.0) * np.sin(y), out)
    out = np.where(top, f * np.cos(x) * np.cos(1.0), out)
    return out


def _sin2_integral(a, b):
    return 0.5 * ((b - np.sin(b) * np.cos(b)) - (a - np.sin(a) * np.cos(a)))


def _cos2_integral(a, b):
    return 0.5 * ((b + np.sin(b) * np.cos(b)) - (a + np.sin(a) * np.cos(a)))


def _square_exact_H(t):
    s = np.sin(1.0) * np.cos(1.0)
    return (0.125 * _fprime(t) ** 2 * (1.0 - s * s)
            + 0.125 * _f(t) ** 2 * ((1.0 + s) ** 2 + (1.0 - s) ** 2))


def scenario_square():
    """Isotropic manufactured solution on the unit square."""
    return Scenario(
        name="square",
        build_mesh=meshmod.build_unit_square,
        material=materials.unit_material(),
        causality="neumann",
        horizon=0.5,
        dt=1e-3,
        alpha_q=_square_alpha_q,
        alpha_p=_square_alpha_p,
        control=_square_control,
        exact_H=_square_exact_H,
    )


def _lshape_exact_H(t):
    # separable trig integrals over [0,1]^2 minus [1/2,1]^2
    s01, c01 = _sin2_integral(0.0, 1.0), _cos2_integral(0.0, 1.0)
    s51, c51 = _sin2_integral(0.5, 1.0), _cos2_integral(0.5, 1.0)
    i_strain = (s01 * s01 + c01 * c01) - (s51 * s51 + c51 * c51)
    i_momentum = c01 * s01 - c51 * s51
    return 0.5 * (_f(t) ** 2 * i_strain + _fprime(t) ** 2 * i_momentum)


def scenario_lshape():
    """Same fields restricted to the non-convex L-shaped domain; the control
    is the normal-stress trace on every boundary segment, including the two
    re-entrant sides."""
    sc = Scenario(
        name="lshape",
        build_mesh=meshmod.build_lshape,
        material=materials.unit_material(),
        causality="neumann",
        horizon=0.5,
        dt=1e-3,
        alpha_q=_square_alpha_q,
        alpha_p=_square_alpha_p,
        exact_H=_lshape_exact_H,
    )
    sc.control = sc.normal_stress
    return sc


def _aniso_alpha_q(t, x, y):
    s = np.sin(3.0 * t - x + 2.0 * y)
    return np.stack([-s, 2.0 * s], axis=-1)


def _aniso_alpha_p(t, x, y):
    return 3.0 * np.sin(3.0 * t - x + 2.0 * y)


def _aniso_exact_H(t):
    # H = 9 int int sin^2(3t - x + 2y) over the unit square, closed form
    ax = (1.0 - np.exp(-2.0j)) / 2.0j          # int_0^1 e^{-2ix} dx
    ay = (np.exp(4.0j) - 1.0) / 4.0j           # int_0^1 e^{4iy} dy
    osc = np.real(np.exp(6.0j * t) * ax * ay)
    return 9.0 * (0.5 - 0.5 * osc)


def scenario_aniso():
    """Constant anisotropic tensor on the unit square with a travelling-wave
    solution; exact stress is (-1, 4) sin(3t - x + 2y)."""
    sc = Scenario(
        name="aniso",
        build_mesh=meshmod.build_unit_square,
        material=materials.aniso_const_material(),
        causality="neumann",
        horizon=0.5,
        dt=1e-3,
        alpha_q=_aniso_alpha_q,
        alpha_p=_aniso_alpha_p,
        exact_H=_aniso_exact_H,
    )
    sc.control = sc.normal_stress
    return sc


def _disk_control(t, x, y, nx, ny):
    x = np.asarray(x, dtype=float)
    if t < 1.0:
        return 5.0 * x * np.sin(t) * np.sin(1.0 - t)
    return np.zeros_like(x)


def _disk_admittance(t, x, y):
    x = np.asarray(x, dtype=float)
    if t > 1.5:
        return 2.5 * x * np.sin(t) * np.sin((t - 1.5) / 1.5)
    return np.zeros_like(x)


def scenario_damped_disk():
    """Heterogeneous anisotropic disk, driven for t < 1 and damped through
    the boundary for t > 1.5; no exact solution, the energy ledger is the
    quantity of interest.  The admittance profile is taken verbatim and is
    sign-indefinite across the boundary; the ledger identity holds
    regardless."""
    return Scenario(
        name="damped-disk",
        build_mesh=meshmod.build_disk,
        material=materials.disk_hetero_material(),
        causality="neumann",
        horizon=3.0,
        dt=1e-3,
        control=_disk_control,
        admittance=_disk_admittance,
    )


SCENARIOS = {
    "square": scenario_square,
    "lshape": scenario_lshape,
    "aniso": scenario_aniso,
    "damped-disk": scenario_damped_disk,
}


def get_scenario(name):
    if name not in SCENARIOS:
        raise ValueError("unknown scenario %r (available: %s)"
                         % (name, ", ".join(sorted(SCENARIOS))))
    return SCENARIOS[name]()
