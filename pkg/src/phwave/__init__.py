"""Structure-preserving mixed finite elements for the boundary-controlled
2D wave equation: meshes, elements, assembly, symplectic time stepping and
a convergence/energy reporting harness."""

__version__ = "0.1.0"
