"""Radial solutions of stationary nonlinear Schrodinger equations with a prescribed singularity at the origin.

Modules: specfun (Bessel functions and resolvent kernels), problem (problem
descriptions and hypothesis checks), grid (radial meshes and quadrature),
approx (the approximate singular solution), functional (the correction
functional and its landscape constants), solver (constrained minimization),
greens (resolvent solves and regularity), decay (tail rates) and cli.
"""

__version__ = "0.1.0"
