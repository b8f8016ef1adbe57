"""Shallow water equations on the cubed sphere.

A modal discontinuous Galerkin solver whose interface states come from a
genuinely multidirectional local evolution operator of the locally
linearized equations, with a Rusanov baseline for comparison runs.
"""

__version__ = "0.1.0"
