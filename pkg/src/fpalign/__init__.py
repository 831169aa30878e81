"""Simulation and diagnostics toolkit for kinetic alignment dynamics.

Solvers for the Fokker-Planck-Alignment equation (plain and penalized), its
noisy particle counterpart, and the isothermal Euler-Alignment closure,
plus the entropy / Fisher-information diagnostics that verify their exact
identities and decay properties.
"""

from ._backend import backend_name

__all__ = ["backend_name"]
__version__ = "0.1.0"
