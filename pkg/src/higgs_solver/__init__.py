"""
Higgs de Sitter Solver

Fourth-order finite differences and classical RK4 for the semilinear
Klein-Gordon equation with Higgs potential on an expanding background,
with bubble, blow-up and Duffing-limit diagnostics.
"""

__version__ = "1.0.0"
__author__ = "Higgs Solver"
__description__ = "Solver and diagnostics for the Higgs equation in de Sitter spacetime"

from .cli import main  # noqa: E402

__all__ = ["main"]
