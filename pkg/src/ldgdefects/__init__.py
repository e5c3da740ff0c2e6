"""Finite-difference Landau-de Gennes Q-tensor solver with defect analysis."""
from . import defect, field, potential, qtensor, scenario, solver, verify
from .errors import LdgError, SolverError
from .field import Domain, QField, energy, mu_measure
from .potential import MaterialParams
from .solver import SolveConfig, SolveReport, initialize, relax, relax_axisym

__all__ = [
    "Domain", "LdgError", "MaterialParams", "QField", "SolveConfig", "SolveReport", "SolverError",
    "defect", "energy", "field", "initialize", "mu_measure", "potential", "qtensor", "relax",
    "relax_axisym", "scenario", "solver", "verify",
]
__version__ = "0.1.0"
