"""Numerical toolkit for hypoelliptic evolution operators on Lie groups."""
from ._backend import backend_name
from .fields import OperatorModel, VectorField, bracket, drift, hormander_rank, minimal_hormander_order
from .flows import ControlSchedule, Path, exp_map, integrate_admissible
from .models import get_model, list_models

__version__ = "0.1.0"

__all__ = [
    "ControlSchedule", "OperatorModel", "Path", "VectorField", "backend_name", "bracket", "drift", "exp_map",
    "get_model", "hormander_rank", "integrate_admissible", "list_models", "minimal_hormander_order",
]
