"""Simulation of Bacon-Shor subsystem codes under asymmetric Pauli noise."""
from .code import SubsystemCode, build_code
from .noise import NoiseModel

__version__ = "0.1.0"

__all__ = ["NoiseModel", "SubsystemCode", "build_code", "__version__"]
