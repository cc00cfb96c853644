"""Numerical laboratory for wave breaking in nonlocal dispersive equations."""

from .errors import (CorruptedState, InsufficientData, InvalidArgument, NoNegativeSlope, OutOfRange,
                     QuadratureFailure, StepFailure, UnderResolved, WavebreakError)
from .grid import Field, PeriodicGrid, Trajectory
from .symbols import DispersionSymbol, SymbolKind, evaluate, multiplier_array

__version__ = "0.1.0"
