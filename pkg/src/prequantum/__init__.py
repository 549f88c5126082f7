"""Prequantum groupoid engine: action integrals, period groups and groupoid algebra on model spaces."""
from __future__ import annotations

from .errors import PrequantumError
from .periods import BasisConstants, ExactReal, PeriodGroup, TorusElement, generate

__all__ = ["BasisConstants", "ExactReal", "PeriodGroup", "PrequantumError", "TorusElement", "generate"]
__version__ = "0.1.0"
