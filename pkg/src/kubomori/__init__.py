"""Scalar curvature of the Kubo-Mori metric on real positive definite matrices
and on the trace-one slice (density matrices), by closed form and by oracle."""

from .closedform import CurvatureReport, scal1_closed, scal1_formula
from .conjlab import ScanReport, majorizes, sample_spectrum, scan
from .curvature import CurvatureValue, Method, scal_ambient, scal_submanifold
from .matcore import ConvergenceError, DomainError, PosDefMatrix, Spectrum, SymMatrix
from .metric import MetricContext
from .oracle import OracleConfig, scal1_oracle

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "CurvatureReport", "CurvatureValue", "DomainError", "Method",
    "MetricContext", "OracleConfig", "PosDefMatrix", "ScanReport", "Spectrum", "SymMatrix",
    "majorizes", "sample_spectrum", "scal1_closed", "scal1_formula", "scal1_oracle",
    "scal_ambient", "scal_submanifold", "scan",
]
