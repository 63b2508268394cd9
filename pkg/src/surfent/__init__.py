"""Entropy estimators for smooth surface diffeomorphisms."""

from .dynamics import (Domain, DomainEscapeError, SurfaceSystem, TangentPoint,
                       cocycle_jacobian, lambda_plus_series, log_norm_table, operator_norm)
from .series import GrowthSeries
from .zoo import builtin_systems, make_system

__all__ = [
    "Domain", "DomainEscapeError", "SurfaceSystem", "TangentPoint", "GrowthSeries",
    "cocycle_jacobian", "lambda_plus_series", "log_norm_table", "operator_norm",
    "builtin_systems", "make_system",
]
