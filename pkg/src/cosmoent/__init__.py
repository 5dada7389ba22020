"""Gaussian entanglement of a bosonic field in an expanding 1+1 universe."""

__version__ = "0.1.0"

from .cosmology import (  # noqa: E402
    BogoliubovData,
    ExpansionModel,
    InitialState,
    bogoliubov_for,
    out_state,
)
from .entanglement import EntanglementReport, full_report, report_for  # noqa: E402
from .phasespace import CovarianceMatrix, ModePartition, SymplecticTransform  # noqa: E402

__all__ = [
    "__version__",
    "BogoliubovData",
    "CovarianceMatrix",
    "EntanglementReport",
    "ExpansionModel",
    "InitialState",
    "ModePartition",
    "SymplecticTransform",
    "bogoliubov_for",
    "full_report",
    "out_state",
    "report_for",
]
