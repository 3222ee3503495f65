"""Schur-stable projection of state matrices and stability-constrained
identification of linear state-space models."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError, DimensionError, DivergenceError, DomainError, PreconditionError,
    SchurSSError, SingularityError, StructureError,
)
from .metrics import MetricReport, assignment_min, msvr, nmse, nsfe, nssr  # noqa: E402
from .orthogonal import (  # noqa: E402
    OrthoProjection, nearest_orthogonal, nearest_orthogonal_eig, nearest_orthogonal_iter,
    nearest_orthogonal_svd,
)
from .schur import SchurForm, Spectrum, eigenvalues, schur_decompose, spectrum_of  # noqa: E402
from .stable import (  # noqa: E402
    candidate_set, critical_points, project_block, project_quasi_triangular,
    project_scalar, project_state_matrix,
)
from .sysid import StateSpaceModel, TrainConfig, TrainRun, simulate, train  # noqa: E402

__all__ = [
    "__version__", "SchurSSError", "DimensionError", "PreconditionError", "StructureError",
    "DomainError", "SingularityError", "ConvergenceError", "DivergenceError",
    "MetricReport", "assignment_min", "msvr", "nmse", "nsfe", "nssr",
    "OrthoProjection", "nearest_orthogonal", "nearest_orthogonal_svd",
    "nearest_orthogonal_eig", "nearest_orthogonal_iter",
    "SchurForm", "Spectrum", "eigenvalues", "schur_decompose", "spectrum_of",
    "candidate_set", "critical_points", "project_block", "project_quasi_triangular",
    "project_scalar", "project_state_matrix",
    "StateSpaceModel", "TrainConfig", "TrainRun", "simulate", "train",
]
