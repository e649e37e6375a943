"""riccilab: numerical workbench for Ricci solitons on coordinate charts."""

from .catalog import (
    SolitonInstance,
    as_one_form,
    catalog_entries,
    catalog_get,
    catalog_names,
    soliton_residual,
)
from .geometry import (
    Box,
    ChartMetric,
    CurvatureBundle,
    TensorValue,
    christoffel,
    covariant_derivative,
    curvature,
    divergence_ric,
    get_metric,
    hessian,
    laplacian_scalar,
    laplacian_tensor2,
    metric_names,
    register_metric,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "ChartMetric",
    "CurvatureBundle",
    "SolitonInstance",
    "TensorValue",
    "as_one_form",
    "catalog_entries",
    "catalog_get",
    "catalog_names",
    "christoffel",
    "covariant_derivative",
    "curvature",
    "divergence_ric",
    "get_metric",
    "hessian",
    "laplacian_scalar",
    "laplacian_tensor2",
    "metric_names",
    "register_metric",
    "soliton_residual",
    "__version__",
]
