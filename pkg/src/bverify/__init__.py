"""Numerical certification of mean value identities and Liouville criteria
for Beltrami solutions of the stationary Euler equations."""

from bverify.fields import (
    AnalyticField,
    CatalogError,
    DecayClass,
    Decomposition,
    beltrami_residuals,
    corrupt,
    curl_fd,
    decompose,
    divergence_fd,
    evaluate,
    get_field,
)
from bverify.quadrature import (
    ConvergenceError,
    QuadConfig,
    RadialRule,
    SphereRule,
    ball_integral,
    shell_weighted_integral,
    sphere_integral,
    sup_on_sphere,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticField",
    "CatalogError",
    "ConvergenceError",
    "DecayClass",
    "Decomposition",
    "QuadConfig",
    "RadialRule",
    "SphereRule",
    "ball_integral",
    "beltrami_residuals",
    "corrupt",
    "curl_fd",
    "decompose",
    "divergence_fd",
    "evaluate",
    "get_field",
    "shell_weighted_integral",
    "sphere_integral",
    "sup_on_sphere",
]
