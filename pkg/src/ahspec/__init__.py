"""First eigenvalues of the p-Laplacian, clamped polyharmonic and buckling
problems on rotationally symmetric asymptotically hyperbolic model manifolds,
together with numerical checks of the associated sharp bounds and boundary
expansions."""

__version__ = "0.1.0"

from .errors import AhspecError  # noqa: E402
from .geometry import RadialMetric, from_key, hyperbolic, hyperbolic_normal_form, perturbed_normal_form  # noqa: E402
from .plap import plap_ball_eigenvalue, plap_limit  # noqa: E402
from .polyharm import buckling_eigenvalue, clamped_eigenvalue, polyharm_limit  # noqa: E402

__all__ = [
    "AhspecError",
    "RadialMetric",
    "buckling_eigenvalue",
    "clamped_eigenvalue",
    "from_key",
    "hyperbolic",
    "hyperbolic_normal_form",
    "perturbed_normal_form",
    "plap_ball_eigenvalue",
    "plap_limit",
    "polyharm_limit",
]
