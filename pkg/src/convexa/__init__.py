"""Numerical toolkit for asymptotic convex geometry.

Convex bodies are given by oracles (support function and gauge); the
package estimates mean norms, mean widths, volume radii, volumetric
profiles and covering numbers, builds L_q-centroid bodies of log-concave
measures, evaluates explicit bound formulas and runs experiment checks
that compare the two.
"""
from .bodies import (
    Body, Ellipsoid, EuclideanBall, HPolytope, LpBall, VPolytope, body_from_spec, cross_polytope,
    cube, gauge, linear_image, membership, polar, project, scaled, section, support,
)
from .errors import ConvergenceError, DegenerateError, NumericError, UnsupportedError
from .functionals import (
    EstimateCI, ProfileCurve, covering_number_greedy, entropy_number_greedy, gelfand_upper,
    mean_norm, mean_width, volumetric_profile, vrad,
)
from .measures import (
    centroid_body, centroid_body_support, isotropic_constant, isotropic_normalize,
    measure_from_spec, psi_alpha_constant, standard_gaussian,
)
from .sampling import RngStream, Subspace, sample_grassmannian, sample_sphere

__version__ = "0.1.0"
