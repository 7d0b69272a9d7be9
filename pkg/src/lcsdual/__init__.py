"""Locate Lagrangian coherent structures in 3D unsteady flows.

Initial positions of hyperbolic and elliptic LCSs are invariant manifolds of
the autonomous system generated by the intermediate right singular vector of
the flow-map gradient (final positions, of its backward-map analogue). The
package integrates trajectories together with the equation of variations,
runs long arclength lines of the resulting oriented direction fields, builds
classical and dual Poincaré maps, and classifies the candidates that emerge.
"""

__version__ = "0.1.0"

from .fields import (aperiodic_abc, aperiodic_coefficients, affine_field, cats_eye,
                     make_field, steady_abc, stream_function, VelocityField)
from .flowmap import (advect, advect_with_variations, finite_difference_gradient,
                      FlowSample)
from .strain import (ftle, repulsion_and_shear, sigma2_nearest_unity_check,
                     stretch_band, svd3, StrainData)
from .directionfield import (DirectionLine, DualFieldSpec, integrate_line,
                             oriented_direction)
from .poincare import (classical_section, dual_section, SectionPoints, SectionSpec,
                       wrap_periodic)
from .classify import (advect_sphere, classify_elliptic_candidate,
                       classify_hyperbolic_candidate, fit_torus_surface,
                       frame_from_points, perturbation_robustness, stretch_audit,
                       symmetric_cloud_distance, toroidal_inverse,
                       toroidal_transform, CandidateVerdict, ToroidalFrame)

__all__ = [name for name in dir() if not name.startswith("_")]
