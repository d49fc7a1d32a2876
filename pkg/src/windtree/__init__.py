"""Exact-arithmetic laboratory for the periodic wind-tree billiard:
trajectory classification on the infinite table, the square-tiled quotient
surface with its cylinder decompositions and special points, the lifting
dictionary between the two, and recurrence/diffusion experiments."""

from .billiard import (BilliardState, Outcome, TrajectoryOutcome,
                       classify_trajectory, make_state, next_collision,
                       regular_start, symmetry_check, trace)
from .errors import CornerHit, DomainError, PrecisionError
from .exact import (Params, ParityClass, PointQ, Rational, Slope,
                    classify_params, mediant_enumerate)
from .experiments import (approximation_search, diffusion_experiment,
                          exact_direction, quantize_direction,
                          recurrence_experiment, stability_check)
from .lift import abc_strip_check, lift_direction, wpoint_orbit_partition
from .origami import (CylinderDecomposition, Origami, WeierstrassSet,
                      build_origami, cylinder_bounds_constant,
                      decompose_direction, enumerate_good_directions,
                      is_good_one_cylinder, locate_weierstrass,
                      orbit_invariant, sl2z_act)

__version__ = "0.1.0"
