"""Fast marching for 2D first-arrival times with localized factoring.

The solver removes the source and obstacle-corner rate-degradation of
plain first-order fast marching by subtracting local cone-like expansions
of the solution (additive factoring), either statically around known
points or just-in-time at obstacle corners detected while marching.
"""

from .geometry import Grid2D, RectObstacle, ObstacleWorld, FREE, BOUNDARY, INTERIOR
from .speed import (ConstantSpeed, LinearSpeed, SinusoidalSpeed,
                    ObstacleSpeed, speed_eval, node_speeds)
from .factors import (ZeroFactor, Cone, ConePlane, ConeSector, ConeTwoPlanes,
                      MinOfCones, SumOfCones, snell_beta, snell_angles,
                      fan_sector_angle, refract_angles)
from .solver import (SolverConfig, FanEntry, SolveResult, MarchingError,
                     fmm_solve, choose_factor, initialize_sources,
                     approximate_characteristic_direction,
                     detect_rarefying_corner, source_cone_fans, METHODS)
from .analysis import (error_norms, error_mask, restrict_fine_to_coarse,
                       fit_observed_order, run_refinement_study,
                       ConvergenceReport, StudyCase, make_oracle_truth,
                       make_nested_truth)
from .trajectory import extract_trajectory, interpolate_gradient, Trajectory, TrajectoryStatus
from .scenario import Scenario, parse_scenario, emit_scenario, load_scenario, load_bundled
from .oracles import (eval_linear_speed_solution, line_integrated_time,
                      visibility_distance, visibility_field)

__version__ = "0.1.0"
