"""Rolling jump paths onto manifolds: development, horizontal lift, anti-development,
jump-aware stochastic integrals and sphere martingales, on flat R^d and S^d."""

__version__ = "0.1.0"

from .checks import CheckReport
from .manifolds import (CutLocusPolicy, Flat, GeometryError, Manifold, Point, Sphere, Tangent,
                        distance, exp_map, log_map, metric, parallel_transport, parse_manifold,
                        project_to_manifold)
from .connection import (AmbientProjection, ConnectionRule, EuclideanDiff, GeodesicLog, apply_rule,
                         check_rule_axioms, default_rule, parse_rule, projection_vs_geodesic_angle)
from .frames import (Frame, OrthogonalMatrix, equivariance_check, frame_apply, frame_inverse,
                     orthogonal_from_frames, right_action, standard_frame, transport_frame)
from .paths import (DriverPath, PathError, RngConfig, RolledPath, coarsen, compensate, gen_brownian,
                    gen_compound_poisson, half_ball_sampler, refine, superpose, uniform_ball_sampler,
                    uniform_grid, validate_rolled)
from .rolling import (ConvergenceTable, Scheme, SchemeConfig, antidevelop, convergence_study, develop,
                      develop_many, horizontal_lift, sup_error)
from .integrals import (OneFormProcess, QuadraticVariation, ScalarField, TwoTensorProcess, coordinate_form,
                        coordinate_patch_check, exact_form, hemisphere_chart, ito_integral, metric_tensor,
                        polarization_symmetry, product_rule_check, quadratic_variation,
                        rule_independence_check, stratonovich_integral)
from .martingale import (MartingaleTestReport, SphereMartingaleExperiment, construct_sphere_martingale,
                         driver_to_z, martingale_test, sphere_f, sphere_g, z_to_driver)
