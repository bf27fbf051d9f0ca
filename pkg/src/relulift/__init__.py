"""relulift: exact convex lifting of two-layer ReLU network training.

Enumerate the activation-pattern cells of a dataset, solve the equivalent
cone-constrained convex programs, map solutions back and forth between
weight space and the lifted space, certify global optimality of any given
network in polynomial time, and construct explicit objective-controlled
paths through the training landscape.
"""

__version__ = "0.1.0"

from .arrangement import (Dichotomy, Trichotomy, classify_neuron, cone_membership,
                          enumerate_dichotomies, enumerate_trichotomies)
from .certificates import (Certificate, SubsampleReport, UniquenessReport,
                           check_global_optimality, kkt_check, subsampled_gap,
                           verify_unique_optimum, zero_point_threshold)
from .convex import (ConvexPoint, SolveReport, TriConvexPoint, group_soft_threshold,
                     objective_c, objective_tri, project_cone, solve_dichotomy_program,
                     solve_trichotomy_program)
from .errors import (AssertionFailure, CapExceeded, DimMismatch, InfeasiblePoint,
                     NonFiniteLoss, NotEnumerated, NotMinimal, NotNearlyMinimal,
                     NotScaled, NotStationary, ProjectionStalled, ReluLiftError,
                     SolveFailed, SpecMismatch, TooFewNeurons)
from .estimators import ConvexReLU, GradientReLU
from .mappings import (convex_to_nn, is_minimal, is_nearly_minimal, is_scaled, merge,
                       nn_to_convex, optimal_set_member, psi, split)
from .network import NeuralNet, SplitSpec
from .nonconvex import (ClarkeResidual, TrainConfig, TrainTrace, align_neurons,
                        clarke_residual, objective_nc, scale_neurons, train_gd)
from .paths import (Path, caratheodory_reduce, interpolate_realization, path_merge,
                    path_to_global, path_to_nearly_minimal)
from .problem import ProblemInstance, load_instance

__all__ = [name for name in dir() if not name.startswith("_")]
