"""Two-level trust region with random sketched subspaces."""

from .data import (Dataset, LabelConvention, LibsvmParseError, dataset_stats,
                   load_libsvm, map_labels, parse_libsvm, save_libsvm,
                   synthetic_classification, to_libsvm)
from .losses import (LeastSquaresLoss, LogisticLoss, Objective, Quadratic, RidgeLoss,
                     Rosenbrock)
from .qp import (ConvergedError, QpStep, QuadraticModel, boundary_tau, brute_force_tr,
                 cauchy_point, steihaug_toint)
from .sketch import (DenseSketch, SketchKind, SketchOperator, SparseSketch,
                     coordinate_sketch, gaussian_sketch, shash_sketch, sketch_gradient,
                     sketch_hessian)
from .solvers import (IterationRecord, RunTrace, SubspaceConfig, Termination, TrConfig,
                      composite_rho, line_search_alpha, radius_update, rho_from_reductions,
                      sn_solve, tltr_solve, tr_solve)

__version__ = "0.1.0"
