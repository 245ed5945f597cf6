"""Zeroth-order stochastic ADMM solvers for nonconvex composite problems."""

from .diagnostics import (TraceRecord, TraceWindow, augmented_lagrangian,
                          lyapunov, lyapunov_coefficients, objective_value,
                          stationarity_measure, theta_k)
from .errors import (ConfigError, DimensionMismatch, FactorizationFailure,
                     IndexOutOfRange, InfeasiblePoint, InsufficientHistory,
                     NoFixedPoint, NonFiniteValue, NonUnitDirection,
                     RankDeficientA, ZoadmmError)
from .estimators import (SmoothingParams, SpiderState, coo_grad_full,
                         coo_grad_single, sample_unit_sphere, spider_anchor,
                         spider_step, uni_grad_single)
from .oracle import BlackBoxOracle, QueryLedger, sample_batch
from .penalties import (PenaltyDescriptor, box_linf, eval_penalty, group_l2,
                        l1, prox, scaled, squared_l2, subgrad_dist, zero)
from .problem import (PenaltyBlock, ProblemSpec, SpectralSummary,
                      build_problem, spectral_summary)
from .problems import (CATALOG, CatalogProblem, build_graph_guided_fused_lasso,
                       build_quadratic_sanity, build_structured_perturbation_toy)
from .solver import (ALGORITHMS, HyperparamRecipe, IterateState, SolverConfig,
                     Trace, derive_hyperparams, iteration_query_cost,
                     lambda_update, resolve_linearization, run, validate_config,
                     x_update_exact, x_update_linearized, y_update)

__version__ = "0.1.0"
