"""Probabilistic reachable sets for stochastic control systems.

Separates reachability of a stochastic system into a deterministic
over-approximation (contraction tubes or interval embeddings) and a
high-probability bound on the deviation between stochastic and
deterministic trajectories, then validates the combined sets by
Monte Carlo simulation.
"""

__version__ = "0.1.0"

from .bounds import DeviationBound, expectation_bound, radius
from .certify import (GainEstimate, ContractionCertificate,
                      SearchOptions, VertexHull, compute_dP,
                      estimate_gains, search_certificate,
                      verify_certificate)
from .dynamics import (InputSignal, SystemModel, Trajectory, integrate_ode,
                       jacobian_fd, simulate_sde)
from .errors import (CertificateInfeasibleError, DivergenceError,
                     OrderViolationError, UnsoundInclusionError)
from .probreach import (ProbReachSet, prob_reach_contraction,
                        prob_reach_interval)
from .reach import (ContractionTube, EmbeddingTrajectory, InclusionFunction,
                    contraction_tube, embed_integrate, endpoint_inclusion,
                    monotone_check, transform_system)
from .sets import (Ellipsoid, IntervalBox, MinkowskiSet, Parallelotope,
                   WeightedNorm, interval_sin, matrix_measure, membership,
                   polygon_outline, support, weighted_norm)
from .systems import (Term, TermSystem, build_term_system, linear_system,
                      ornstein_uhlenbeck, pendulum, pendulum_hull)
from .validate import CoverageReport, monte_carlo_coverage

__all__ = [
    "__version__",
    "DeviationBound", "expectation_bound", "radius",
    "GainEstimate", "ContractionCertificate", "SearchOptions",
    "VertexHull", "compute_dP", "estimate_gains",
    "search_certificate", "verify_certificate",
    "InputSignal", "SystemModel", "Trajectory", "integrate_ode",
    "jacobian_fd", "simulate_sde",
    "CertificateInfeasibleError", "DivergenceError", "OrderViolationError",
    "UnsoundInclusionError",
    "ProbReachSet", "prob_reach_contraction", "prob_reach_interval",
    "ContractionTube", "EmbeddingTrajectory", "InclusionFunction",
    "contraction_tube", "embed_integrate", "endpoint_inclusion",
    "monotone_check", "transform_system",
    "Ellipsoid", "IntervalBox", "MinkowskiSet", "Parallelotope",
    "WeightedNorm", "interval_sin", "matrix_measure", "membership",
    "polygon_outline", "support", "weighted_norm",
    "Term", "TermSystem", "build_term_system", "linear_system",
    "ornstein_uhlenbeck", "pendulum", "pendulum_hull",
    "CoverageReport", "monte_carlo_coverage",
]
