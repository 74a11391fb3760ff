"""Joint chance-constrained programming with additive Gaussian uncertainty.

Builds two analytical safe approximations of P(M phi(x) <= m) >= beta --
a spectral (eigenbasis risk-splitting) program and a Boole/union-bound
risk-allocation baseline -- solves them with a self-contained augmented
Lagrangian NLP solver, and validates solutions by seeded Monte Carlo
simulation on linear Gaussian-Markov control problems.
"""

from .boole import BooleNlp, build_boole_nlp
from .gauss_markov import (GaussMarkovModel, HorizonSpec, build_jccp,
                           example_f16, example_mass_spring)
from .monte_carlo import MonteCarloReport, estimate_satisfaction, simulate_batch
from .numerics import (ConvergenceError, EigenPair, SymMatrix, erf, erf_inv,
                       std_normal_cdf, sym_eig, zoh_discretize)
from .problem import (AffineMap, DifferentiableMap, FeasibilityReport,
                      JccpProblem, ParseError, QuadraticCost, Solution,
                      ValidationError, load_problem, normalize_problem,
                      serialize_problem)
from .solver import (EvaluationError, Nlp, SolverOptions, SolveTrace,
                     check_gradients, multistart_solve, solve)
from .spectral import SpectralData, SpectralNlp, build_spectral_nlp

__all__ = [
    "AffineMap", "BooleNlp", "ConvergenceError", "DifferentiableMap",
    "EigenPair", "EvaluationError", "FeasibilityReport", "GaussMarkovModel",
    "HorizonSpec", "JccpProblem", "MonteCarloReport", "Nlp", "ParseError",
    "QuadraticCost", "Solution", "SolverOptions", "SolveTrace",
    "SpectralData", "SpectralNlp", "SymMatrix", "ValidationError",
    "build_boole_nlp", "build_jccp", "build_spectral_nlp", "check_gradients",
    "erf", "erf_inv", "estimate_satisfaction", "example_f16",
    "example_mass_spring", "load_problem", "multistart_solve",
    "normalize_problem", "serialize_problem", "simulate_batch", "solve",
    "std_normal_cdf", "sym_eig", "zoh_discretize",
]
