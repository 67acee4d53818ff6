"""Las Vegas query complexity and the unidirectional adversary bound.

Simulate query algorithms, measure their Las Vegas complexity, extract
adversary solutions from them, and compile adversary solutions back into
algorithms.
"""

from .adversary import (DualCertificate, FeasibleSolution, OperatorSolution, dual_bound, extract,
                        feasible_from_offdiagonal, objective_profile, residual)
from .model import (BlockVector, ComplexityProfile, OracleFamily, StateConversionProblem,
                    SubspaceConversionProblem)
from .numlin import TOL, Tolerances
from .sim import Gate, QueryAlgorithm, QueryEmbedding, check_state_conversion, las_vegas, simulate_all
from .synth import compile_approx, compile_exact, compile_exact_posdef, run_plain

__all__ = [
    "BlockVector", "ComplexityProfile", "DualCertificate", "FeasibleSolution", "Gate", "OperatorSolution",
    "OracleFamily", "QueryAlgorithm", "QueryEmbedding", "StateConversionProblem", "SubspaceConversionProblem",
    "TOL", "Tolerances", "check_state_conversion", "compile_approx", "compile_exact", "compile_exact_posdef",
    "dual_bound", "extract", "feasible_from_offdiagonal", "las_vegas", "objective_profile", "residual",
    "run_plain", "simulate_all",
]
