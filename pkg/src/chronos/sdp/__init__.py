"""Block semidefinite programming: problem containers, real embedding,
dense interior-point solver and residual checks."""

from .embed import embed_hermitian, extract_hermitian, real_embed
from .problem import (MAX_ITERATIONS, NUMERICAL_FAILURE, OPTIMAL,
                      BlockSdpProblem, BlockSdpSolution, Constraint, CooMatrix,
                      dump_problem, load_problem, residuals)
from .solver import solve

__all__ = [
    "BlockSdpProblem", "BlockSdpSolution", "Constraint", "CooMatrix",
    "OPTIMAL", "MAX_ITERATIONS", "NUMERICAL_FAILURE",
    "solve", "residuals", "real_embed", "embed_hermitian", "extract_hermitian",
    "dump_problem", "load_problem",
]
