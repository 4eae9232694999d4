"""Block semidefinite program containers and first-principles residual checks.

A problem is: minimize sum_b tr(C_b X_b) over Hermitian PSD blocks X_b
subject to linear equality constraints sum_b tr(A_{i,b} X_b) = r_i.
Coefficient matrices are stored sparsely (COO triplets) because the clock
constraints touch only one matrix entry pair per row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..hermitian import hermiticity_defect

OPTIMAL = "optimal"
MAX_ITERATIONS = "max_iterations"
NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class CooMatrix:
    """Sparse square matrix as (row, col, value) triplets.

    Stores every nonzero explicitly, including both members of a Hermitian
    (i, j)/(j, i) pair.  Triplets with the same position are summed.
    """

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=np.int64).reshape(-1))
        object.__setattr__(self, "cols", np.asarray(self.cols, dtype=np.int64).reshape(-1))
        object.__setattr__(self, "vals", np.asarray(self.vals, dtype=complex).reshape(-1))
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise ValueError("rows, cols, vals must have equal length")

    @classmethod
    def from_dense(cls, A, drop_tol: float = 0.0):
        A = np.asarray(A, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("expected a square matrix")
        r, c = np.nonzero(np.abs(A) > drop_tol)
        return cls(A.shape[0], r, c, A[r, c])

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.dim, self.dim), dtype=complex)
        np.add.at(A, (self.rows, self.cols), self.vals)
        return A

    def trace_inner(self, X: np.ndarray) -> float:
        """tr(A X) for Hermitian A, X (a real number)."""
        return float(np.sum(self.vals * X[self.cols, self.rows]).real)


@dataclass(frozen=True)
class Constraint:
    """One linear equality  sum_b tr(terms[b] X_b) = rhs."""

    terms: dict
    rhs: float


@dataclass(frozen=True)
class BlockSdpProblem:
    blocks: tuple            # ((block_id, dim), ...)
    objective: dict          # block_id -> dense Hermitian cost matrix
    constraints: list        # [Constraint, ...]

    def block_dims(self) -> dict:
        return {bid: int(d) for bid, d in self.blocks}

    def validate(self, herm_tol: float = 1e-10):
        dims = self.block_dims()
        if len(dims) != len(self.blocks):
            raise ValueError("duplicate block ids")
        for bid, C in self.objective.items():
            if bid not in dims:
                raise ValueError(f"objective references unknown block {bid!r}")
            C = np.asarray(C)
            if C.shape != (dims[bid], dims[bid]):
                raise ValueError(f"objective for block {bid!r} has wrong shape")
            if hermiticity_defect(C) > herm_tol:
                raise ValueError(f"objective for block {bid!r} is not Hermitian")
        for i, con in enumerate(self.constraints):
            for bid, A in con.terms.items():
                if bid not in dims:
                    raise ValueError(f"constraint {i} references unknown block {bid!r}")
                if A.dim != dims[bid]:
                    raise ValueError(f"constraint {i} term for {bid!r} has wrong dim")
                if hermiticity_defect(A.to_dense()) > herm_tol:
                    raise ValueError(f"constraint {i} term for {bid!r} is not Hermitian")

    def primal_value(self, X: dict) -> float:
        total = 0.0
        for bid, C in self.objective.items():
            total += float(np.trace(np.asarray(C) @ X[bid]).real)
        return total


@dataclass(frozen=True)
class BlockSdpSolution:
    X: dict                  # block_id -> Hermitian PSD matrix
    y: np.ndarray            # dual variable, one entry per constraint
    primal_objective: float
    dual_objective: float
    status: str
    iterations: int
    gap: float               # solver-reported relative duality gap
    feas: float              # solver-reported max constraint violation


def residuals(problem: BlockSdpProblem, solution: BlockSdpSolution) -> dict:
    """Recompute solution quality from scratch (no solver internals).

    Returns max_constraint_violation, min_block_eigenvalue (the most negative
    eigenvalue over all blocks; >= 0 means exactly PSD) and duality_gap
    (primal minus dual objective).
    """
    dims = problem.block_dims()
    for bid, d in dims.items():
        if bid not in solution.X or solution.X[bid].shape != (d, d):
            raise ValueError(f"solution is missing block {bid!r} of dim {d}")
    if len(solution.y) != len(problem.constraints):
        raise ValueError("dual vector length does not match constraint count")
    viol = 0.0
    for con in problem.constraints:
        lhs = sum(A.trace_inner(solution.X[bid]) for bid, A in con.terms.items())
        viol = max(viol, abs(lhs - con.rhs))
    min_eig = np.inf
    for bid in dims:
        w = np.linalg.eigvalsh((solution.X[bid] + solution.X[bid].conj().T) / 2.0)
        min_eig = min(min_eig, float(w[0]))
    primal = problem.primal_value(solution.X)
    dual = float(np.dot(solution.y, [c.rhs for c in problem.constraints]))
    return {
        "max_constraint_violation": viol,
        "min_block_eigenvalue": float(min_eig),
        "duality_gap": primal - dual,
    }


# ---------------------------------------------------------------------------
# plain-text sparse dump, for cross-checking against external solvers
#
# Format (one record per line, '#' starts a comment):
#   blocks <n>
#   block <block_id> <dim>            (n lines)
#   rhs <m>
#   r <i> <value>                     (m lines, i in 1..m)
#   entry <i> <block_id> <row> <col> <real> <imag>
# where i = 0 holds the objective and i in 1..m the constraints; (row, col)
# are 0-based.  Every stored nonzero appears, including both members of a
# Hermitian pair.
# ---------------------------------------------------------------------------


def dump_problem(problem: BlockSdpProblem, f):
    f.write("# chronos block-SDP dump v1\n")
    f.write(f"blocks {len(problem.blocks)}\n")
    for bid, d in problem.blocks:
        f.write(f"block {bid} {d}\n")
    f.write(f"rhs {len(problem.constraints)}\n")
    for i, con in enumerate(problem.constraints, start=1):
        f.write(f"r {i} {con.rhs!r}\n")
    def emit(idx, bid, coo):
        for r, c, v in zip(coo.rows, coo.cols, coo.vals):
            f.write(f"entry {idx} {bid} {r} {c} {v.real!r} {v.imag!r}\n")
    for bid, C in sorted(problem.objective.items(), key=lambda kv: str(kv[0])):
        emit(0, bid, CooMatrix.from_dense(C))
    for i, con in enumerate(problem.constraints, start=1):
        for bid in sorted(con.terms, key=str):
            emit(i, bid, con.terms[bid])


def load_problem(f) -> BlockSdpProblem:
    blocks = []
    rhs = []
    entries = {}
    dims = {}
    for line in f:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if tok[0] == "blocks" or tok[0] == "rhs":
            continue
        if tok[0] == "block":
            blocks.append((tok[1], int(tok[2])))
            dims[tok[1]] = int(tok[2])
        elif tok[0] == "r":
            rhs.append((int(tok[1]), float(tok[2])))
        elif tok[0] == "entry":
            i, bid = int(tok[1]), tok[2]
            r, c = int(tok[3]), int(tok[4])
            v = float(tok[5]) + 1j * float(tok[6])
            entries.setdefault((i, bid), []).append((r, c, v))
        else:
            raise ValueError(f"unrecognized dump line: {line!r}")
    rhs.sort()
    objective = {}
    for (i, bid), trip in entries.items():
        if i == 0:
            A = np.zeros((dims[bid], dims[bid]), dtype=complex)
            for r, c, v in trip:
                A[r, c] += v
            objective[bid] = A
    constraints = []
    for i, r_val in rhs:
        terms = {}
        for (j, bid), trip in entries.items():
            if j == i:
                rr = [t[0] for t in trip]
                cc = [t[1] for t in trip]
                vv = [t[2] for t in trip]
                terms[bid] = CooMatrix(dims[bid], rr, cc, vv)
        constraints.append(Constraint(terms, r_val))
    return BlockSdpProblem(tuple(blocks), objective, constraints)
