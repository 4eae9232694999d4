"""Assembly and solution of the clock SDP in reduced block-diagonal form.

The full joint oracle-querier density matrices are replaced by one oracle
block B_k^(t) per symmetric level k.  This is valid because the query phases
are diagonal in that basis: dephasing the querier side entrywise commutes
with the query and with the oracle marginal, so it preserves feasibility and
the objective, and the optimum is attained on block-diagonal states.  One
query step then acts entrywise, B_k -> Phi_k ∘ B_k, and the final query is
folded into the measurement constraint (only the oracle marginal of the last
state is needed), which saves one round of blocks.

Variables:  B_k^(t) for t in 0..queries-1, k in 0..N, and one sigma_a per
frequency estimate, all Hermitian d x d blocks over the oracle points.
Constraints (entrywise over Hermitian matrices, d^2 real rows each):
  (i)   sum_k B_k^(0) = rho0
  (ii)  sum_k B_k^(t) = sum_k Phi_k ∘ B_k^(t-1)    for t = 1..queries-1
  (iii) sum_a sigma_a = sum_k Phi_k ∘ B_k^(queries-1)
Objective: minimize sum_a tr(A_a sigma_a) with diagonal cost operators A_a.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import sdp
from .errors import SolverFailure
from .model import (ClockScenario, DiscretizedPrior, cost_operator,
                    initial_oracle_state, oracle_phase_matrix)


def block_id(t: int, k: int) -> str:
    return f"B[{t},{k}]"


def sigma_id(a: int) -> str:
    return f"S[{a}]"


def _entry_rows(d):
    """Iterate the d^2 real components of a Hermitian matrix equation:
    yields (p, q, part) with part in {'re', 'im'}, imaginary rows only for
    p < q."""
    for p in range(d):
        for q in range(p, d):
            yield p, q, "re"
            if p < q:
                yield p, q, "im"


def _basis_coo(d, p, q, part, scale=1.0):
    """Hermitian coefficient A with tr(A X) = Re/Im X_pq, times scale."""
    if p == q:
        return sdp.CooMatrix(d, [p], [p], [scale])
    if part == "re":
        return sdp.CooMatrix(d, [p, q], [q, p], [0.5 * scale, 0.5 * scale])
    return sdp.CooMatrix(d, [p, q], [q, p], [0.5j * scale, -0.5j * scale])


def _twisted_coo(d, p, q, part, phi_pq, scale=1.0):
    """Hermitian coefficient with tr(A X) = Re/Im (phi_pq * X_pq), times scale."""
    if p == q:
        # phi is unit on the diagonal
        return sdp.CooMatrix(d, [p], [p], [scale])
    c = complex(phi_pq)
    if part == "re":
        return sdp.CooMatrix(d, [p, q], [q, p],
                             [0.5 * np.conj(c) * scale, 0.5 * c * scale])
    return sdp.CooMatrix(d, [p, q], [q, p],
                         [0.5j * np.conj(c) * scale, -0.5j * c * scale])


def build_clock_sdp(dp: DiscretizedPrior, scenario: ClockScenario) -> sdp.BlockSdpProblem:
    """Assemble the reduced clock SDP for one discretized prior."""
    if dp.d != scenario.d:
        raise ValueError(f"discretization size {dp.d} != scenario.d {scenario.d}")
    d = dp.d
    N = scenario.atoms
    tf = scenario.queries
    F = scenario.estimates
    phis = [oracle_phase_matrix(dp.omegas, k) for k in range(N + 1)]
    rho0 = initial_oracle_state(dp.weights)

    blocks = [(block_id(t, k), d) for t in range(tf) for k in range(N + 1)]
    blocks += [(sigma_id(a), d) for a in range(len(F))]

    objective = {
        sigma_id(a): cost_operator(dp.omegas, float(F[a]), scenario.cost)
        for a in range(len(F))
    }

    constraints = []
    # (i) initial oracle marginal
    for p, q, part in _entry_rows(d):
        terms = {block_id(0, k): _basis_coo(d, p, q, part) for k in range(N + 1)}
        rhs = rho0[p, q].real if part == "re" else rho0[p, q].imag
        constraints.append(sdp.Constraint(terms, float(rhs)))
    # (ii) marginal propagation through intermediate queries
    for t in range(1, tf):
        for p, q, part in _entry_rows(d):
            terms = {block_id(t, k): _basis_coo(d, p, q, part) for k in range(N + 1)}
            for k in range(N + 1):
                terms[block_id(t - 1, k)] = _twisted_coo(d, p, q, part,
                                                         phis[k][p, q], scale=-1.0)
            constraints.append(sdp.Constraint(terms, 0.0))
    # (iii) measurement totals after the final query
    for p, q, part in _entry_rows(d):
        terms = {sigma_id(a): _basis_coo(d, p, q, part) for a in range(len(F))}
        for k in range(N + 1):
            terms[block_id(tf - 1, k)] = _twisted_coo(d, p, q, part,
                                                      phis[k][p, q], scale=-1.0)
        constraints.append(sdp.Constraint(terms, 0.0))

    return sdp.BlockSdpProblem(tuple(blocks), objective, constraints)


@dataclass(frozen=True)
class InterrogationSolution:
    """Optimal discretized interrogation: blocks, conditional operators, cost."""

    scenario: ClockScenario
    dp: DiscretizedPrior
    B: np.ndarray          # (queries, N+1, d, d) complex
    sigma: np.ndarray      # (m, d, d) complex
    cost: float
    gap: float
    feas: float
    iterations: int

    @property
    def rho_final(self) -> np.ndarray:
        """Oracle marginal after the last query, sum_a sigma_a."""
        return self.sigma.sum(axis=0)


def _polish(problem: sdp.BlockSdpProblem, X: dict) -> dict:
    """Project solver output onto the equality constraints exactly.

    One minimum-norm least-squares correction over the Hermitian parameters
    of every block.  Interior-point residuals are ~1e-10, so the correction
    is far below the PSD tolerance but makes downstream marginal identities
    (probabilities summing to one, purification marginals) hold to machine
    precision.
    """
    dims = problem.block_dims()
    ids = [bid for bid, _ in problem.blocks]
    offset = {}
    n = 0
    for bid in ids:
        offset[bid] = n
        n += dims[bid] ** 2
    def param_index(bid, r, c):
        # layout per block: d diagonal entries, then (re, im) pairs for p < q
        d = dims[bid]
        p, q = min(r, c), max(r, c)
        if p == q:
            return [(offset[bid] + p, 1.0, 0.0)]
        base = offset[bid] + d + 2 * ((2 * d - p - 1) * p // 2 + (q - p - 1))
        return [(base, 1.0, 0.0), (base + 1, 0.0, 1.0)]

    rows, cols, vals = [], [], []
    resid = np.zeros(len(problem.constraints))
    for i, con in enumerate(problem.constraints):
        lhs = 0.0
        for bid, A in con.terms.items():
            lhs += A.trace_inner(X[bid])
            for r, c, v in zip(A.rows, A.cols, A.vals):
                for idx, wre, wim in param_index(bid, r, c):
                    # contribution of entry (r, c, v) to tr(A X): v * X[c, r]
                    if r == c:
                        coef = v.real * wre
                    elif r < c:
                        coef = v.real * wre + v.imag * wim
                    else:
                        coef = v.real * wre - v.imag * wim
                    if coef != 0.0:
                        rows.append(i)
                        cols.append(idx)
                        vals.append(coef)
        resid[i] = con.rhs - lhs
    P = sp.csr_matrix((vals, (rows, cols)), shape=(len(problem.constraints), n))
    G = (P @ P.T).toarray()
    G[np.diag_indices_from(G)] += 1e-14 * max(G.max(), 1.0)
    delta = P.T @ sla.cho_solve(sla.cho_factor(G, check_finite=False), resid)

    out = {}
    for bid in ids:
        d = dims[bid]
        Xb = X[bid].copy()
        off = offset[bid]
        Xb[np.diag_indices(d)] += delta[off:off + d]
        pos = off + d
        for p in range(d):
            for q in range(p + 1, d):
                dre, dim_ = delta[pos], delta[pos + 1]
                pos += 2
                Xb[p, q] += dre + 1j * dim_
                Xb[q, p] += dre - 1j * dim_
        out[bid] = Xb
    return out


def solve_interrogation(dp: DiscretizedPrior, scenario: ClockScenario,
                        gap_tol: float = 1e-8, feas_tol: float = 1e-9,
                        max_iter: int = 200) -> InterrogationSolution:
    """Build and solve the clock SDP; raise SolverFailure on a bad status."""
    problem = build_clock_sdp(dp, scenario)
    sol = sdp.solve(problem, gap_tol=gap_tol, feas_tol=feas_tol, max_iter=max_iter)
    if sol.status != sdp.OPTIMAL:
        raise SolverFailure(sol.status, sdp.residuals(problem, sol))
    X = _polish(problem, sol.X)
    N, tf, m, d = scenario.atoms, scenario.queries, scenario.m, dp.d
    B = np.empty((tf, N + 1, d, d), dtype=complex)
    for t in range(tf):
        for k in range(N + 1):
            B[t, k] = X[block_id(t, k)]
    sigma = np.empty((m, d, d), dtype=complex)
    for a in range(m):
        sigma[a] = X[sigma_id(a)]
    cost = 0.0
    for a in range(m):
        cost += float(np.real(
            scenario.cost.value(dp.omegas - scenario.estimates[a]) @ np.diag(sigma[a]).real))
    return InterrogationSolution(
        scenario=scenario, dp=dp, B=B, sigma=sigma, cost=cost,
        gap=sol.gap, feas=sol.feas, iterations=sol.iterations,
    )


@dataclass(frozen=True)
class Posteriors:
    """Per-outcome posterior over the discrete frequencies."""

    matrix: np.ndarray        # (m, d): row a = p(omega_x | a)
    outcome_probs: np.ndarray  # (m,): tr(sigma_a)
    used: np.ndarray           # (m,) bool: outcomes with non-negligible mass


def posteriors(sol: InterrogationSolution, trace_floor: float = 1e-12) -> Posteriors:
    """Posterior p(omega_x | a) = sigma_a[x, x] / tr(sigma_a) per outcome.

    Outcomes with tr(sigma_a) below ``trace_floor`` are flagged unused and
    given a uniform placeholder row.
    """
    m, d = sol.sigma.shape[0], sol.sigma.shape[1]
    probs = np.array([float(np.trace(sol.sigma[a]).real) for a in range(m)])
    used = probs > trace_floor
    mat = np.full((m, d), 1.0 / d)
    for a in range(m):
        if used[a]:
            diag = np.clip(np.diag(sol.sigma[a]).real, 0.0, None)
            mat[a] = diag / diag.sum()
    return Posteriors(matrix=mat, outcome_probs=probs, used=used)
