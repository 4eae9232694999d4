"""Dense primal-dual path-following interior-point solver for block SDPs.

The solver works on the real embedding of the complex Hermitian problem (one
real symmetric PSD kernel, fewer code paths to validate).  Directions are the
HKM family with a Mehrotra predictor-corrector; the Schur complement is formed
densely per block and factored with Cholesky.  Problem sizes here are tens of
blocks of dimension <= ~60 after embedding, so dense linear algebra wins.

Initialization is X = tau*I, S = tau*I, y = 0 with tau = 1 + max|r_i| and no
feasibility phase.  Primal/dual steps use a 0.98 fraction-to-boundary rule.
Numerically dependent constraint rows are dropped up front by rank-revealing
Cholesky of the row Gram matrix (nominal dependence scale 1e-10); their dual
variables are reported as zero.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .embed import extract_hermitian, real_embed
from .problem import (MAX_ITERATIONS, NUMERICAL_FAILURE, OPTIMAL,
                      BlockSdpProblem, BlockSdpSolution)

ROW_DROP_TOL = 1e-10
FRACTION_TO_BOUNDARY = 0.98


class _Compiled:
    """Real-embedded problem in solver form: per-block CSR rows of vec(A).

    Kept constraint rows are normalized to unit Frobenius norm (the right-hand
    side and the reported duals are rescaled accordingly), which keeps the
    Schur complement well scaled.
    """

    def __init__(self, real_problem: BlockSdpProblem):
        self.ids = [bid for bid, _ in real_problem.blocks]
        self.dims = [int(d) for _, d in real_problem.blocks]
        m = len(real_problem.constraints)
        self.r_full = np.array([c.rhs for c in real_problem.constraints], dtype=float)
        self.K_full = []
        for bid, D in zip(self.ids, self.dims):
            rows, cols, vals = [], [], []
            for i, con in enumerate(real_problem.constraints):
                A = con.terms.get(bid)
                if A is None:
                    continue
                rows.append(np.full(len(A.rows), i, dtype=np.int64))
                cols.append(A.rows * D + A.cols)
                vals.append(A.vals.real)
            if rows:
                rows = np.concatenate(rows)
                cols = np.concatenate(cols)
                vals = np.concatenate(vals)
            self.K_full.append(sp.csr_matrix((vals, (rows, cols)), shape=(m, D * D)))
        self.C = []
        for bid, D in zip(self.ids, self.dims):
            C = real_problem.objective.get(bid)
            C = np.zeros((D, D)) if C is None else np.asarray(C, dtype=float)
            self.C.append((C + C.T) / 2.0)
        self.kept = self._independent_rows()
        norms2 = np.zeros(len(self.kept))
        for Kb in self.K_full:
            sub = Kb[self.kept]
            norms2 += np.asarray(sub.multiply(sub).sum(axis=1)).ravel()
        self.row_scale = 1.0 / np.sqrt(norms2)
        D_scale = sp.diags(self.row_scale)
        self.K = [D_scale @ Kb[self.kept] for Kb in self.K_full]
        self.Kt = [Kb.T.tocsr() for Kb in self.K]
        self.r = self.r_full[self.kept] * self.row_scale

    def _independent_rows(self) -> np.ndarray:
        m = len(self.r_full)
        if m == 0:
            return np.array([], dtype=np.int64)
        gram = None
        for Kb in self.K_full:
            g = (Kb @ Kb.T).toarray()
            gram = g if gram is None else gram + g
        diag = np.diag(gram).copy()
        empty = diag <= 0.0
        if np.any(empty & (np.abs(self.r_full) > 0)):
            bad = int(np.nonzero(empty & (np.abs(self.r_full) > 0))[0][0])
            raise ValueError(f"constraint {bad} has no coefficients but rhs != 0")
        scale = np.where(empty, 1.0, 1.0 / np.sqrt(np.where(empty, 1.0, diag)))
        gram = gram * scale[:, None] * scale[None, :]
        # rank-revealing (pivoted) Cholesky; pivots below tol mark rows that
        # are linear combinations of earlier pivots at the 1e-10 scale
        tol = max(ROW_DROP_TOL ** 2, 100.0 * np.finfo(float).eps * m)
        _, piv, rank, info = sla.lapack.dpstrf(gram, tol=tol, lower=1)
        if info < 0:
            raise RuntimeError("dpstrf failed on the constraint Gram matrix")
        kept = np.sort(piv[:rank] - 1)
        kept = kept[~empty[kept]]
        return kept.astype(np.int64)

    def apply(self, mats) -> np.ndarray:
        """A(X): vector of kept-row trace inner products."""
        out = np.zeros(len(self.r))
        for Kb, Xb in zip(self.K, mats):
            out += Kb @ Xb.ravel()
        return out

    def adjoint(self, y):
        """A^T(y): per-block dense symmetric matrices."""
        out = []
        for Kt, D in zip(self.Kt, self.dims):
            V = (Kt @ y).reshape(D, D)
            out.append((V + V.T) / 2.0)
        return out


def _sym(A):
    return (A + A.T) / 2.0


def _chol(A):
    return sla.cholesky(A, lower=True, check_finite=False)


def _max_step(L, D):
    """sup {alpha : M + alpha D >= 0} given M = L L^T."""
    W = sla.solve_triangular(L, D, lower=True, check_finite=False)
    W = sla.solve_triangular(L, W.T, lower=True, check_finite=False)
    lam = sla.eigvalsh(_sym(W), check_finite=False)[0]
    if lam >= -1e-14:
        return np.inf
    return -1.0 / lam


def _schur(comp, Lxs, Lsinvs):
    """HKM Schur complement in Gram form.

    With symmetric coefficients, tr(A_i X A_j S^-1) equals the Frobenius
    inner product of V_i = Ls^-1 A_i Lx with V_j, so M is the Gram matrix of
    the rows W_b = K_b (Ls^-T ⊗ Lx) summed over blocks.  Forming it this way
    keeps M positive semidefinite to rounding even when X and S are nearly
    singular late in the run.
    """
    m = len(comp.r)
    M = np.zeros((m, m))
    for Kb, Lx, Lsi in zip(comp.K, Lxs, Lsinvs):
        if Kb.nnz == 0:
            continue
        W = Kb @ np.kron(Lsi.T, Lx)   # row i = vec_r(Ls^-1 A_i Lx)
        M += W @ W.T
    return _sym(M)


class _SchurSolver:
    """Factor the Schur complement, surviving late-stage ill-conditioning.

    Cholesky with escalating diagonal jitter (relative to the largest diagonal
    entry), one step of iterative refinement against the unjittered matrix,
    and an eigendecomposition fallback with eigenvalue clipping.
    """

    def __init__(self, M):
        self._M = M
        self._cho = None
        self._eig = None
        if not np.all(np.isfinite(M)):
            return
        base = float(np.max(np.abs(np.diag(M)))) or 1.0
        for rel in (0.0, 1e-15, 1e-13, 1e-11, 1e-9):
            Mj = M if rel == 0.0 else M + (rel * base) * np.eye(M.shape[0])
            try:
                self._cho = sla.cho_factor(Mj, lower=True, check_finite=False)
                return
            except np.linalg.LinAlgError:
                continue
        w, V = sla.eigh(M, check_finite=False)
        floor = max(float(w[-1]), base) * 1e-14
        w = np.where(w < floor, floor, w)
        self._eig = (w, V)

    @property
    def ok(self):
        return self._cho is not None or self._eig is not None

    def _solve_once(self, rhs):
        if self._cho is not None:
            return sla.cho_solve(self._cho, rhs, check_finite=False)
        w, V = self._eig
        return V @ ((V.T @ rhs) / w)

    def solve(self, rhs):
        x = self._solve_once(rhs)
        resid = rhs - self._M @ x
        return x + self._solve_once(resid)


def solve(problem: BlockSdpProblem, gap_tol: float = 1e-8,
          feas_tol: float = 1e-9, max_iter: int = 200) -> BlockSdpSolution:
    """Solve a complex Hermitian block SDP to the requested tolerances.

    Status ``optimal`` certifies duality gap <= gap_tol*(1+|primal|) together
    with primal and dual feasibility; ``max_iterations`` and
    ``numerical_failure`` are surfaced explicitly and must be checked by the
    caller.
    """
    problem.validate()
    comp = _Compiled(real_embed(problem))
    nblocks = len(comp.ids)
    ntot = sum(comp.dims)
    m = len(comp.r)

    tau = 1.0 + (np.max(np.abs(comp.r)) if m else 0.0)
    Xs = [tau * np.eye(D) for D in comp.dims]
    Ss = [tau * np.eye(D) for D in comp.dims]
    y = np.zeros(m)

    cmax = max((np.max(np.abs(C)) if C.size else 0.0) for C in comp.C) if nblocks else 0.0
    dual_tol = feas_tol * (1.0 + cmax)

    status = MAX_ITERATIONS
    it = 0
    for it in range(1, max_iter + 1):
        p_obj = sum(float(np.tensordot(C, X)) for C, X in zip(comp.C, Xs))
        d_obj = float(comp.r @ y)
        rp = comp.r - comp.apply(Xs)
        At_y = comp.adjoint(y)
        Rd = [C - S - Ay for C, S, Ay in zip(comp.C, Ss, At_y)]
        feas_p = float(np.max(np.abs(rp))) if m else 0.0
        feas_d = max(float(np.max(np.abs(R))) for R in Rd)
        mu = sum(float(np.tensordot(X, S)) for X, S in zip(Xs, Ss)) / ntot
        rel_gap = abs(p_obj - d_obj) / (1.0 + abs(p_obj))
        if rel_gap <= gap_tol and feas_p <= feas_tol and feas_d <= dual_tol:
            status = OPTIMAL
            break

        try:
            Lx = [_chol(X) for X in Xs]
            Ls = [_chol(S) for S in Ss]
        except np.linalg.LinAlgError:
            Xs = [_psd_repair(X) for X in Xs]
            Ss = [_psd_repair(S) for S in Ss]
            try:
                Lx = [_chol(X) for X in Xs]
                Ls = [_chol(S) for S in Ss]
            except np.linalg.LinAlgError:
                status = NUMERICAL_FAILURE
                break
        Lsinv = [sla.solve_triangular(L, np.eye(D), lower=True, check_finite=False)
                 for L, D in zip(Ls, comp.dims)]
        Sinvs = [_sym(Li.T @ Li) for Li in Lsinv]

        schur = _SchurSolver(_schur(comp, Lx, Lsinv))
        if not schur.ok:
            status = NUMERICAL_FAILURE
            break

        def rhs_vector(sigma_mu, corr):
            rhs = rp + comp.apply(Xs)
            if sigma_mu != 0.0:
                rhs -= sigma_mu * comp.apply(Sinvs)
            W = [_sym(X @ R @ Sinv) for X, R, Sinv in zip(Xs, Rd, Sinvs)]
            rhs += comp.apply(W)
            if corr is not None:
                rhs += comp.apply(corr)
            return rhs

        def directions(sigma_mu, corr):
            dy = schur.solve(rhs_vector(sigma_mu, corr))
            At_dy = comp.adjoint(dy)
            dS = [R - Ady for R, Ady in zip(Rd, At_dy)]
            dX = []
            for X, Sinv, dSb, i in zip(Xs, Sinvs, dS, range(nblocks)):
                V = -X - _sym(X @ dSb @ Sinv)
                if sigma_mu != 0.0:
                    V = V + sigma_mu * Sinv
                if corr is not None:
                    V = V - corr[i]
                dX.append(_sym(V))
            return dy, dX, dS

        # predictor (affine scaling)
        dy_a, dX_a, dS_a = directions(0.0, None)
        ap = min(1.0, min(_max_step(L, D) for L, D in zip(Lx, dX_a)))
        ad = min(1.0, min(_max_step(L, D) for L, D in zip(Ls, dS_a)))
        mu_aff = sum(float(np.tensordot(X + ap * dX, S + ad * dS))
                     for X, dX, S, dS in zip(Xs, dX_a, Ss, dS_a)) / ntot
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

        # corrector (combined direction with second-order term)
        corr = [_sym(dXa @ dSa @ Sinv) for dXa, dSa, Sinv in zip(dX_a, dS_a, Sinvs)]
        dy, dX, dS = directions(sigma * mu, corr)
        ap = min(1.0, FRACTION_TO_BOUNDARY * min(_max_step(L, D) for L, D in zip(Lx, dX)))
        ad = min(1.0, FRACTION_TO_BOUNDARY * min(_max_step(L, D) for L, D in zip(Ls, dS)))
        if ap < 1e-10 and ad < 1e-10:
            status = NUMERICAL_FAILURE
            break
        Xs = [_sym(X + ap * D) for X, D in zip(Xs, dX)]
        Ss = [_sym(S + ad * D) for S, D in zip(Ss, dS)]
        y = y + ad * dy

    # pull the iterate back to the complex problem and report against it
    X_out = {}
    for bid, Y in zip(comp.ids, Xs):
        X_out[bid] = extract_hermitian(Y)
    y_full = np.zeros(len(comp.r_full))
    y_full[comp.kept] = y * comp.row_scale
    primal = problem.primal_value(X_out)
    dual = float(comp.r_full @ y_full)
    viol = 0.0
    for con in problem.constraints:
        lhs = sum(A.trace_inner(X_out[bid]) for bid, A in con.terms.items())
        viol = max(viol, abs(lhs - con.rhs))
    return BlockSdpSolution(
        X=X_out, y=y_full, primal_objective=primal, dual_objective=dual,
        status=status, iterations=it,
        gap=abs(primal - dual) / (1.0 + abs(primal)), feas=viol,
    )
