"""Real embedding of complex Hermitian SDPs.

A d-dim Hermitian block H maps to the 2d-dim real symmetric block
[[Re H, -Im H], [Im H, Re H]], which is PSD iff H is, with every eigenvalue
of H appearing twice.  Since tr(E(A) E(X)) = 2 tr(A X) for Hermitian A, X,
objective and constraint coefficient matrices are scaled by 1/2 so all trace
inner products (and the optimal value) are preserved exactly.  A solution Y
of the embedded problem is pulled back by averaging out the symplectic
symmetry: X = (Y11 + Y22)/2 + i (Y12^T - Y12)/2.
"""

from __future__ import annotations

import numpy as np

from .problem import BlockSdpProblem, Constraint, CooMatrix


def embed_hermitian(H: np.ndarray) -> np.ndarray:
    """[[Re H, -Im H], [Im H, Re H]] (unscaled; doubles the spectrum)."""
    H = np.asarray(H, dtype=complex)
    re, im = H.real, H.imag
    top = np.hstack([re, -im])
    bot = np.hstack([im, re])
    return np.vstack([top, bot])


def extract_hermitian(Y: np.ndarray) -> np.ndarray:
    """Pull a 2d real symmetric matrix back to the d-dim Hermitian block."""
    Y = np.asarray(Y, dtype=float)
    d2 = Y.shape[0]
    if d2 % 2:
        raise ValueError("embedded matrix must have even dimension")
    d = d2 // 2
    re = (Y[:d, :d] + Y[d:, d:]) / 2.0
    im = (Y[:d, d:].T - Y[:d, d:]) / 2.0
    re = (re + re.T) / 2.0
    im = (im - im.T) / 2.0
    return re + 1j * im


def embed_coo(A: CooMatrix, scale: float = 0.5) -> CooMatrix:
    """Embed a coefficient matrix, applying the trace-preserving 1/2 scale."""
    d = A.dim
    re = A.vals.real * scale
    im = A.vals.imag * scale
    rows = np.concatenate([A.rows, A.rows + d, A.rows, A.rows + d])
    cols = np.concatenate([A.cols, A.cols + d, A.cols + d, A.cols])
    vals = np.concatenate([re, re, -im, im])
    keep = vals != 0.0
    return CooMatrix(2 * d, rows[keep], cols[keep], vals[keep].astype(complex))


def real_embed(problem: BlockSdpProblem) -> BlockSdpProblem:
    """Embed a complex Hermitian block problem as a real symmetric one.

    Objectives and constraint coefficients carry the 1/2 scale, so the
    embedded problem has the same optimal value, constraint right-hand sides
    and dual variables as the original.
    """
    blocks = tuple((bid, 2 * d) for bid, d in problem.blocks)
    objective = {bid: 0.5 * embed_hermitian(C) for bid, C in problem.objective.items()}
    constraints = [
        Constraint({bid: embed_coo(A) for bid, A in con.terms.items()}, con.rhs)
        for con in problem.constraints
    ]
    return BlockSdpProblem(blocks, objective, constraints)
