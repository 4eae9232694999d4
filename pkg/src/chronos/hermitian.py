"""Complex Hermitian matrix kernel.

Eigendecomposition, purification, Schmidt decomposition and partial traces
over labeled tensor factors.  These are the primitives the SDP solver and the
protocol reconstruction are built on.  Everything here is a pure function of
its inputs; arrays are never mutated, so values are safe to share between
threads and worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotHermitian, NotPSD

# Eigenvalues inside (-RANK_TOL, RANK_TOL) are treated as exact zeros before
# square roots are taken (purification, Schmidt weights).
RANK_TOL = 1e-9


def hermiticity_defect(H: np.ndarray) -> float:
    """Max-norm distance of H from its conjugate transpose."""
    H = np.asarray(H)
    return float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0


def hermitian_part(H: np.ndarray) -> np.ndarray:
    """(H + H^dagger) / 2."""
    H = np.asarray(H)
    return (H + H.conj().T) / 2.0


def herm_eig(H: np.ndarray, tol: float = 1e-12):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted descending and
    eigenvectors as the columns of the second array, H = V diag(w) V^dagger.
    Each eigenvector's phase is fixed so its largest-magnitude component is
    real and positive, which makes repeated runs reproducible.

    Raises NotHermitian if the symmetry defect exceeds ``tol``.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    defect = hermiticity_defect(H)
    if defect > tol:
        raise NotHermitian(f"symmetry defect {defect:.3e} exceeds tol {tol:.3e}")
    w, V = np.linalg.eigh(hermitian_part(H))
    order = np.argsort(w)[::-1]
    w = w[order]
    V = V[:, order]
    # canonical per-column phase: largest-|.| entry made real positive
    for j in range(V.shape[1]):
        col = V[:, j]
        i = int(np.argmax(np.abs(col)))
        pivot = col[i]
        if abs(pivot) > 0:
            V[:, j] = col * (np.conj(pivot) / abs(pivot))
    return w, V


@dataclass(frozen=True)
class PureState:
    """Pure state on an ordered list of labeled tensor factors.

    ``systems`` is a tuple of (label, dimension) pairs; ``amplitudes`` is the
    flat complex vector of length prod(dimensions), unit norm, with the first
    listed system varying slowest (row-major / kron order).
    """

    systems: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        systems = tuple((str(lbl), int(dim)) for lbl, dim in self.systems)
        object.__setattr__(self, "systems", systems)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        total = int(np.prod([d for _, d in systems])) if systems else 0
        if len(systems) == 0 or total != amps.size:
            raise ValueError("system dimensions do not match amplitude length")
        if any(d < 1 for _, d in systems):
            raise ValueError("system dimensions must be >= 1")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {norm} is not 1 within 1e-10")
        labels = [lbl for lbl, _ in systems]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate system labels")

    @property
    def labels(self):
        return tuple(lbl for lbl, _ in self.systems)

    def dim(self, label: str) -> int:
        for lbl, d in self.systems:
            if lbl == label:
                return d
        raise KeyError(label)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per system."""
        return self.amplitudes.reshape([d for _, d in self.systems])

    def projector(self) -> np.ndarray:
        """Density matrix |psi><psi| on the full product space."""
        return np.outer(self.amplitudes, self.amplitudes.conj())


def purify(rho: np.ndarray, primary_label: str = "S", ancilla_label: str = "A",
           rank_tol: float = RANK_TOL) -> PureState:
    """Purify a PSD trace-one matrix with a minimal ancilla.

    The returned state lives on (primary ⊗ ancilla) with ancilla dimension
    equal to the numerical rank of ``rho`` (eigenvalues above ``rank_tol``),
    and is built as |Phi> = sum_i sqrt(lambda_i) |v_i>|i>.  Tracing out the
    ancilla recovers ``rho``.

    Raises NotPSD if the smallest eigenvalue is below ``-rank_tol``.
    """
    rho = np.asarray(rho, dtype=complex)
    w, V = herm_eig(rho, tol=max(1e-12, rank_tol))
    if w[-1] < -rank_tol:
        raise NotPSD(f"min eigenvalue {w[-1]:.3e} below -{rank_tol:.1e}")
    tr = float(np.sum(w))
    if abs(tr - 1.0) > 1e-9:
        raise ValueError(f"trace {tr} is not 1 within 1e-9")
    w = np.where(np.abs(w) < rank_tol, 0.0, w)
    keep = w > 0.0
    lam = w[keep]
    vecs = V[:, keep]
    rank = int(lam.size)
    if rank == 0:
        raise NotPSD("matrix is numerically zero, cannot purify")
    amps = (vecs * np.sqrt(lam)[None, :]).reshape(-1)  # amp[(i_primary, i_anc)]
    amps = amps / np.linalg.norm(amps)
    return PureState(((primary_label, rho.shape[0]), (ancilla_label, rank)), amps)


def schmidt(state: PureState, left_labels):
    """Schmidt decomposition of ``state`` across a bipartition.

    ``left_labels`` must be a nonempty proper subset of the state's labels.
    Returns (q, L, R): probabilities q_j > 0 sorted descending with
    sum(q) = 1, and matrices whose columns are the orthonormal Schmidt
    vectors, so that  state = sum_j sqrt(q_j) L[:, j] ⊗ R[:, j]  after the
    systems are reordered left-then-right (each side keeps its original
    relative order).
    """
    left = set(left_labels)
    labels = state.labels
    if not left or not left.issubset(set(labels)) or left == set(labels):
        raise ValueError("left_labels must be a nonempty proper subset of the systems")
    axes_left = [i for i, lbl in enumerate(labels) if lbl in left]
    axes_right = [i for i, lbl in enumerate(labels) if lbl not in left]
    tens = state.tensor().transpose(axes_left + axes_right)
    dims = [d for _, d in state.systems]
    dl = int(np.prod([dims[i] for i in axes_left]))
    dr = int(np.prod([dims[i] for i in axes_right]))
    mat = tens.reshape(dl, dr)
    U, s, Vh = np.linalg.svd(mat, full_matrices=False)
    q = s ** 2
    keep = q > 1e-12
    q = q[keep]
    L = U[:, keep]
    R = Vh[keep, :].T  # columns; no conjugation: state = sum_j s_j u_j ⊗ Vh[j,:]
    return q, L, R


def _remaining(systems, traced):
    return tuple((lbl, d) for lbl, d in systems if lbl not in traced)


def partial_trace(M: np.ndarray, systems, traced_labels) -> np.ndarray:
    """Partial trace of a matrix on a labeled product space.

    ``systems`` lists (label, dim) in tensor order; ``traced_labels`` is the
    set of labels to trace out.  The result keeps the remaining systems in
    their original order.  Tracing out everything returns a 1x1 matrix
    containing the full trace.
    """
    systems = tuple((str(lbl), int(d)) for lbl, d in systems)
    traced = set(traced_labels)
    labels = [lbl for lbl, _ in systems]
    unknown = traced - set(labels)
    if unknown:
        raise KeyError(f"unknown labels {sorted(unknown)}")
    dims = [d for _, d in systems]
    total = int(np.prod(dims))
    M = np.asarray(M, dtype=complex)
    if M.shape != (total, total):
        raise ValueError(f"matrix shape {M.shape} does not factor as {dims}")
    n = len(systems)
    tens = M.reshape(dims + dims)
    row_idx = list(range(n))
    col_idx = [n + i if labels[i] not in traced else i for i in range(n)]
    out_idx = [i for i in range(n) if labels[i] not in traced]
    out_idx += [n + i for i in range(n) if labels[i] not in traced]
    reduced = np.einsum(tens, row_idx + col_idx, out_idx)
    keep_dims = [d for lbl, d in systems if lbl not in traced]
    dkeep = int(np.prod(keep_dims)) if keep_dims else 1
    return reduced.reshape(dkeep, dkeep)
