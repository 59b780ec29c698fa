"""Dense complex linear algebra with quantum-state semantics.

Matrices are plain ``numpy`` arrays of complex dtype.  The ``as_*`` helpers
validate the invariant layers (finite, Hermitian, density matrix) and return
a fresh array, so callers never share mutable state with their inputs.

Conventions used throughout the package:

* ``vec`` stacks rows: ``vec(|a><b|) = e_a (x) e_b``, hence
  ``kron(A, B) @ vec(M) == vec(A @ M @ B.T)``.
* Bipartite operators are ordered ``first (x) second``; for Choi matrices the
  first factor is the channel output and the second the input.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9


class MatrixError(ValueError):
    """Raised when a matrix violates a structural invariant."""


class EigenSolverError(ArithmeticError):
    """Raised when the Hermitian eigensolver fails to converge."""


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-D complex array (a copy)."""
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise MatrixError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MatrixError(f"{name} has non-finite entries")
    return arr


def as_hermitian(m, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    """Validate Hermiticity (relative max-entry test) and symmetrize exactly."""
    arr = as_matrix(m, name)
    if arr.shape[0] != arr.shape[1]:
        raise MatrixError(f"{name} must be square, got shape {arr.shape}")
    scale = max(1.0, float(np.max(np.abs(arr))))
    defect = float(np.max(np.abs(arr - arr.conj().T)))
    if defect > tol * scale:
        raise MatrixError(f"{name} is not Hermitian (max |M - M^dagger| = {defect:.3e})")
    return (arr + arr.conj().T) / 2


def as_density(m, psd_tol: float = PSD_TOL, trace_tol: float = TRACE_TOL,
               name: str = "state") -> np.ndarray:
    """Validate a density matrix: Hermitian, PSD up to relative slack, unit trace."""
    arr = as_hermitian(m, name=name)
    tr = np.trace(arr).real
    if abs(tr - 1.0) > trace_tol:
        raise MatrixError(f"{name} must have unit trace, got {tr!r}")
    evals = np.linalg.eigvalsh(arr)
    scale = max(float(np.max(np.abs(evals))), np.finfo(float).tiny)
    if evals[0] < -psd_tol * scale:
        raise MatrixError(f"{name} is not positive semidefinite (min eigenvalue {evals[0]:.3e})")
    return arr


def is_density(m, psd_tol: float = PSD_TOL, trace_tol: float = TRACE_TOL) -> bool:
    try:
        as_density(m, psd_tol, trace_tol)
    except MatrixError:
        return False
    return True


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def ket(index: int, dim: int) -> np.ndarray:
    """Computational basis vector ``e_index`` of length ``dim``."""
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    return np.outer(v, v.conj())


def unit(i: int, j: int, dim: int) -> np.ndarray:
    """Matrix unit ``E_ij = |i><j|``."""
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return m


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order with phase-fixed orthonormal eigenvectors.

    ``eigenvectors[:, k]`` belongs to ``eigenvalues[k]``.
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def __len__(self) -> int:
        return len(self.eigenvalues)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    mags = np.abs(v)
    # first component whose magnitude is (numerically) the largest
    k = int(np.flatnonzero(mags >= mags.max() * (1 - 1e-12))[0])
    return v * (np.conj(v[k]) / mags[k])


def _canonical_subspace_basis(vecs: np.ndarray) -> np.ndarray:
    """Solver-independent orthonormal basis of span(vecs).

    Computational basis vectors are projected onto the subspace and
    orthonormalized in index order, so a degenerate eigenspace always yields
    the same basis (``I/d`` gives ``e_0, e_1, ...``).
    """
    dim, k = vecs.shape
    proj = vecs @ vecs.conj().T
    basis = []
    for i in range(dim):
        w = proj[:, i].copy()
        for b in basis:
            w -= b * np.vdot(b, w)
        norm = np.linalg.norm(w)
        if norm > 1e-6:
            w /= norm
            # one re-orthogonalization pass for stability
            for b in basis:
                w -= b * np.vdot(b, w)
            basis.append(w / np.linalg.norm(w))
        if len(basis) == k:
            break
    return np.column_stack(basis)


def eigh_desc(m, degeneracy_tol: float = 1e-9) -> SpectralDecomposition:
    """Hermitian eigendecomposition, eigenvalues sorted descending.

    Eigenvalues closer than ``degeneracy_tol`` (relative to the spectral
    radius) are treated as one eigenspace, whose basis is rebuilt
    canonically.  Each eigenvector is then rotated so that its first
    largest-magnitude component is real and non-negative.
    """
    h = as_hermitian(m)
    try:
        evals, evecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(h)
        raise EigenSolverError(
            f"eigh failed on {h.shape[0]}x{h.shape[0]} matrix "
            f"(max |entry| {np.max(np.abs(h)):.3e}, condition number {cond:.3e})") from exc
    evals = evals[::-1].copy()
    evecs = evecs[:, ::-1].copy()

    scale = max(1.0, float(np.max(np.abs(evals))))
    start = 0
    n = len(evals)
    while start < n:
        stop = start + 1
        while stop < n and evals[start] - evals[stop] <= degeneracy_tol * scale:
            stop += 1
        if stop - start > 1:
            evecs[:, start:stop] = _canonical_subspace_basis(evecs[:, start:stop])
        start = stop
    for k in range(n):
        evecs[:, k] = _fix_phase(evecs[:, k])
    return SpectralDecomposition(evals, evecs)


def kron(*ops) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def partial_trace(m, d1: int, d2: int, which: str = "second") -> np.ndarray:
    """Trace out one factor of an operator on ``C^d1 (x) C^d2``.

    :param which: ``"second"`` returns a ``d1 x d1`` matrix, ``"first"`` a
        ``d2 x d2`` matrix.
    """
    arr = np.asarray(m, dtype=complex)
    if arr.shape != (d1 * d2, d1 * d2):
        raise MatrixError(f"expected a {d1 * d2}x{d1 * d2} matrix for dims ({d1}, {d2}), "
                          f"got {arr.shape}")
    t = arr.reshape(d1, d2, d1, d2)
    if which == "second":
        return np.einsum("ajbj->ab", t)
    if which == "first":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"which must be 'first' or 'second', got {which!r}")


def gibbs(h, beta: float) -> np.ndarray:
    """Thermal state ``exp(-beta H) / Z``, computed spectrally with a shift."""
    if not np.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta!r}")
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta!r}")
    spec = eigh_desc(h)
    energies = spec.eigenvalues
    # shift by the ground energy so the largest weight is exactly 1
    weights = np.exp(-beta * (energies - energies.min()))
    weights /= weights.sum()
    v = spec.eigenvectors
    rho = (v * weights) @ v.conj().T
    return (rho + rho.conj().T) / 2


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b`` for Hermitian arguments."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise MatrixError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    diff = (diff + diff.conj().T) / 2
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def vec(m) -> np.ndarray:
    """Row-stacking vectorization, returned as a column vector."""
    arr = np.asarray(m, dtype=complex)
    return arr.reshape(-1, 1)


def unvec(v, shape: Tuple[int, int]) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape(shape)


def expectation(rho, v) -> float:
    """``<v|rho|v>`` (real part)."""
    v = np.asarray(v, dtype=complex).ravel()
    return float(np.vdot(v, np.asarray(rho) @ v).real)


def is_unitary(u, tol: float = 1e-10) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    eye = np.eye(u.shape[0])
    return bool(np.max(np.abs(u @ u.conj().T - eye)) <= tol
                and np.max(np.abs(u.conj().T @ u - eye)) <= tol)


def orthonormal_completion(v) -> np.ndarray:
    """Unitary whose first column is the unit vector ``v``.

    The remaining columns are Gram-Schmidt images of the computational basis,
    so for ``v = e_0`` the result is the identity.
    """
    v = np.asarray(v, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    dim = len(v)
    cols = [v]
    for i in range(dim):
        w = ket(i, dim)
        for c in cols:
            w -= c * np.vdot(c, w)
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            w /= norm
            for c in cols:
                w -= c * np.vdot(c, w)
            cols.append(w / np.linalg.norm(w))
        if len(cols) == dim:
            break
    return np.column_stack(cols)


def random_density(dim: int, rng: np.random.Generator, rank: int = None) -> np.ndarray:
    """Random density matrix from the induced (Ginibre) measure."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return (rho + rho.conj().T) / 2


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with the phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2
