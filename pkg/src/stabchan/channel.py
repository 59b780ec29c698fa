"""Choi and Kraus representations of linear maps, with structural checks.

Choi matrices are ordered output (x) input::

    C = sum_ij Phi(E_ij) (x) E_ij,      Phi(rho) = Tr_in[C (I (x) rho^T)]

which with row-stacking ``vec`` gives ``C = sum_k vec(K_k) vec(K_k)^dagger``.
"""
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from . import qmat
from .qmat import MatrixError

FIXED_POINT_TOL = 1e-8
KRAUS_RANK_TOL = 1e-12


class NotPositiveError(MatrixError):
    """Choi matrix has a negative eigenvalue beyond tolerance."""


class NoFixedPointError(ArithmeticError):
    """Transfer matrix has no eigenvalue within tolerance of 1."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi matrix of a Hermiticity-preserving map ``C^d_in -> C^d_out``."""
    mat: np.ndarray
    d_out: int
    d_in: int

    def __post_init__(self):
        if self.d_out < 1 or self.d_in < 1:
            raise MatrixError(f"dimensions must be positive, got d_out={self.d_out}, "
                              f"d_in={self.d_in}")
        mat = qmat.as_hermitian(self.mat, name="Choi matrix")
        n = self.d_out * self.d_in
        if mat.shape != (n, n):
            raise MatrixError(f"Choi matrix must be {n}x{n} for d_out={self.d_out}, "
                              f"d_in={self.d_in}, got {mat.shape}")
        object.__setattr__(self, "mat", _freeze(mat))

    @property
    def square(self) -> bool:
        return self.d_out == self.d_in

    def __call__(self, rho) -> np.ndarray:
        return apply_choi(self, rho)


@dataclass(frozen=True)
class KrausSet:
    operators: tuple

    def __init__(self, operators: Sequence):
        ops = [qmat.as_matrix(k, name="Kraus operator") for k in operators]
        if not ops:
            raise MatrixError("a Kraus set needs at least one operator")
        shape = ops[0].shape
        for k in ops[1:]:
            if k.shape != shape:
                raise MatrixError(f"Kraus operators must share one shape, got {shape} "
                                  f"and {k.shape}")
        object.__setattr__(self, "operators", tuple(_freeze(k) for k in ops))

    @property
    def d_out(self) -> int:
        return self.operators[0].shape[0]

    @property
    def d_in(self) -> int:
        return self.operators[0].shape[1]

    def __len__(self):
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)

    def completeness(self) -> np.ndarray:
        """``sum_k K_k^dagger K_k`` (the identity for trace-preserving sets)."""
        return sum(k.conj().T @ k for k in self.operators)


def identity_choi(dim: int) -> ChoiMatrix:
    v = qmat.vec(np.eye(dim))
    return ChoiMatrix(v @ v.conj().T, dim, dim)


def replacement_choi(state) -> ChoiMatrix:
    """Choi of ``rho -> Tr[rho] state``."""
    state = np.asarray(state, dtype=complex)
    d = state.shape[0]
    return ChoiMatrix(np.kron(state, np.eye(d)), d, d)


def choi_from_map(phi, d_out: int, d_in: int) -> ChoiMatrix:
    """Build the Choi matrix by applying ``phi`` to every matrix unit."""
    mat = sum(np.kron(np.asarray(phi(qmat.unit(i, j, d_in)), dtype=complex),
                      qmat.unit(i, j, d_in))
              for i in range(d_in) for j in range(d_in))
    return ChoiMatrix(mat, d_out, d_in)


def apply_choi(c: ChoiMatrix, rho) -> np.ndarray:
    """Apply the map to ``rho``; not necessarily trace preserving."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (c.d_in, c.d_in):
        raise MatrixError(f"input must be {c.d_in}x{c.d_in}, got {rho.shape}")
    t = c.mat.reshape(c.d_out, c.d_in, c.d_out, c.d_in)
    return np.einsum("aicj,ij->ac", t, rho)


def apply_kraus(kraus: KrausSet, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (kraus.d_in, kraus.d_in):
        raise MatrixError(f"input must be {kraus.d_in}x{kraus.d_in}, got {rho.shape}")
    return sum(k @ rho @ k.conj().T for k in kraus.operators)


@dataclass(frozen=True)
class TPReport:
    ok: bool
    defect: float
    reduced: np.ndarray = field(repr=False)

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class CPReport:
    ok: bool
    min_eigenvalue: float

    def __bool__(self):
        return self.ok


def is_trace_preserving(c: ChoiMatrix, tol: float = 1e-10) -> TPReport:
    """Check ``Tr_out[C] = I_in``; ``reduced`` holds ``Tr_out[C]``."""
    reduced = qmat.partial_trace(c.mat, c.d_out, c.d_in, which="first")
    defect = float(np.max(np.abs(reduced - np.eye(c.d_in))))
    return TPReport(defect <= tol, defect, reduced)


def is_completely_positive(c: ChoiMatrix, tol: float = 1e-9) -> CPReport:
    evals = np.linalg.eigvalsh(c.mat)
    lo, hi = float(evals[0]), float(evals[-1])
    return CPReport(lo >= -tol * max(1.0, hi), lo)


def kraus_to_choi(kraus: KrausSet) -> ChoiMatrix:
    mat = sum(qmat.vec(k) @ qmat.vec(k).conj().T for k in kraus.operators)
    return ChoiMatrix(mat, kraus.d_out, kraus.d_in)


def choi_to_kraus(c: ChoiMatrix, tol: float = 1e-9) -> KrausSet:
    """Canonical Kraus operators from the Choi spectrum.

    Eigenvalues at or below ``1e-12 * lambda_max(C)`` are dropped as numerical
    rank deficiency.

    :raises NotPositiveError: if ``C`` has an eigenvalue below
        ``-tol * max(1, lambda_max)`` or no positive support at all.
    """
    evals, evecs = np.linalg.eigh(c.mat)
    lo, hi = float(evals[0]), float(evals[-1])
    if lo < -tol * max(1.0, hi):
        raise NotPositiveError(f"Choi matrix is not PSD: minimum eigenvalue {lo:.3e}")
    if hi <= 0:
        raise NotPositiveError("Choi matrix has no positive support; no Kraus operators")
    keep = evals > KRAUS_RANK_TOL * hi
    ops = [np.sqrt(lam) * qmat.unvec(evecs[:, k], (c.d_out, c.d_in))
           for k, lam in zip(np.flatnonzero(keep)[::-1], evals[keep][::-1])]
    return KrausSet(ops)


def transfer_matrix(c: ChoiMatrix) -> np.ndarray:
    """``T`` with ``T @ vec(rho) = vec(Phi(rho))`` (row-stacking vec)."""
    if not c.square:
        raise MatrixError(f"transfer matrix needs d_out == d_in, got {c.d_out} and {c.d_in}")
    d = c.d_in
    t = c.mat.reshape(d, d, d, d)          # [a, i, c, j]
    return t.transpose(0, 2, 1, 3).reshape(d * d, d * d)


@dataclass(frozen=True)
class FixedPoint:
    """Outcome of a fixed-point search.

    ``multiplicity`` is the dimension of the eigenvalue-1 eigenspace of the
    transfer matrix; ``unique`` is ``multiplicity == 1``.
    """
    state: np.ndarray
    multiplicity: int
    trace_preserving: bool

    @property
    def unique(self) -> bool:
        return self.multiplicity == 1


def fixed_point(c: ChoiMatrix, tol: float = FIXED_POINT_TOL) -> FixedPoint:
    """Fixed state of the channel from the kernel of ``T - I``.

    For a non-unique fixed space the returned state is the projection of the
    maximally mixed state onto that space, which is a fixed state for every
    trace-preserving channel.
    """
    t = transfer_matrix(c)
    d = c.d_in
    n = d * d
    _, svals, vh = np.linalg.svd(t - np.eye(n))
    kernel = vh[svals <= tol * max(1.0, np.linalg.norm(t, 2))].conj().T
    if kernel.shape[1] == 0:
        raise NoFixedPointError(
            f"no eigenvalue of the transfer matrix within {tol:g} of 1 "
            f"(smallest singular value of T - I is {svals[-1]:.3e})")
    tp = is_trace_preserving(c, tol=max(tol, 1e-10)).ok

    if kernel.shape[1] == 1:
        candidates = [kernel[:, 0]]
    else:
        target = qmat.vec(np.eye(d) / d).ravel()
        candidates = [kernel @ (kernel.conj().T @ target)]
        candidates += [kernel[:, k] for k in range(kernel.shape[1])]
    for v in candidates:
        m = qmat.unvec(v, (d, d))
        tr = np.trace(m)
        if abs(tr) <= 1e-12:
            continue
        m = m / tr
        m = (m + m.conj().T) / 2
        return FixedPoint(m, kernel.shape[1], tp)
    raise NoFixedPointError("eigenvalue-1 eigenspace contains no operator with non-zero trace")
