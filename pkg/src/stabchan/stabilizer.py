"""Channels with a prescribed fixed point.

Given a target state ``sigma`` with largest eigenvalue ``lam`` and eigenvector
``v``, write ``P = |v><v|``.  The minimum-trace stabilizer is

    Z = sigma (x) P^T / lam,         Phi_Z(rho) = <v|rho|v> / lam * sigma

and every member of the trace-preserving completion family is

    C[sigma, B] = sigma (x) P^T / lam + B (x) (I - P^T / lam),
    Phi(rho) = p sigma + (1 - p) B,   p = <v|rho|v> / lam.
"""
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import qmat
from .channel import ChoiMatrix, KrausSet, apply_choi, is_trace_preserving
from .qmat import MatrixError

DEGENERACY_TOL = 1e-9
VALIDITY_TOL = 1e-10
STAGNATION_WINDOW = 50


class DegenerateSpectrumWarning(UserWarning):
    """The largest eigenvalue of the target is degenerate; v_max is a convention."""


class ValidityError(ValueError):
    """Completion state violates <v|B|v> <= lambda_max."""


class DomainError(ValueError):
    """Input state lies outside the physical domain of the family map."""


class NotInFamilyError(ValueError):
    """Channel is not of the form C[sigma, B] for the given target."""


@dataclass(frozen=True)
class StabilizerTarget:
    """Target state with its dominant eigenpair.

    Build with :meth:`from_state`.
    """
    sigma: np.ndarray
    spectrum: qmat.SpectralDecomposition = field(repr=False)
    lambda_max: float
    v_max: np.ndarray = field(repr=False)
    degenerate: bool

    @classmethod
    def from_state(cls, sigma, warn: bool = True) -> "StabilizerTarget":
        sigma = qmat.as_density(sigma, name="sigma")
        spec = qmat.eigh_desc(sigma, degeneracy_tol=DEGENERACY_TOL)
        lam = float(spec.eigenvalues[0])
        v = spec.eigenvectors[:, 0].copy()
        degenerate = len(spec) > 1 and spec.eigenvalues[1] > lam - DEGENERACY_TOL
        if degenerate and warn:
            warnings.warn(f"largest eigenvalue {lam:.6g} of sigma is degenerate; "
                          "using the canonical first eigenvector as v_max",
                          DegenerateSpectrumWarning, stacklevel=2)
        for arr in (sigma, v):
            arr.setflags(write=False)
        return cls(sigma, spec, lam, v, bool(degenerate))

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    @property
    def projector(self) -> np.ndarray:
        return qmat.projector(self.v_max)

    def overlap(self, rho) -> float:
        """``<v_max|rho|v_max> / lambda_max``."""
        return qmat.expectation(rho, self.v_max) / self.lambda_max


def _target(t) -> StabilizerTarget:
    return t if isinstance(t, StabilizerTarget) else StabilizerTarget.from_state(t)


def min_choi(target) -> ChoiMatrix:
    """Minimum-trace Choi matrix stabilizing ``target.sigma``; trace ``1/lambda_max``."""
    t = _target(target)
    mat = np.kron(t.sigma, t.projector.T) / t.lambda_max
    return ChoiMatrix(mat, t.dim, t.dim)


def min_kraus(target) -> KrausSet:
    """Kraus operators ``sqrt(lam_i / lam_max) |v_i><v_max|``, zero eigenvalues skipped."""
    t = _target(target)
    vmax = t.v_max
    ops = []
    for lam, v in zip(t.spectrum.eigenvalues, t.spectrum.eigenvectors.T):
        if lam <= 0:
            continue
        ops.append(np.sqrt(lam / t.lambda_max) * np.outer(v, vmax.conj()))
    return KrausSet(ops)


def ancilla_dilation(kraus: KrausSet) -> np.ndarray:
    """Block-diagonal operator ``A = diag(K_1, ..., K_m)`` on ancilla (x) system.

    ``Tr_anc[A (I_m (x) rho) A^dagger] = sum_k K_k rho K_k^dagger``.
    """
    if kraus.d_out != kraus.d_in:
        raise MatrixError("ancilla dilation needs square Kraus operators")
    d, m = kraus.d_in, len(kraus)
    a = np.zeros((m * d, m * d), dtype=complex)
    for k, op in enumerate(kraus.operators):
        a[k * d:(k + 1) * d, k * d:(k + 1) * d] = op
    return a


def apply_dilation(a: np.ndarray, rho, n_blocks: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    big = a @ np.kron(np.eye(n_blocks), rho) @ a.conj().T
    return qmat.partial_trace(big, n_blocks, d, which="first")


@dataclass(frozen=True)
class FamilyChannel:
    """Member ``C[sigma, B]`` of the trace-preserving completion family."""
    target: StabilizerTarget
    completion: np.ndarray
    overlap_q: float

    @classmethod
    def build(cls, target, b) -> "FamilyChannel":
        t = _target(target)
        b = qmat.as_density(b, name="B")
        if b.shape != t.sigma.shape:
            raise MatrixError(f"B must be {t.dim}x{t.dim}, got {b.shape}")
        weight = qmat.expectation(b, t.v_max)
        if weight > t.lambda_max + VALIDITY_TOL:
            raise ValidityError(
                f"<v_max|B|v_max> = {weight:.12g} exceeds lambda_max = {t.lambda_max:.12g}; "
                "the completion family requires <v_max|B|v_max> <= lambda_max")
        b.setflags(write=False)
        return cls(t, b, weight / t.lambda_max)

    def choi(self) -> ChoiMatrix:
        return tp_family_choi(self.target, self.completion)

    def apply(self, rho, strict: bool = True) -> np.ndarray:
        return apply_family(self, rho, strict=strict).state


def tp_family_choi(target, b) -> ChoiMatrix:
    fam = b if isinstance(b, FamilyChannel) else FamilyChannel.build(target, b)
    t = fam.target
    pt = t.projector.T / t.lambda_max
    mat = np.kron(t.sigma, pt) + np.kron(fam.completion, np.eye(t.dim) - pt)
    return ChoiMatrix(mat, t.dim, t.dim)


@dataclass(frozen=True)
class FamilyOutput:
    state: np.ndarray
    p: float
    in_domain: bool


def apply_family(fam: FamilyChannel, rho, strict: bool = True) -> FamilyOutput:
    """One application ``p sigma + (1 - p) B``.

    With ``strict`` an input whose overlap ``p`` exceeds 1 raises
    :class:`DomainError`; otherwise the linear extension is returned and
    ``in_domain`` is False.
    """
    rho = qmat.as_hermitian(rho, name="rho")
    p = fam.target.overlap(rho)
    in_domain = p <= 1 + VALIDITY_TOL
    if strict and not in_domain:
        raise DomainError(f"<v_max|rho|v_max> / lambda_max = {p:.12g} > 1; "
                          "input lies outside the family's domain")
    tr = np.trace(rho).real
    out = p * fam.target.sigma + (tr - p) * fam.completion
    return FamilyOutput((out + out.conj().T) / 2, p, bool(in_domain))


@dataclass(frozen=True)
class IterationStep:
    n: int
    state: np.ndarray = field(repr=False)
    p_n: float
    weight_B: float
    dist_to_sigma: float


@dataclass
class IterationTrace:
    """Record of ``rho_0, Phi[rho_0], Phi^2[rho_0], ...``.

    ``p_n = <v_max|rho_n|v_max> / lambda_max`` and ``weight_B = 1 - p_n`` is the
    weight the next application gives to ``B``; without free evolution it
    equals ``(1 - q)^n (1 - p_0)``.
    """
    steps: List[IterationStep]
    overlap_q: float
    stagnant: bool = False

    @property
    def final(self) -> IterationStep:
        return self.steps[-1]

    @property
    def converged(self) -> bool:
        return not self.stagnant

    def rows(self):
        return [(s.n, s.p_n, s.weight_B, s.dist_to_sigma) for s in self.steps]


def free_evolution_map(h_y, tau: float):
    """``rho -> exp(-i tau H) rho exp(i tau H)`` with hbar = 1."""
    spec = qmat.eigh_desc(h_y)
    v = spec.eigenvectors
    u = (v * np.exp(-1j * tau * spec.eigenvalues)) @ v.conj().T
    return lambda rho: u @ rho @ u.conj().T


def iterate(fam: FamilyChannel, rho0, n_steps: int, h_y=None, taus: Optional[Sequence[float]] = None,
            tol: float = 1e-9) -> IterationTrace:
    """Iterate the family channel, optionally interleaving free evolution.

    Step ``n`` is ``eps_{tau_n}(Phi[rho_{n-1}])``.  The trace is flagged
    ``stagnant`` when ``q`` vanishes and the distance to sigma stays above
    ``tol`` without decreasing over the last ``min(50, n_steps)`` steps.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    rho = qmat.as_density(rho0, name="rho0")
    evolve = None
    if h_y is not None or taus is not None:
        if h_y is None or taus is None:
            raise ValueError("free evolution needs both H_Y and a tau schedule")
        if len(taus) != n_steps:
            raise ValueError(f"tau schedule has {len(taus)} entries, expected {n_steps}")
        h_y = qmat.as_hermitian(h_y, name="H_Y")
        if h_y.shape != rho.shape:
            raise MatrixError(f"H_Y must be {rho.shape[0]}x{rho.shape[0]}, got {h_y.shape}")
        evolve = [free_evolution_map(h_y, tau) for tau in taus]

    t = fam.target

    def record(n, state):
        p = t.overlap(state)
        return IterationStep(n, state, p, 1.0 - p, qmat.trace_distance(state, t.sigma))

    steps = [record(0, rho)]
    for n in range(1, n_steps + 1):
        rho = apply_family(fam, rho, strict=True).state
        if evolve is not None:
            rho = evolve[n - 1](rho)
            rho = (rho + rho.conj().T) / 2
        steps.append(record(n, rho))

    stagnant = False
    window = min(STAGNATION_WINDOW, n_steps)
    if fam.overlap_q <= VALIDITY_TOL and window > 0:
        tail = [s.dist_to_sigma for s in steps[-(window + 1):]]
        stagnant = all(d > tol for d in tail) and all(
            b >= a - 1e-12 for a, b in zip(tail, tail[1:]))
    return IterationTrace(steps, fam.overlap_q, stagnant)


def _orthogonal_basis(t: StabilizerTarget) -> np.ndarray:
    """Unitary whose first column is v_max."""
    return qmat.orthonormal_completion(t.v_max)


def extract_completion(c: ChoiMatrix, target, tol: float = 1e-9) -> np.ndarray:
    """Recover ``B`` from a channel assumed to be ``C[sigma, B]``.

    ``B`` is read off as the image of ``|w><w|`` for the basis states ``w``
    orthogonal to v_max.  Each image must agree, and the off-diagonal units
    ``|a><b|`` of the v_max-adapted basis must map to zero, as they do for
    every member of the family.

    :raises NotInFamilyError: if any of these consistency checks fail or the
        recovered ``B`` is not a state.
    """
    t = _target(target)
    d = t.dim
    if not c.square or c.d_in != d:
        raise MatrixError(f"channel must act on dimension {d}")
    if d < 2:
        raise MatrixError("completion is undefined for d < 2")
    u = _orthogonal_basis(t)
    images = [apply_choi(c, qmat.projector(u[:, k])) for k in range(1, d)]
    b = images[0]
    for k, img in enumerate(images[1:], start=2):
        spread = float(np.max(np.abs(img - b)))
        if spread > tol:
            raise NotInFamilyError(
                f"images of orthogonal basis states 1 and {k} differ by {spread:.3e}")
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            img = apply_choi(c, np.outer(u[:, i], u[:, j].conj()))
            size = float(np.max(np.abs(img)))
            if size > tol:
                raise NotInFamilyError(
                    f"coherence |u_{i}><u_{j}| has non-zero image (max entry {size:.3e})")
    b = (b + b.conj().T) / 2
    if not qmat.is_density(b, psd_tol=tol, trace_tol=tol):
        raise NotInFamilyError(
            f"recovered B is not a state (trace {np.trace(b).real:.6g}, "
            f"min eigenvalue {np.linalg.eigvalsh(b)[0]:.3e})")
    return b


@dataclass(frozen=True)
class MembershipResult:
    ok: bool
    completion: Optional[np.ndarray] = field(default=None, repr=False)
    reason: str = ""
    residual: Optional[float] = None

    def __bool__(self):
        return self.ok


def is_in_family(c: ChoiMatrix, target, tol: float = 1e-9) -> MembershipResult:
    t = _target(target)
    if not c.square or c.d_in != t.dim:
        return MembershipResult(False, reason=f"channel dimensions ({c.d_out}, {c.d_in}) "
                                              f"do not match target dimension {t.dim}")
    tp = is_trace_preserving(c, tol=tol)
    if not tp:
        return MembershipResult(False, reason=f"not trace preserving (defect {tp.defect:.3e})")
    try:
        b = extract_completion(c, t, tol)
        member = tp_family_choi(t, b)
    except (NotInFamilyError, ValidityError, MatrixError) as exc:
        return MembershipResult(False, reason=str(exc))
    residual = float(np.max(np.abs(c.mat - member.mat)))
    if residual > tol:
        return MembershipResult(False, b, f"residual {residual:.3e} against C[sigma, B]", residual)
    return MembershipResult(True, b, "", residual)


def is_lossless(rho, target, tol: float = 1e-10) -> bool:
    """True when the minimal stabilizer preserves the trace of ``rho``."""
    t = _target(target)
    return abs(qmat.expectation(rho, t.v_max) - t.lambda_max) <= tol


def make_lossless_state(target, weights: Sequence[float], u_rest=None,
                        require_half: bool = False) -> np.ndarray:
    """State ``U D U^dagger`` with ``D = diag(lam_max, (1 - lam_max) * weights)``.

    ``U`` has v_max as its first column and ``u_rest`` acting on a fixed
    orthonormal completion of v_max (the computational basis when
    ``v_max = e_0``).

    :param require_half: enforce ``lambda_max >= 1/2``.
    """
    t = _target(target)
    d = t.dim
    w = np.asarray(weights, dtype=float)
    if w.shape != (d - 1,):
        raise ValueError(f"need {d - 1} weights, got {w.size}")
    if np.any(w < 0):
        raise ValueError(f"weights must be non-negative, got {w.tolist()}")
    if abs(w.sum() - 1.0) > 1e-10:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    if require_half and t.lambda_max < 0.5:
        raise ValueError(f"lambda_max = {t.lambda_max:.6g} < 1/2")
    u_rest = np.eye(d - 1) if u_rest is None else qmat.as_matrix(u_rest, "U_rest")
    if u_rest.shape != (d - 1, d - 1) or not qmat.is_unitary(u_rest, 1e-10):
        raise ValueError("U_rest must be a (d-1)x(d-1) unitary")
    base = _orthogonal_basis(t)
    block = np.eye(d, dtype=complex)
    block[1:, 1:] = u_rest
    u = base @ block
    diag = np.concatenate([[t.lambda_max], (1 - t.lambda_max) * w])
    rho = (u * diag) @ u.conj().T
    return (rho + rho.conj().T) / 2
