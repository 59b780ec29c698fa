"""Collision channel ``rho_Y -> Tr_X[S (rho_X (x) rho_Y) S^dagger]``.

The joint unitary ``S`` acts on ``X (x) Y`` with the bath ``X`` first.  It is
taken as given; nothing here derives it from a Hamiltonian.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import qmat
from .channel import ChoiMatrix, KrausSet, NoFixedPointError, fixed_point, kraus_to_choi
from .qmat import MatrixError
from .stabilizer import StabilizerTarget, is_in_family

UNITARY_TOL = 1e-10
BATH_RANK_TOL = 1e-12


@dataclass(frozen=True)
class CollisionSpec:
    S: np.ndarray
    rho_X: np.ndarray
    d_Y: int

    def __post_init__(self):
        s = qmat.as_matrix(self.S, "S")
        rho_x = qmat.as_density(self.rho_X, name="rho_X")
        if self.d_Y < 1:
            raise MatrixError(f"d_Y must be positive, got {self.d_Y}")
        n = rho_x.shape[0] * self.d_Y
        if s.shape != (n, n):
            raise MatrixError(f"S must be {n}x{n} for d_X={rho_x.shape[0]}, d_Y={self.d_Y}, "
                              f"got {s.shape}")
        defect = float(np.max(np.abs(s @ s.conj().T - np.eye(n))))
        if defect > UNITARY_TOL:
            raise MatrixError(f"S is not unitary (max |S S^dagger - I| = {defect:.3e})")
        for arr in (s, rho_x):
            arr.setflags(write=False)
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "rho_X", rho_x)

    @property
    def d_X(self) -> int:
        return self.rho_X.shape[0]


def partial_swap(theta: float, d: int = 2) -> np.ndarray:
    """``cos(theta) I + i sin(theta) SWAP`` on ``C^d (x) C^d``."""
    if d < 2:
        raise ValueError(f"partial swap needs d >= 2, got {d}")
    return np.cos(theta) * np.eye(d * d) + 1j * np.sin(theta) * swap(d)


def swap(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1
    return s


def collision_kraus(spec: CollisionSpec) -> KrausSet:
    """Kraus operators ``sqrt(r_j) <r_i|S|r_j>`` over the eigenbasis of rho_X."""
    bath = qmat.eigh_desc(spec.rho_X)
    dx, dy = spec.d_X, spec.d_Y
    cut = BATH_RANK_TOL * max(1.0, float(bath.eigenvalues[0]))
    s = spec.S.reshape(dx, dy, dx, dy)
    ops = []
    for r_j, ket_j in zip(bath.eigenvalues, bath.eigenvectors.T):
        if r_j <= cut:
            continue
        for ket_i in bath.eigenvectors.T:
            block = np.einsum("x,xayb,y->ab", ket_i.conj(), s, ket_j)
            ops.append(np.sqrt(r_j) * block)
    return KrausSet(ops)


def collision_map(spec: CollisionSpec, rho_y) -> np.ndarray:
    """Apply the channel directly, without a Kraus decomposition."""
    rho_y = np.asarray(rho_y, dtype=complex)
    joint = spec.S @ np.kron(spec.rho_X, rho_y) @ spec.S.conj().T
    return qmat.partial_trace(joint, spec.d_X, spec.d_Y, which="first")


def collision_choi(spec: CollisionSpec) -> ChoiMatrix:
    return kraus_to_choi(collision_kraus(spec))


@dataclass(frozen=True)
class MembershipReport:
    thermal_state: np.ndarray = field(repr=False)
    fixed_point: Optional[np.ndarray] = field(repr=False)
    fixed_point_unique: bool
    fixed_point_multiplicity: int
    fixed_point_distance: Optional[float]
    fixed_point_match: bool
    in_family: bool
    completion: Optional[np.ndarray] = field(default=None, repr=False)
    reason: str = ""


def thermal_membership(spec: CollisionSpec, h_y, beta: float,
                       tol: float = 1e-9) -> MembershipReport:
    """Does the collision channel thermalize to ``gibbs(H_Y, beta)``, and is it a
    member of that state's completion family?"""
    h_y = qmat.as_hermitian(h_y, name="H_Y")
    if h_y.shape != (spec.d_Y, spec.d_Y):
        raise MatrixError(f"H_Y must be {spec.d_Y}x{spec.d_Y}, got {h_y.shape}")
    rho_c = qmat.gibbs(h_y, beta)
    choi = collision_choi(spec)

    fp_state, unique, mult, dist = None, False, 0, None
    try:
        fp = fixed_point(choi)
        fp_state, unique, mult = fp.state, fp.unique, fp.multiplicity
        dist = qmat.trace_distance(fp.state, rho_c)
    except NoFixedPointError:
        pass
    match = dist is not None and unique and dist <= tol

    target = StabilizerTarget.from_state(rho_c, warn=False)
    member = is_in_family(choi, target, tol)
    return MembershipReport(rho_c, fp_state, unique, mult, dist, bool(match),
                            member.ok, member.completion if member.ok else None, member.reason)
