"""Optimality certificates for the minimum-trace stabilizer program.

Primal:  minimize Tr[Z]  s.t.  Tr_in[Z (I (x) sigma^T)] >= sigma,  Z >= 0
Dual:    maximize Tr[W sigma]  s.t.  W^T (x) sigma^T <= I,  W >= 0

The closed-form pair ``Z = sigma (x) P^T / lam`` and ``W = I / lam`` are
feasible with equal objective ``1 / lam``, which certifies optimality without
running a solver.  :func:`brute_force_min_trace` is an independent,
solver-free cross-check for small dimensions.
"""
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from . import qmat
from .channel import ChoiMatrix, apply_choi
from .stabilizer import StabilizerTarget, min_choi

CERT_TOL = 1e-10
PENALTY = 1e3


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    violation: float
    psd_min_eigenvalue: float
    constraint_eigenvalue: float

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class CertificateReport:
    primal_trace: float
    dual_value: float
    gap: float
    primal_feasible: Feasibility
    dual_feasible: Feasibility
    tol: float
    failure: Optional[str] = None

    @property
    def certified(self) -> bool:
        return self.primal_feasible.ok and self.dual_feasible.ok and self.gap <= self.tol

    def to_json(self) -> dict:
        return {
            "primal_trace": self.primal_trace,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "primal_feasible": asdict(self.primal_feasible),
            "dual_feasible": asdict(self.dual_feasible),
            "certified": self.certified,
            "failure": self.failure,
        }


def primal_constraint(z, sigma) -> np.ndarray:
    """``Tr_in[Z (I (x) sigma^T)] - sigma``; PSD for feasible ``Z``."""
    z = z if isinstance(z, ChoiMatrix) else ChoiMatrix(z, sigma.shape[0], sigma.shape[0])
    m = apply_choi(z, sigma) - sigma
    return (m + m.conj().T) / 2


def primal_feasible(z, sigma, tol: float = CERT_TOL) -> Feasibility:
    sigma = qmat.as_density(sigma, name="sigma")
    mat = z.mat if isinstance(z, ChoiMatrix) else qmat.as_hermitian(z, name="Z")
    if mat.shape != (sigma.shape[0] ** 2,) * 2:
        raise qmat.MatrixError(f"Z must be {sigma.shape[0] ** 2} square, got {mat.shape}")
    zmin = float(np.linalg.eigvalsh(mat)[0])
    cmin = float(np.linalg.eigvalsh(primal_constraint(mat, sigma))[0])
    violation = max(0.0, -zmin, -cmin)
    return Feasibility(violation <= tol, violation, zmin, cmin)


def dual_feasible(w, sigma, tol: float = CERT_TOL) -> Feasibility:
    """``constraint_eigenvalue`` is the largest eigenvalue of ``W^T (x) sigma^T``."""
    sigma = qmat.as_density(sigma, name="sigma")
    w = qmat.as_hermitian(w, name="W")
    if w.shape != sigma.shape:
        raise qmat.MatrixError(f"W must match sigma's shape {sigma.shape}, got {w.shape}")
    wmin = float(np.linalg.eigvalsh(w)[0])
    cmax = float(np.linalg.eigvalsh(np.kron(w.T, sigma.T))[-1])
    violation = max(0.0, -wmin, cmax - 1.0)
    return Feasibility(violation <= tol, violation, wmin, cmax)


def dual_value(w, sigma) -> float:
    return float(np.trace(np.asarray(w) @ np.asarray(sigma)).real)


def certify_optimality(sigma, tol: float = CERT_TOL) -> CertificateReport:
    target = StabilizerTarget.from_state(sigma, warn=False)
    z = min_choi(target)
    w = np.eye(target.dim) / target.lambda_max
    pf = primal_feasible(z, target.sigma, tol)
    df = dual_feasible(w, target.sigma, tol)
    primal = float(np.trace(z.mat).real)
    dual = dual_value(w, target.sigma)
    gap = abs(primal - dual)
    failures = [name for name, ok in (("primal certificate", pf.ok), ("dual certificate", df.ok),
                                      ("duality gap", gap <= tol)) if not ok]
    return CertificateReport(primal, dual, gap, pf, df, tol,
                             ", ".join(failures) if failures else None)


def repair_scale(z: np.ndarray, sigma: np.ndarray) -> Optional[np.ndarray]:
    """Make ``z`` primal feasible: clip to PSD, then scale up just enough.

    Returns ``None`` when no scaling works (the constraint image is singular
    on the support of sigma).
    """
    evals, evecs = np.linalg.eigh((z + z.conj().T) / 2)
    z = (evecs * np.clip(evals, 0, None)) @ evecs.conj().T
    d = sigma.shape[0]
    m = apply_choi(ChoiMatrix(z, d, d), sigma)
    m = (m + m.conj().T) / 2
    mvals, mvecs = np.linalg.eigh(m)
    if mvals[0] <= 1e-12 * max(1.0, mvals[-1]):
        return None
    inv_sqrt = (mvecs / np.sqrt(mvals)) @ mvecs.conj().T
    scale = float(np.linalg.eigvalsh(inv_sqrt @ sigma @ inv_sqrt)[-1])
    z = z * (scale * (1 + 1e-12))
    return (z + z.conj().T) / 2


def _hermitian_basis(n: int):
    out = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1
        out.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = e[j, i] = 1 / np.sqrt(2)
            out.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[i, j], e[j, i] = 1j / np.sqrt(2), -1j / np.sqrt(2)
            out.append(e)
    return out


@dataclass(frozen=True)
class OracleResult:
    value: float
    warm_value: float
    cold_value: float
    cold_start_value: float
    evaluations: int


def _repaired_trace(z, sigma):
    fixed = repair_scale(z, sigma)
    return np.inf if fixed is None else float(np.trace(fixed).real)


def _penalized_trace(z, sigma):
    d = sigma.shape[0]
    neg_z = np.clip(np.linalg.eigvalsh(z), None, 0).sum()
    c = np.einsum("aicj,ij->ac", z.reshape(d, d, d, d), sigma) - sigma
    neg_c = np.clip(np.linalg.eigvalsh((c + c.conj().T) / 2), None, 0).sum()
    return float(np.trace(z).real) - PENALTY * (neg_z + neg_c)


def _local_search(z, objective, basis, rng, budget, step):
    """Random coordinate search; the step halves after a run of misses."""
    best = objective(z)
    evals = 1
    misses = 0
    while evals < budget and step > 1e-10:
        direction = basis[rng.integers(len(basis))]
        cand = z + (step if rng.random() < 0.5 else -step) * direction
        val = objective(cand)
        evals += 1
        if val < best:
            z, best, misses = cand, val, 0
        else:
            misses += 1
            if misses > 2 * len(basis):
                step *= 0.5
                misses = 0
    return z, evals


def brute_force_min_trace(sigma, budget: int = 3000, seed: int = 42,
                          restarts: int = 2) -> OracleResult:
    """Penalty local search for the minimum trace, with feasibility repair.

    Starts from the closed-form optimum and from ``restarts`` random PSD
    points; every run is repaired to exact feasibility before its trace is
    read, so the result is an upper bound that can never undercut the true
    optimum beyond round-off.

    :param budget: objective evaluations per start.
    """
    sigma = qmat.as_density(sigma, name="sigma")
    d = sigma.shape[0]
    if d > 3:
        raise ValueError(f"brute-force oracle is limited to d <= 3, got d = {d}")
    rng = np.random.default_rng(seed)
    basis = _hermitian_basis(d * d)
    total = 0

    target = StabilizerTarget.from_state(sigma, warn=False)
    warm, n = _local_search(min_choi(target).mat.copy(), lambda z: _penalized_trace(z, sigma),
                            basis, rng, budget, 1e-3)
    total += n
    values = {"warm": [], "cold": [], "start": []}
    fixed = repair_scale(warm, sigma)
    if fixed is not None:
        values["warm"].append(float(np.trace(fixed).real))

    for _ in range(restarts):
        g = rng.normal(size=(d * d, d * d)) + 1j * rng.normal(size=(d * d, d * d))
        start = repair_scale(g @ g.conj().T, sigma)
        if start is None:
            continue
        values["start"].append(float(np.trace(start).real))
        z, n = _local_search(start, lambda z: _repaired_trace(z, sigma), basis, rng, budget,
                             0.1 * np.trace(start).real / d)
        total += n
        fixed = repair_scale(z, sigma)
        if fixed is not None:
            values["cold"].append(float(np.trace(fixed).real))

    found = values["warm"] + values["cold"]
    if not found:
        raise OracleError("no feasible point found within the evaluation budget")
    return OracleResult(min(found), min(values["warm"], default=np.inf),
                        min(values["cold"], default=np.inf),
                        min(values["start"], default=np.inf), total)
