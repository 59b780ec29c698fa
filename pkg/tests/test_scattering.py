import numpy as np
import pytest

from stabchan import channel as ch
from stabchan import qmat, scattering as sc
from stabchan.qmat import MatrixError
from stabchan.scattering import CollisionSpec

from conftest import max_abs

RHO_X = np.diag([0.75, 0.25])
H_Y = np.diag([0.0, 1.0])
BETA = np.log(3)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def random_spec(rng):
    dx, dy = (int(x) for x in rng.integers(1, 4, size=2))
    rank = int(rng.integers(1, dx + 1))
    return CollisionSpec(qmat.random_unitary(dx * dy, rng),
                         qmat.random_density(dx, rng, rank=rank), dy)


class TestPartialSwap:
    def test_endpoints(self):
        assert max_abs(sc.partial_swap(0.0), np.eye(4)) == 0
        assert max_abs(sc.partial_swap(np.pi / 2), 1j * SWAP) < 1e-15

    def test_quarter(self):
        u = sc.partial_swap(np.pi / 4)
        assert max_abs(u, (np.eye(4) + 1j * SWAP) / np.sqrt(2)) < 1e-15
        assert max_abs(u @ u.conj().T, np.eye(4)) <= 1e-12

    def test_swap_definition(self):
        for d in (2, 3):
            s = sc.swap(d)
            for i in range(d):
                for j in range(d):
                    a, b = qmat.ket(i, d), qmat.ket(j, d)
                    assert max_abs(s @ np.kron(a, b), np.kron(b, a)) == 0

    def test_guard(self):
        with pytest.raises(ValueError):
            sc.partial_swap(0.1, d=1)


class TestSpec:
    def test_rejects_non_unitary(self):
        with pytest.raises(MatrixError, match="unitary"):
            CollisionSpec(2 * np.eye(4), RHO_X, 2)

    def test_rejects_bad_dims(self):
        with pytest.raises(MatrixError):
            CollisionSpec(np.eye(6), RHO_X, 2)


class TestKraus:
    def test_identity(self, rng):
        rho_x = qmat.random_density(3, rng)
        spec = CollisionSpec(np.eye(6), rho_x, 2)
        choi = sc.collision_choi(spec)
        assert max_abs(choi.mat, ch.identity_choi(2).mat) < 1e-14

    def test_swap_replacement(self, rng):
        spec = CollisionSpec(SWAP, RHO_X, 2)
        k = sc.collision_kraus(spec)
        for _ in range(100):
            rho_y = qmat.random_density(2, rng)
            assert max_abs(ch.apply_kraus(k, rho_y), RHO_X) <= 1e-12
        assert max_abs(sc.collision_choi(spec).mat, np.kron(RHO_X, np.eye(2))) <= 1e-12

    def test_phase_drops(self, rng):
        a = sc.collision_choi(CollisionSpec(SWAP, RHO_X, 2))
        b = sc.collision_choi(CollisionSpec(sc.partial_swap(np.pi / 2), RHO_X, 2))
        assert max_abs(a.mat, b.mat) < 1e-15

    def test_completeness_random(self, rng):
        for _ in range(100):
            k = sc.collision_kraus(random_spec(rng))
            assert max_abs(k.completeness(), np.eye(k.d_in)) <= 1e-10

    def test_two_paths_agree(self, rng):
        for _ in range(100):
            spec = random_spec(rng)
            direct = ch.choi_from_map(lambda r: sc.collision_map(spec, r), spec.d_Y, spec.d_Y)
            assert max_abs(sc.collision_choi(spec).mat, direct.mat) <= 1e-10

    def test_degenerate_bath_basis_independent(self, rng):
        s = qmat.random_unitary(6, rng)
        base = sc.collision_choi(CollisionSpec(s, np.eye(3) / 3, 2)).mat
        # the same matrix after a basis change that leaves I/3 invariant up to rounding
        u = qmat.random_unitary(3, rng)
        rotated = CollisionSpec(s, u @ (np.eye(3) / 3) @ u.conj().T, 2)
        assert max_abs(sc.collision_choi(rotated).mat, base) <= 1e-9
        # and against an explicit Kraus set built in the rotated eigenbasis
        ops = [np.sqrt(1 / 3) * np.einsum("x,xayb,y->ab", u[:, i].conj(),
                                          s.reshape(3, 2, 3, 2), u[:, j])
               for j in range(3) for i in range(3)]
        assert max_abs(ch.kraus_to_choi(ch.KrausSet(ops)).mat, base) <= 1e-9


class TestPartialSwapChannel:
    def test_fixed_point(self):
        spec = CollisionSpec(sc.partial_swap(np.pi / 4), RHO_X, 2)
        c = sc.collision_choi(spec)
        assert ch.is_trace_preserving(c, 1e-10)
        assert ch.is_completely_positive(c)
        fp = ch.fixed_point(c)
        assert fp.unique and max_abs(fp.state, RHO_X) <= 1e-10

    def test_bath_is_fixed(self, rng):
        for _ in range(20):
            d = int(rng.integers(2, 4))
            rho_x = qmat.random_density(d, rng)
            spec = CollisionSpec(sc.partial_swap(rng.uniform(0, np.pi), d), rho_x, d)
            assert max_abs(sc.collision_map(spec, rho_x), rho_x) <= 1e-10


class TestThermalMembership:
    def test_swap(self):
        rho_c = qmat.gibbs(H_Y, BETA)
        rep = sc.thermal_membership(CollisionSpec(SWAP, rho_c, 2), H_Y, BETA)
        assert rep.fixed_point_match and rep.fixed_point_unique
        assert rep.in_family
        assert max_abs(rep.completion, rho_c) <= 1e-12

    def test_partial_swap(self):
        rho_c = qmat.gibbs(H_Y, BETA)
        rep = sc.thermal_membership(CollisionSpec(sc.partial_swap(np.pi / 4), rho_c, 2), H_Y, BETA)
        assert rep.fixed_point_match
        assert not rep.in_family and rep.completion is None
        assert "coherence" in rep.reason

    def test_identity(self):
        rep = sc.thermal_membership(CollisionSpec(np.eye(4), RHO_X, 2), H_Y, BETA)
        assert not rep.fixed_point_unique and rep.fixed_point_multiplicity == 4
        assert not rep.fixed_point_match and not rep.in_family

    def test_mismatched_hamiltonian(self):
        with pytest.raises(MatrixError):
            sc.thermal_membership(CollisionSpec(SWAP, RHO_X, 2), np.eye(3), BETA)
