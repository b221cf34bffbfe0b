import numpy as np
import pytest
from numpy.testing import assert_allclose

from convexweight import hermitian as hm
from conftest import PAULI_X, PAULI_Y, PAULI_Z, rand_herm, rand_psd


class TestAsHermitian:
    def test_symmetrizes_exactly(self, rng):
        a = rand_herm(rng, 3) + 1e-12 * rng.normal(size=(3, 3))
        h = hm.as_hermitian(a)
        assert np.array_equal(h, h.conj().T)

    def test_rejects_asymmetric(self):
        with pytest.raises(hm.HermitianError):
            hm.as_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_rectangular(self):
        with pytest.raises(hm.HermitianError):
            hm.as_hermitian(np.zeros((2, 3)))


class TestEigh:
    def test_identity(self):
        w, v = hm.eigh(np.eye(2))
        assert_allclose(w, [1.0, 1.0])
        assert_allclose(v @ v.conj().T, np.eye(2), atol=1e-12)

    def test_diagonal(self):
        w, _ = hm.eigh(np.diag([3.0, -1.0]))
        assert_allclose(w, [-1.0, 3.0])

    def test_pauli_x(self):
        w, _ = hm.eigh(PAULI_X)
        assert_allclose(w, [-1.0, 1.0])

    def test_reconstruction_random(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 8))
            h = rand_herm(rng, n, scale=rng.uniform(0.1, 10))
            w, v = hm.eigh(h)
            err = np.abs((v * w) @ v.conj().T - h).max()
            assert err <= 1e-9 * (1 + hm.operator_norm(h))
            assert (np.diff(w) >= -1e-12).all()
            assert np.abs(v.conj().T @ v - np.eye(n)).max() <= 1e-9


class TestKron:
    def test_identities(self):
        assert_allclose(hm.kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_diag_pattern(self):
        out = hm.kron(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
        assert_allclose(out, np.diag([0.0, 1.0, 0.0, 0.0]))

    def test_sign_pattern(self):
        assert_allclose(hm.kron(PAULI_Z, PAULI_Z), np.diag([1.0, -1, -1, 1]))


class TestPartialTrace:
    def test_product_state(self, rng):
        rho = rand_psd(rng, 2)
        sigma = rand_psd(rng, 3)
        sigma /= np.trace(sigma).real
        out = hm.partial_trace(hm.kron(rho, sigma), (2, 3), over="second")
        assert_allclose(out, rho, atol=1e-12)

    def test_bell_marginal(self):
        psi = np.zeros(4)
        psi[0] = psi[3] = 1 / np.sqrt(2)
        proj = np.outer(psi, psi)
        out = hm.partial_trace(proj, (2, 2), over="first")
        assert_allclose(out, np.eye(2) / 2, atol=1e-12)

    def test_identity(self):
        assert_allclose(hm.partial_trace(np.eye(4), (2, 2), "second"),
                        2 * np.eye(2))

    def test_linearity_and_trace(self, rng):
        for _ in range(10):
            a, b = rand_herm(rng, 6), rand_herm(rng, 6)
            c = rng.normal()
            lhs = hm.partial_trace(a + c * b, (2, 3), "second")
            rhs = (hm.partial_trace(a, (2, 3), "second")
                   + c * hm.partial_trace(b, (2, 3), "second"))
            assert_allclose(lhs, rhs, atol=1e-12)
            assert np.isclose(np.trace(lhs), np.trace(a + c * b))

    def test_dim_mismatch(self):
        with pytest.raises(hm.HermitianError):
            hm.partial_trace(np.eye(4), (2, 3), "second")


class TestPartialTranspose:
    def test_product(self, rng):
        rho, sigma = rand_herm(rng, 2), rand_herm(rng, 2)
        out = hm.partial_transpose(hm.kron(rho, sigma), (2, 2))
        assert_allclose(out, hm.kron(rho, sigma.T), atol=1e-12)

    def test_bell_negativity(self):
        # oracle: eigendecomposition of the partially transposed projector
        psi = np.zeros(4)
        psi[0] = psi[3] = 1 / np.sqrt(2)
        pt = hm.partial_transpose(np.outer(psi, psi), (2, 2))
        assert np.isclose(np.linalg.eigvalsh(pt).min(), -0.5)

    def test_identity_fixed(self):
        assert_allclose(hm.partial_transpose(np.eye(4), (2, 2)), np.eye(4))

    def test_involution_and_trace(self, rng):
        for _ in range(10):
            h = rand_herm(rng, 6)
            pt = hm.partial_transpose(h, (2, 3))
            assert_allclose(hm.partial_transpose(pt, (2, 3)), h, atol=1e-13)
            assert np.isclose(np.trace(pt), np.trace(h))


def kraus_apply(kraus, rho):
    return sum(k @ rho @ k.conj().T for k in kraus)


def choi_by_definition(kraus, dh, dk):
    """Independent evaluation of (id (x) map) on the maximally entangled state."""
    j = np.zeros((dh * dk, dh * dk), dtype=complex)
    for a in range(dh):
        for b in range(dh):
            unit = np.zeros((dh, dh), dtype=complex)
            unit[a, b] = 1.0
            j += np.kron(unit, kraus_apply(kraus, unit)) / dh
    return j


class TestChoi:
    def test_identity_channel(self):
        j = hm.choi_from_kraus([np.eye(2)])
        psi = np.zeros(4)
        psi[0] = psi[3] = 1 / np.sqrt(2)
        assert_allclose(j, np.outer(psi, psi), atol=1e-12)
        assert np.isclose(np.trace(j), 1.0)

    def test_reset_channel(self):
        k0 = np.array([[1.0, 0.0], [0.0, 0.0]])
        k1 = np.array([[0.0, 1.0], [0.0, 0.0]])
        j = hm.choi_from_kraus([k0, k1])
        expected = choi_by_definition([k0, k1], 2, 2)
        assert_allclose(j, expected, atol=1e-12)
        assert_allclose(j, hm.kron(np.eye(2) / 2, np.diag([1.0, 0.0])),
                        atol=1e-12)

    def test_depolarizing(self):
        kraus = [0.5 * np.eye(2), 0.5 * PAULI_X, 0.5 * PAULI_Y, 0.5 * PAULI_Z]
        j = hm.choi_from_kraus(kraus)
        assert_allclose(j, choi_by_definition(kraus, 2, 2), atol=1e-12)
        assert_allclose(j, np.eye(4) / 4, atol=1e-12)

    def test_invert_identity(self, rng):
        j = hm.choi_from_kraus([np.eye(2)])
        rho = rand_psd(rng, 2)
        rho /= np.trace(rho).real
        assert_allclose(hm.choi_invert(j, (2, 2), rho), rho, atol=1e-12)

    def test_invert_depolarizing(self, rng):
        rho = rand_psd(rng, 2)
        rho /= np.trace(rho).real
        out = hm.choi_invert(np.eye(4) / 4, (2, 2), rho)
        assert_allclose(out, np.eye(2) / 2, atol=1e-12)

    def test_roundtrip_vs_kraus(self, rng):
        for _ in range(10):
            dh = int(rng.integers(2, 4))
            dk = int(rng.integers(2, 4))
            nk = int(rng.integers(-(-dh // dk), 4))
            g = rng.normal(size=(dk * nk, dh)) + 1j * rng.normal(size=(dk * nk, dh))
            q, _ = np.linalg.qr(g)
            kraus = [q[m * dk:(m + 1) * dk, :] for m in range(nk)]
            j = hm.choi_from_kraus(kraus)
            for _ in range(3):
                rho = rand_psd(rng, dh)
                rho /= np.trace(rho).real
                assert np.abs(hm.choi_invert(j, (dh, dk), rho)
                              - kraus_apply(kraus, rho)).max() <= 1e-10

    def test_isomorphism_on_basis(self, rng):
        g = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        q, _ = np.linalg.qr(g)
        kraus = [q[:2], q[2:]]
        j = hm.choi_from_kraus(kraus)
        for a in range(2):
            for b in range(2):
                unit = np.zeros((2, 2), dtype=complex)
                unit[a, b] = 1.0
                assert np.abs(hm.choi_invert(j, (2, 2), unit)
                              - kraus_apply(kraus, unit)).max() <= 1e-10

    def test_trace_increasing_rejected(self):
        with pytest.raises(hm.HermitianError):
            hm.choi_from_kraus([np.eye(2), np.eye(2)])

    def test_dim_mismatch(self):
        with pytest.raises(hm.HermitianError):
            hm.choi_from_kraus([np.eye(2), np.eye(3)])


class TestNormsAndRoots:
    def test_identity(self):
        assert hm.operator_norm(np.eye(2)) == 1.0
        assert_allclose(hm.pseudo_sqrt(np.eye(2)), np.eye(2))

    def test_rank_deficient_inverse(self):
        out = hm.pseudo_inv_sqrt(np.diag([4.0, 0.0]))
        assert_allclose(out, np.diag([0.5, 0.0]), atol=1e-12)

    def test_diag(self):
        assert np.isclose(hm.operator_norm(np.diag([9.0, 1.0])), 9.0)
        assert_allclose(hm.pseudo_sqrt(np.diag([9.0, 1.0])),
                        np.diag([3.0, 1.0]), atol=1e-12)

    def test_sqrt_squares_back(self, rng):
        for _ in range(5):
            h = rand_psd(rng, 4)
            s = hm.pseudo_sqrt(h)
            assert np.abs(s @ s - h).max() <= 1e-9 * (1 + hm.operator_norm(h))

    def test_negative_rejected(self):
        with pytest.raises(hm.HermitianError):
            hm.pseudo_sqrt(np.diag([1.0, -0.5]))


class TestEmbedding:
    def test_real_input(self, rng):
        h = rand_herm(rng, 3).real.astype(complex)
        e = hm.embed_complex(h)
        assert_allclose(e[:3, :3], h.real)
        assert_allclose(e[3:, 3:], h.real)
        assert_allclose(e[:3, 3:], 0 * h.real, atol=1e-15)

    def test_pauli_y_spectrum(self):
        e = hm.embed_complex(PAULI_Y)
        assert_allclose(np.linalg.eigvalsh(e), [-1, -1, 1, 1], atol=1e-12)

    def test_identity(self):
        assert_allclose(hm.embed_complex(np.eye(3)), np.eye(6))

    def test_inner_product_doubling(self, rng):
        a, b = rand_herm(rng, 4), rand_herm(rng, 4)
        lhs = np.sum(hm.embed_complex(a) * hm.embed_complex(b))
        assert np.isclose(lhs, 2 * hm.hs_inner(a, b))

    def test_unembed_roundtrip(self, rng):
        h = rand_herm(rng, 4)
        assert_allclose(hm.unembed_complex(hm.embed_complex(h)), h, atol=1e-14)
