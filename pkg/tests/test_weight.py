import numpy as np
import pytest
from numpy.testing import assert_allclose

from convexweight.devices import (ChannelChoi, Ensemble, MeasurementAssemblage,
                                  Povm, State, noisy_mix, random_device,
                                  validate)
from convexweight.freesets import FreeSetSpec, membership_check
from convexweight.weight import (DecompositionError, compute_weight,
                                 optimal_decomposition)
from conftest import (max_entangled_choi, mub_pair, sharp_z_povm,
                      steered_assemblage, trivial_qubit_povm)


def noisy_z(eta):
    return noisy_mix(sharp_z_povm(), eta, trivial_qubit_povm())


class TestNoisyFamily:
    @pytest.mark.parametrize("eta", [0.0, 0.25, 0.5, 0.75, 1.0])
    def test_weight_equals_eta(self, eta):
        r = compute_weight(noisy_z(eta), FreeSetSpec("trivial-povm"))
        assert abs(r.weight - eta) <= 1e-6
        assert r.gap <= 1e-6
        assert abs(r.witness_value - (1.0 - eta)) <= 1e-6


class TestFaithfulness:
    def test_free_device_zero_weight(self):
        r = compute_weight(trivial_qubit_povm(), FreeSetSpec("trivial-povm"))
        assert r.weight == 0.0
        assert r.outside_component is None
        assert r.free_component is not None

    def test_extremal_measurement_pair(self):
        r = compute_weight(mub_pair(), FreeSetSpec("jm"))
        assert abs(r.weight - 1.0) <= 1e-6
        assert r.free_component is None

    def test_extremal_channel(self):
        ident = ChannelChoi(max_entangled_choi(), (2, 2))
        r = compute_weight(ident, FreeSetSpec("eb-ppt"))
        assert abs(r.weight - 1.0) <= 1e-6

    def test_outside_component_is_outside(self):
        dev = noisy_z(0.6)
        r = compute_weight(dev, FreeSetSpec("trivial-povm"))
        assert not membership_check(r.outside_component,
                                    FreeSetSpec("trivial-povm"))
        r2 = compute_weight(r.outside_component, FreeSetSpec("trivial-povm"))
        assert r2.weight >= r.weight - 1e-6


class TestDuality:
    def test_witness_matches_weight(self):
        cases = [
            (random_device("povm", 3, n_outcomes=3, seed=1),
             FreeSetSpec("trivial-povm")),
            (random_device("measurement-assemblage", 2, n_outcomes=2,
                           n_settings=2, seed=2), FreeSetSpec("jm")),
            (steered_assemblage(0.95), FreeSetSpec("lhs")),
            (random_device("channel-choi", (2, 2), seed=3),
             FreeSetSpec("eb-ppt")),
            (random_device("ensemble", 2, n_outcomes=3, seed=4),
             FreeSetSpec("trivial-ensemble")),
        ]
        for dev, spec in cases:
            r = compute_weight(dev, spec)
            assert r.gap <= 1e-6
            assert abs(r.witness_value - (1.0 - r.weight)) <= 1e-6
            for y in r.witness.values():
                assert np.linalg.eigvalsh(y).min() >= -1e-9


class TestConvexity:
    def test_mixtures(self, rng):
        spec = FreeSetSpec("trivial-povm")
        for seed in range(4):
            a = random_device("povm", 2, n_outcomes=3, seed=40 + seed)
            b = random_device("povm", 2, n_outcomes=3, seed=80 + seed)
            wa = compute_weight(a, spec).weight
            wb = compute_weight(b, spec).weight
            for p in (0.25, 0.5, 0.75):
                wm = compute_weight(noisy_mix(a, p, b), spec).weight
                assert wm <= p * wa + (1 - p) * wb + 1e-6


class TestMonotonicity:
    def test_relabeling_never_increases(self, rng):
        spec = FreeSetSpec("jm")
        dev = random_device("measurement-assemblage", 2, n_outcomes=3,
                            n_settings=2, seed=17)
        w0 = compute_weight(dev, spec).weight
        for seed in range(3):
            rng2 = np.random.default_rng(seed)
            relabel = rng2.integers(0, 3, size=3)
            rows = []
            for row in dev.effects:
                new = [np.zeros((2, 2), dtype=complex) for _ in range(3)]
                for i, e in enumerate(row):
                    new[relabel[i]] = new[relabel[i]] + e
                rows.append(new)
            coarse = MeasurementAssemblage(rows)
            assert validate(coarse) == []
            assert compute_weight(coarse, spec).weight <= w0 + 1e-6


class TestDecomposition:
    def test_zero_weight_case(self):
        dev = trivial_qubit_povm()
        r = compute_weight(dev, FreeSetSpec("trivial-povm"))
        c_free, free, lam, outside = optimal_decomposition(r, dev)
        assert (c_free, lam) == (1.0, 0.0)
        assert outside is None
        for a, b in zip(free.effects, dev.effects):
            assert_allclose(a, b)

    def test_weight_one_case(self):
        dev = mub_pair()
        r = compute_weight(dev, FreeSetSpec("jm"))
        c_free, free, lam, outside = optimal_decomposition(r, dev)
        assert (c_free, lam) == (0.0, 1.0)
        assert free is None
        for key, blk in outside.blocks().items():
            assert_allclose(blk, dev.blocks()[key])

    def test_half_noisy_distribution(self):
        # the optimal trivial component spreads the smallest eigenvalues
        dev = noisy_z(0.5)
        r = compute_weight(dev, FreeSetSpec("trivial-povm"))
        c_free, free, lam, outside = optimal_decomposition(r, dev)
        assert abs(lam - 0.5) <= 1e-6
        mins = np.array([np.linalg.eigvalsh(e).min() for e in dev.effects])
        want = mins / mins.sum()
        for i, eff in enumerate(free.effects):
            assert_allclose(eff, want[i] * np.eye(2), atol=1e-5)
        for comp in (free, outside):
            assert validate(comp) == []

    def test_reconstruction_all_classes(self):
        cases = [
            (random_device("povm", 2, n_outcomes=3, seed=21),
             FreeSetSpec("trivial-povm")),
            (steered_assemblage(0.9), FreeSetSpec("lhs")),
            (random_device("channel-choi", (2, 2), seed=23),
             FreeSetSpec("eb-ppt")),
            (random_device("ensemble", 2, n_outcomes=2, seed=24),
             FreeSetSpec("trivial-ensemble")),
        ]
        for dev, spec in cases:
            r = compute_weight(dev, spec)
            c_free, free, lam, outside = optimal_decomposition(r, dev)
            if free is not None and outside is not None:
                for key, blk in dev.blocks().items():
                    recon = c_free * free.blocks()[key] + lam * outside.blocks()[key]
                    assert np.abs(recon - blk).max() <= 1e-6

    def test_invalid_pairing_rejected(self):
        with pytest.raises(ValueError):
            compute_weight(sharp_z_povm(), FreeSetSpec("lhs"))

    def test_invalid_device_rejected(self):
        bad = Povm([np.eye(2), np.eye(2)])
        with pytest.raises(ValueError):
            compute_weight(bad, FreeSetSpec("trivial-povm"))


class TestStateWeights:
    def test_bell_state_ppt_weight(self):
        # sigma <= rho for a pure state forces sigma = c * rho, and the Bell
        # projector is not PPT, so the weight is one
        bell = State(max_entangled_choi())
        r = compute_weight(bell, FreeSetSpec("ppt-state", split=(2, 2)))
        assert abs(r.weight - 1.0) <= 1e-6

    def test_separable_state_weight_zero(self):
        r = compute_weight(State(np.eye(4) / 4),
                           FreeSetSpec("ppt-state", split=(2, 2)))
        assert r.weight <= 1e-6

    def test_isotropic_family(self):
        # isotropic qubit pair states are PPT iff the singlet fraction
        # stays below 1/2; weight hits zero exactly in the PPT regime
        bell = max_entangled_choi()
        spec = FreeSetSpec("ppt-state", split=(2, 2))
        for eta, positive in [(0.2, False), (1.0 / 3.0, False), (0.6, True)]:
            rho = eta * bell + (1 - eta) * np.eye(4) / 4
            w = compute_weight(State(rho), spec).weight
            assert (w > 1e-4) == positive
