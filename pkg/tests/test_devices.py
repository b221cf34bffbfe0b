import numpy as np
import pytest
from numpy.testing import assert_allclose

from convexweight.devices import (ChannelChoi, Ensemble, InstrumentSet,
                                  MeasurementAssemblage, Povm, State,
                                  StateAssemblage, noisy_mix, random_device,
                                  validate)
from convexweight import hermitian as hm
from conftest import PAULI_Z, sharp_z_povm, trivial_qubit_povm


class TestValidate:
    def test_trivial_povm_ok(self):
        assert validate(trivial_qubit_povm()) == []

    def test_povm_bad_sum(self):
        bad = Povm([np.eye(2), np.eye(2)])
        msgs = validate(bad)
        assert len(msgs) == 1 and "identity" in msgs[0]

    def test_state_bad_trace(self):
        msgs = validate(State(0.9 * np.eye(2) / 2))
        assert len(msgs) == 1 and "trace" in msgs[0]

    def test_state_not_psd(self):
        msgs = validate(State(np.diag([1.5, -0.5])))
        assert any("PSD" in m for m in msgs)

    def test_assemblage_signalling(self):
        rows = [[np.diag([0.5, 0.0]), np.diag([0.0, 0.5])],
                [np.diag([0.4, 0.0]), np.diag([0.0, 0.4])]]
        msgs = validate(StateAssemblage(rows))
        assert msgs

    def test_channel_marginal(self):
        j = np.eye(4) / 4
        assert validate(ChannelChoi(j, (2, 2))) == []
        # input marginal diag(1, 0)/... differs from I/2: trace violated too
        assert validate(ChannelChoi(np.diag([0.7, 0.3, 0, 0]), (2, 2)))


KINDS = [
    ("state", 2, {}),
    ("ensemble", 2, {"n_outcomes": 3}),
    ("povm", 3, {"n_outcomes": 4}),
    ("measurement-assemblage", 2, {"n_outcomes": 2, "n_settings": 2}),
    ("state-assemblage", 2, {"n_outcomes": 2, "n_settings": 2}),
    ("channel-choi", (2, 2), {}),
    ("instrument-set", (2, 2), {"n_outcomes": 2, "n_settings": 2}),
]


class TestRandomDevice:
    @pytest.mark.parametrize("kind,dims,kw", KINDS)
    def test_valid(self, kind, dims, kw):
        dev = random_device(kind, dims, seed=5, **kw)
        assert validate(dev) == []

    def test_deterministic(self):
        a = random_device("state", 2, seed=7)
        b = random_device("state", 2, seed=7)
        assert_allclose(a.rho, b.rho)
        c = random_device("state", 2, seed=8)
        assert np.abs(a.rho - c.rho).max() > 1e-6

    def test_povm_validates(self):
        dev = random_device("povm", 2, n_outcomes=3, seed=1)
        assert validate(dev) == []

    def test_channel_marginal_enforced(self):
        dev = random_device("channel-choi", (2, 2), seed=3)
        marg = hm.partial_trace(dev.j, (2, 2), over="second")
        assert_allclose(marg, np.eye(2) / 2, atol=1e-10)


class TestNoisyMix:
    def test_eta_one(self):
        dev = sharp_z_povm()
        out = noisy_mix(dev, 1.0, trivial_qubit_povm())
        for a, b in zip(out.effects, dev.effects):
            assert_allclose(a, b)

    def test_eta_zero(self):
        noise = trivial_qubit_povm()
        out = noisy_mix(sharp_z_povm(), 0.0, noise)
        for a, b in zip(out.effects, noise.effects):
            assert_allclose(a, b)

    def test_half_arithmetic(self):
        out = noisy_mix(sharp_z_povm(), 0.5, trivial_qubit_povm())
        assert_allclose(out.effects[0], (np.eye(2) + PAULI_Z / 2) / 2)
        assert_allclose(out.effects[1], (np.eye(2) - PAULI_Z / 2) / 2)

    @pytest.mark.parametrize("kind,dims,kw", KINDS)
    def test_affine_and_valid(self, kind, dims, kw):
        a = random_device(kind, dims, seed=11, **kw)
        b = random_device(kind, dims, seed=12, **kw)
        eta = 0.3
        mixed = noisy_mix(a, eta, b)
        assert validate(mixed) == []
        for key, blk in mixed.blocks().items():
            want = eta * a.blocks()[key] + (1 - eta) * b.blocks()[key]
            assert np.abs(blk - want).max() <= 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            noisy_mix(sharp_z_povm(), 0.5,
                      Povm([np.eye(3) / 3] * 3))


class TestBlockViews:
    def test_ensemble_blocks_unnormalized(self):
        ens = Ensemble([(0.25, np.eye(2) / 2), (0.75, np.diag([1.0, 0.0]))])
        blocks = ens.blocks()
        assert np.isclose(np.trace(blocks[(0, 0)]).real, 0.25)
        assert np.isclose(np.trace(blocks[(1, 0)]).real, 0.75)

    def test_instrument_counts(self):
        dev = random_device("instrument-set", (2, 2), n_outcomes=3,
                            n_settings=2, seed=9)
        assert dev.n_outcomes == 3 and dev.n_settings == 2
        assert len(dev.blocks()) == 6

    def test_measurement_assemblage_labels(self):
        dev = random_device("measurement-assemblage", 2, n_outcomes=2,
                            n_settings=3, seed=2)
        assert set(dev.blocks()) == {(i, x) for i in range(2) for x in range(3)}
