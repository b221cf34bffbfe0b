"""Validated quantum device types and seeded random generators.

Devices are immutable value objects over complex ndarrays.  Assemblage-like
classes store unnormalized blocks (probability times state), indexed by
0-based (outcome, setting) labels; `blocks()` exposes every class through
the same labelled-block view that the weight engine consumes.
"""

from __future__ import annotations

import numpy as np

from . import hermitian as hm

PSD_TOL = 1e-9
NORM_TOL = 1e-9


def _min_eig(h: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(h).min())


class Device:
    """Common labelled-block interface shared by all device classes."""

    kind: str = ""

    def blocks(self) -> dict[tuple[int, int], np.ndarray]:
        """Unnormalized Hermitian blocks keyed by (outcome i, setting x)."""
        raise NotImplementedError

    def violations(self) -> list[str]:
        raise NotImplementedError

    @property
    def n_settings(self) -> int:
        return 1 + max(x for _, x in self.blocks())

    @property
    def n_outcomes(self) -> int:
        return 1 + max(i for i, _ in self.blocks())

    @property
    def block_dim(self) -> int:
        return next(iter(self.blocks().values())).shape[0]

    def __repr__(self):
        return (f"<{type(self).__name__} dim={self.block_dim} "
                f"outcomes={self.n_outcomes} settings={self.n_settings}>")


class State(Device):
    kind = "state"

    def __init__(self, rho):
        self.rho = hm.as_hermitian(rho)
        self.rho.flags.writeable = False

    def blocks(self):
        return {(0, 0): self.rho}

    def violations(self):
        out = []
        lo = _min_eig(self.rho)
        if lo < -PSD_TOL:
            out.append(f"state not PSD: min eigenvalue {lo:.3e}")
        tr = float(np.trace(self.rho).real)
        if abs(tr - 1.0) > NORM_TOL:
            out.append(f"state trace {tr} differs from 1 by {abs(tr-1):.3e}")
        return out


class Ensemble(Device):
    kind = "ensemble"

    def __init__(self, elements):
        """elements: iterable of (probability, density matrix)."""
        self.probs = np.array([float(p) for p, _ in elements])
        self.states = [hm.as_hermitian(r) for _, r in elements]
        for s in self.states:
            s.flags.writeable = False
        self.probs.flags.writeable = False
        self._blocks = None

    @classmethod
    def from_blocks(cls, blocks):
        """Build from unnormalized blocks sigma_i = p_i rho_i, kept exactly."""
        elems = []
        stored = []
        for b in blocks:
            b = hm.as_hermitian(b)
            stored.append(b)
            p = float(np.trace(b).real)
            rho = b / p if p > 1e-14 else np.eye(b.shape[0]) / b.shape[0]
            elems.append((p, rho))
        out = cls(elems)
        out._blocks = stored
        return out

    def blocks(self):
        if self._blocks is not None:
            return {(i, 0): b for i, b in enumerate(self._blocks)}
        return {(i, 0): self.probs[i] * self.states[i]
                for i in range(len(self.states))}

    def violations(self):
        out = []
        if (self.probs < -NORM_TOL).any():
            out.append(f"negative probability {self.probs.min():.3e}")
        tot = float(self.probs.sum())
        if abs(tot - 1.0) > NORM_TOL:
            out.append(f"probabilities sum to {tot}, off by {abs(tot-1):.3e}")
        for i, s in enumerate(self.states):
            lo = _min_eig(s)
            if lo < -PSD_TOL:
                out.append(f"state {i} not PSD: min eigenvalue {lo:.3e}")
            tr = float(np.trace(s).real)
            if abs(tr - 1.0) > 1e-8:
                out.append(f"state {i} trace {tr}")
        return out


class StateAssemblage(Device):
    kind = "state-assemblage"

    def __init__(self, sigma):
        """sigma[x][i]: unnormalized blocks p(i, x) rho_{i|x}."""
        self.sigma = [[hm.as_hermitian(b) for b in row] for row in sigma]
        for row in self.sigma:
            for b in row:
                b.flags.writeable = False

    def blocks(self):
        return {(i, x): b for x, row in enumerate(self.sigma)
                for i, b in enumerate(row)}

    def violations(self):
        out = []
        traces = []
        for x, row in enumerate(self.sigma):
            for i, b in enumerate(row):
                lo = _min_eig(b)
                if lo < -PSD_TOL:
                    out.append(f"sigma[{i}|{x}] not PSD: min eigenvalue {lo:.3e}")
            traces.append(float(sum(np.trace(b).real for b in row)))
        for x, t in enumerate(traces):
            if abs(t - traces[0]) > NORM_TOL:
                out.append(f"setting {x} total trace {t} != setting 0 ({traces[0]})")
        if abs(sum(traces) - len(traces)) > NORM_TOL:
            out.append(f"total trace {sum(traces)} != number of settings")
        return out


class Povm(Device):
    kind = "povm"

    def __init__(self, effects):
        self.effects = [hm.as_hermitian(e) for e in effects]
        for e in self.effects:
            e.flags.writeable = False

    def blocks(self):
        return {(i, 0): e for i, e in enumerate(self.effects)}

    def violations(self):
        out = []
        for i, e in enumerate(self.effects):
            lo = _min_eig(e)
            if lo < -PSD_TOL:
                out.append(f"effect {i} not PSD: min eigenvalue {lo:.3e}")
        total = sum(self.effects)
        dev = float(np.abs(total - np.eye(total.shape[0])).max())
        if dev > NORM_TOL:
            out.append(f"effects sum differs from identity by {dev:.3e}")
        return out


class MeasurementAssemblage(Device):
    kind = "measurement-assemblage"

    def __init__(self, effects):
        """effects[x][i]: POVM effect i of measurement setting x."""
        self.effects = [[hm.as_hermitian(e) for e in row] for row in effects]
        for row in self.effects:
            for e in row:
                e.flags.writeable = False

    def blocks(self):
        return {(i, x): e for x, row in enumerate(self.effects)
                for i, e in enumerate(row)}

    def violations(self):
        out = []
        for x, row in enumerate(self.effects):
            for i, e in enumerate(row):
                lo = _min_eig(e)
                if lo < -PSD_TOL:
                    out.append(f"effect {i}|{x} not PSD: min eigenvalue {lo:.3e}")
            total = sum(row)
            dev = float(np.abs(total - np.eye(total.shape[0])).max())
            if dev > NORM_TOL:
                out.append(f"setting {x} effects sum differs from identity by {dev:.3e}")
        return out


class ChannelChoi(Device):
    kind = "channel-choi"

    def __init__(self, j, dims):
        self.j = hm.as_hermitian(j)
        self.dims = (int(dims[0]), int(dims[1]))
        if self.j.shape[0] != self.dims[0] * self.dims[1]:
            raise hm.HermitianError(
                f"Choi dims {self.dims} do not match shape {self.j.shape}")
        self.j.flags.writeable = False

    def blocks(self):
        return {(0, 0): self.j}

    def violations(self):
        out = []
        lo = _min_eig(self.j)
        if lo < -PSD_TOL:
            out.append(f"Choi matrix not PSD: min eigenvalue {lo:.3e}")
        dh = self.dims[0]
        marg = hm.partial_trace(self.j, self.dims, over="second")
        dev = float(np.abs(marg - np.eye(dh) / dh).max())
        if dev > NORM_TOL:
            out.append(f"input marginal differs from I/d by {dev:.3e}")
        tr = float(np.trace(self.j).real)
        if abs(tr - 1.0) > NORM_TOL:
            out.append(f"Choi trace {tr}")
        return out


class InstrumentSet(Device):
    kind = "instrument-set"

    def __init__(self, blocks, dims):
        """blocks[x][i]: subnormalized Choi blocks of instrument x."""
        self.choi = [[hm.as_hermitian(b) for b in row] for row in blocks]
        self.dims = (int(dims[0]), int(dims[1]))
        for row in self.choi:
            for b in row:
                if b.shape[0] != self.dims[0] * self.dims[1]:
                    raise hm.HermitianError("instrument block dims mismatch")
                b.flags.writeable = False

    def blocks(self):
        return {(i, x): b for x, row in enumerate(self.choi)
                for i, b in enumerate(row)}

    def violations(self):
        out = []
        dh = self.dims[0]
        for x, row in enumerate(self.choi):
            for i, b in enumerate(row):
                lo = _min_eig(b)
                if lo < -PSD_TOL:
                    out.append(f"block {i}|{x} not PSD: min eigenvalue {lo:.3e}")
            marg = hm.partial_trace(sum(row), self.dims, over="second")
            dev = float(np.abs(marg - np.eye(dh) / dh).max())
            if dev > NORM_TOL:
                out.append(f"instrument {x} marginal differs from I/d by {dev:.3e}")
        return out


def validate(device: Device) -> list[str]:
    """All invariant violations of a device; empty list means valid."""
    return device.violations()


# -- generators -------------------------------------------------------------

def _ginibre(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def random_state(rng, dim: int) -> np.ndarray:
    g = _ginibre(rng, dim)
    rho = g @ g.conj().T
    return hm.as_hermitian(rho / np.trace(rho).real)


def random_povm_effects(rng, dim: int, n_outcomes: int) -> list[np.ndarray]:
    raw = [_ginibre(rng, dim) for _ in range(n_outcomes)]
    raw = [g @ g.conj().T for g in raw]
    s_inv = hm.pseudo_inv_sqrt(sum(raw))
    return [hm.as_hermitian(s_inv @ a @ s_inv) for a in raw]


def _random_choi_blocks(rng, dims, n_blocks: int) -> list[np.ndarray]:
    dh, dk = dims
    raw = [_ginibre(rng, dh * dk) for _ in range(n_blocks)]
    raw = [g @ g.conj().T for g in raw]
    marg = hm.partial_trace(sum(raw), dims, over="second")
    q = hm.kron(hm.pseudo_inv_sqrt(marg), np.eye(dk))
    return [hm.as_hermitian(q @ w @ q / dh) for w in raw]


def random_device(kind: str, dims, n_outcomes: int = 2, n_settings: int = 1,
                  seed: int = 0) -> Device:
    """Deterministic seeded device of the given class; passes validate()."""
    rng = np.random.default_rng(seed)
    if kind == "state":
        return State(random_state(rng, int(dims)))
    if kind == "ensemble":
        d = int(dims)
        p = rng.dirichlet(np.ones(n_outcomes))
        return Ensemble([(p[i], random_state(rng, d)) for i in range(n_outcomes)])
    if kind == "povm":
        return Povm(random_povm_effects(rng, int(dims), n_outcomes))
    if kind == "measurement-assemblage":
        d = int(dims)
        return MeasurementAssemblage(
            [random_povm_effects(rng, d, n_outcomes) for _ in range(n_settings)])
    if kind == "state-assemblage":
        # steered blocks: measure one half of a random bipartite state
        d = int(dims)
        rho = random_state(rng, d * d)
        rows = []
        for _ in range(n_settings):
            effects = random_povm_effects(rng, d, n_outcomes)
            row = []
            for e in effects:
                lifted = hm.kron(e.T, np.eye(d)) @ rho
                row.append(hm.as_hermitian(hm.partial_trace(lifted, (d, d), "first")))
            rows.append(row)
        return StateAssemblage(rows)
    if kind == "channel-choi":
        return ChannelChoi(_random_choi_blocks(rng, tuple(dims), 1)[0], dims)
    if kind == "instrument-set":
        return InstrumentSet(
            [_random_choi_blocks(rng, tuple(dims), n_outcomes)
             for _ in range(n_settings)], dims)
    raise ValueError(f"unknown device kind {kind!r}")


def noisy_mix(device: Device, eta: float, noise: Device) -> Device:
    """Blockwise mixture eta * device + (1 - eta) * noise of matching shapes."""
    if type(device) is not type(noise):
        raise ValueError("device classes do not match")
    da, db = device.blocks(), noise.blocks()
    if set(da) != set(db) or any(da[k].shape != db[k].shape for k in da):
        raise ValueError("device shapes do not match")
    mixed = {k: eta * da[k] + (1.0 - eta) * db[k] for k in da}
    return rebuild_from_blocks(device, mixed)


def rebuild_from_blocks(template: Device, blocks: dict) -> Device:
    """Device of the template's class from a labelled block map."""
    nx = 1 + max(x for _, x in blocks)
    ni = 1 + max(i for i, _ in blocks)
    grid = [[blocks[(i, x)] for i in range(ni)] for x in range(nx)]
    if isinstance(template, State):
        return State(grid[0][0])
    if isinstance(template, Ensemble):
        return Ensemble.from_blocks(grid[0])
    if isinstance(template, StateAssemblage):
        return StateAssemblage(grid)
    if isinstance(template, Povm):
        return Povm(grid[0])
    if isinstance(template, MeasurementAssemblage):
        return MeasurementAssemblage(grid)
    if isinstance(template, ChannelChoi):
        return ChannelChoi(grid[0][0], template.dims)
    if isinstance(template, InstrumentSet):
        return InstrumentSet(grid, template.dims)
    raise TypeError(f"unsupported device type {type(template)}")


# weight-program objective normalization: the cone element's total trace
# under this factor equals the scale alpha of the free component
def objective_normalization(device: Device) -> float:
    nx = device.n_settings
    d = device.block_dim
    if isinstance(device, (State, Ensemble, ChannelChoi)):
        return 1.0
    if isinstance(device, StateAssemblage):
        return 1.0 / nx
    if isinstance(device, Povm):
        return 1.0 / d
    if isinstance(device, MeasurementAssemblage):
        return 1.0 / (nx * d)
    if isinstance(device, InstrumentSet):
        return 1.0 / nx
    raise TypeError(f"unsupported device type {type(device)}")
