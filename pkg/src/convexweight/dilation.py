"""Analytic convex-component machinery via minimal Naimark dilations.

A POVM's minimal diagonal dilation turns its convex components into
positive block-diagonal operators E on the dilation space with J* E J = 1.
That yields closed-form component certificates, maximal component weights
1/||E||, an exact extremality test, and the analytic weight against the
trivial POVMs.  The same structure specialized to state ensembles gives
component operators from pseudo-inverse square roots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hermitian as hm
from .devices import Ensemble, Povm, State, validate

EIG_FLOOR = 1e-9
NULLSPACE_TOL = 1e-8


class ComponentError(ValueError):
    """Requested component is not realizable for the given device."""


@dataclass
class NaimarkDilation:
    """Minimal diagonal dilation (H_plus, J, P) of a POVM.

    `isometry` maps the system into the dilation space, whose outcome
    blocks have sizes `outcome_block_dims` (the effect ranks); the block
    projectors are implicit in the slicing.
    """

    isometry: np.ndarray            # (dim_dilation, dim_system)
    outcome_block_dims: list[int]
    eigenvalues: list[np.ndarray]   # kept spectrum of each effect
    eigenvectors: list[np.ndarray]  # matching normalized eigenvectors

    @property
    def dim_system(self) -> int:
        return self.isometry.shape[1]

    @property
    def dim_dilation(self) -> int:
        return self.isometry.shape[0]

    def block_slices(self):
        offs = np.concatenate([[0], np.cumsum(self.outcome_block_dims)])
        return [slice(int(offs[i]), int(offs[i + 1]))
                for i in range(len(self.outcome_block_dims))]

    def project_back(self, e_blocks) -> list[np.ndarray]:
        """Effects J* P_i E J for a block-diagonal E on the dilation space."""
        out = []
        for i, sl in enumerate(self.block_slices()):
            ji = self.isometry[sl, :]
            out.append(hm.as_hermitian(ji.conj().T @ e_blocks[i] @ ji, tol=1e-6))
        return out


@dataclass
class ComponentCertificate:
    e_blocks: list[np.ndarray]
    max_weight: float

    @property
    def norm(self) -> float:
        return float(max(hm.operator_norm(e) if e.size else 0.0
                         for e in self.e_blocks))


def naimark_dilation(povm: Povm) -> NaimarkDilation:
    """Minimal diagonal Naimark dilation of a valid POVM."""
    bad = validate(povm)
    if bad:
        raise ValueError("invalid POVM: " + "; ".join(bad))
    d = povm.block_dim
    rows, dims, vals, vecs = [], [], [], []
    for eff in povm.effects:
        w, v = np.linalg.eigh(eff)
        keep = w > EIG_FLOOR
        wk, vk = w[keep], v[:, keep]
        dims.append(int(keep.sum()))
        vals.append(wk)
        vecs.append(vk)
        # row (i, k) of J is <d_ik| with |d_ik> = sqrt(w_k) |v_k>
        rows.append((np.sqrt(wk)[:, None] * vk.T.conj()))
    j = np.vstack(rows) if rows else np.zeros((0, d))
    return NaimarkDilation(j, dims, vals, vecs)


def certificate_for_component(dil: NaimarkDilation, m1: Povm) -> ComponentCertificate:
    """Unique block-commutant certificate E with J* P_i E J = M1_i.

    Fails when the candidate violates the support containment, is not a
    convex component (E not PSD), or is not normalized (J* E J != 1).
    """
    if len(m1.effects) != len(dil.outcome_block_dims):
        raise ComponentError("outcome counts differ")
    if m1.block_dim != dil.dim_system:
        raise ComponentError("dimension mismatch")
    e_blocks = []
    for i, (wk, vk) in enumerate(zip(dil.eigenvalues, dil.eigenvectors)):
        eff = m1.effects[i]
        proj = vk @ vk.conj().T
        leak = float(np.real(np.trace(eff @ (np.eye(dil.dim_system) - proj))))
        if leak > 1e-8 * max(1.0, hm.operator_norm(eff)):
            raise ComponentError(
                f"effect {i} is supported outside the original effect")
        core = vk.conj().T @ eff @ vk
        scale = 1.0 / np.sqrt(wk)
        e = hm.as_hermitian(scale[:, None] * core * scale[None, :], tol=1e-6)
        wmin = float(np.linalg.eigvalsh(e).min()) if e.size else 0.0
        if wmin < -1e-8 * max(1.0, hm.operator_norm(e) if e.size else 0.0):
            raise ComponentError(
                f"certificate block {i} is not PSD: the candidate is not a "
                "convex component")
        e_blocks.append(e)
    # normalization J* E J = identity on the system
    total = sum(ji.conj().T @ e_blocks[i] @ ji
                for i, (ji, _) in enumerate(
                    zip([dil.isometry[sl] for sl in dil.block_slices()],
                        e_blocks)))
    dev = float(np.abs(total - np.eye(dil.dim_system)).max())
    if dev > 1e-8:
        raise ComponentError(
            f"certificate normalization J*EJ differs from identity by {dev:.3e}: "
            "the candidate is not a POVM component")
    norm = max(hm.operator_norm(e) if e.size else 0.0 for e in e_blocks)
    return ComponentCertificate(e_blocks, min(1.0, 1.0 / norm))


def component_from_E(dil: NaimarkDilation, e_blocks, lam: float):
    """Split M = lam * M1 + (1 - lam) * M2 with M1_i = J* P_i E J.

    Valid for 0 < lam <= 1/||E||; at the upper end M2 touches the boundary
    of the POVM set.
    """
    e_blocks = [hm.as_hermitian(e, tol=1e-6) if np.asarray(e).size
                else np.zeros((0, 0)) for e in e_blocks]
    norm = max(hm.operator_norm(e) if e.size else 0.0 for e in e_blocks)
    if lam <= 0:
        raise ComponentError("weight must be positive")
    if lam > 1.0 / norm + 1e-9:
        raise ComponentError(
            f"weight {lam} exceeds 1/||E|| = {1.0 / norm}: the complement "
            "would not be PSD")
    m1_effects = dil.project_back(e_blocks)
    originals = [hm.as_hermitian((np.sqrt(w)[:, None] * v.T.conj()).conj().T
                                 @ (np.sqrt(w)[:, None] * v.T.conj()))
                 for w, v in zip(dil.eigenvalues, dil.eigenvectors)]
    m1 = Povm(m1_effects)
    bad = validate(m1)
    if bad:
        raise ComponentError("projected component invalid: " + "; ".join(bad))
    if 1.0 - lam <= 1e-12:
        return m1, Povm([e.copy() for e in originals])
    m2_effects = []
    for orig, eff in zip(originals, m1_effects):
        q = (orig - lam * eff) / (1.0 - lam)
        w, v = np.linalg.eigh(q)
        if w.min() < -1e-7 * max(1.0, abs(w).max()):
            raise ComponentError(
                f"complement effect has eigenvalue {w.min():.3e}")
        m2_effects.append(hm.as_hermitian((v * np.clip(w, 0.0, None)) @ v.conj().T))
    return m1, Povm(m2_effects)


def trivial_weight_analytic(povm: Povm):
    """Closed-form weight against trivial POVMs and the optimal distribution.

    The weight is one minus the summed smallest effect eigenvalues; the
    optimal trivial component distributes them proportionally.
    """
    mins = np.array([float(np.linalg.eigvalsh(e).min()) for e in povm.effects])
    mins = np.clip(mins, 0.0, None)
    total = float(mins.sum())
    if total <= 0.0:
        dist = np.full(len(povm.effects), 1.0 / len(povm.effects))
    else:
        dist = mins / total
    return 1.0 - total, dist


def is_extreme(povm: Povm):
    """Extremality of a POVM plus the dimension of its perturbation space.

    Solves J* Delta J = 0 over Hermitian block-diagonal Delta; the POVM is
    extreme iff only Delta = 0 works.
    """
    dil = naimark_dilation(povm)
    d = dil.dim_system
    cols = []
    for i, sl in enumerate(dil.block_slices()):
        ji = dil.isometry[sl, :]
        r = dil.outcome_block_dims[i]
        for f in hm.hermitian_basis(r):
            mapped = ji.conj().T @ f @ ji
            cols.append(np.concatenate([mapped.real.ravel(),
                                        mapped.imag.ravel()]))
    if not cols:
        return True, 0
    a = np.stack(cols, axis=1)
    sv = np.linalg.svd(a, compute_uv=False)
    rank = int((sv > NULLSPACE_TOL * max(1.0, sv.max() if sv.size else 0.0)).sum())
    nullity = a.shape[1] - rank
    return nullity == 0, nullity


def commutant_nullspace_basis(povm: Povm, tol: float = NULLSPACE_TOL):
    """Block-diagonal Hermitian Deltas with J* Delta J = 0, as block lists."""
    dil = naimark_dilation(povm)
    cols, basis_elems = [], []
    for i, sl in enumerate(dil.block_slices()):
        ji = dil.isometry[sl, :]
        r = dil.outcome_block_dims[i]
        for f in hm.hermitian_basis(r):
            mapped = ji.conj().T @ f @ ji
            cols.append(np.concatenate([mapped.real.ravel(), mapped.imag.ravel()]))
            basis_elems.append((i, f))
    a = np.stack(cols, axis=1)
    u, sv, vt = np.linalg.svd(a)
    rank = int((sv > tol * max(1.0, sv.max())).sum())
    out = []
    for row in vt[rank:]:
        blocks = [np.zeros((r, r), dtype=complex)
                  for r in dil.outcome_block_dims]
        for coef, (i, f) in zip(row, basis_elems):
            blocks[i] = blocks[i] + coef * f
        out.append(blocks)
    return dil, out


def ensemble_component_operators(ensemble: Ensemble, component: Ensemble):
    """Component operators E_i of one ensemble inside another.

    E_i = (p~_i / p_i) rho_i^{-1/2} rho~_i rho_i^{-1/2} on the support of
    rho_i; the component must be supported inside the original elementwise.
    Returns the blocks and the maximal weight 1/max_i ||E_i||.
    """
    if len(component.states) != len(ensemble.states):
        raise ComponentError("element counts differ")
    if abs(float(component.probs.sum()) - 1.0) > 1e-8:
        raise ComponentError("component probabilities do not sum to one")
    e_blocks = []
    for i, (p, rho) in enumerate(zip(ensemble.probs, ensemble.states)):
        pt, rt = float(component.probs[i]), component.states[i]
        proj = hm.support_projector(rho)
        leak = float(np.real(np.trace(rt @ (np.eye(rho.shape[0]) - proj))))
        if pt > 1e-12 and leak > 1e-8 * max(1.0, hm.operator_norm(rt)):
            raise ComponentError(
                f"component state {i} is supported outside the original")
        if p <= 1e-12:
            if pt > 1e-10:
                raise ComponentError(f"component gives weight to empty slot {i}")
            e_blocks.append(np.zeros_like(rho))
            continue
        inv_sqrt = hm.pseudo_inv_sqrt(rho)
        e_blocks.append(hm.as_hermitian(
            (pt / p) * inv_sqrt @ rt @ inv_sqrt, tol=1e-6))
    norm = max(hm.operator_norm(e) for e in e_blocks)
    if norm <= 0:
        raise ComponentError("component operators vanish")
    return e_blocks, min(1.0, 1.0 / norm)


def trivial_component_weight_bound(ensemble: Ensemble, target: State) -> float:
    """Largest trivial-component weight with the given single state.

    Lower-bounds 1 - W(ensemble, trivial-ensemble); zero when the target
    is not supported inside every ensemble element.
    """
    n = len(ensemble.states)
    comp = Ensemble([(1.0 / n, target.rho) for _ in range(n)])
    try:
        _, max_w = ensemble_component_operators(ensemble, comp)
    except ComponentError:
        return 0.0
    return float(np.clip(max_w, 0.0, 1.0))


def bloch_grid_targets(n_polar: int = 20, n_azimuth: int = 40):
    """Pure qubit states on a regular Bloch-sphere grid."""
    out = []
    for a in range(n_polar):
        theta = np.pi * (a + 0.5) / n_polar
        for b in range(n_azimuth):
            phi = 2 * np.pi * b / n_azimuth
            v = np.array([np.cos(theta / 2),
                          np.exp(1j * phi) * np.sin(theta / 2)])
            out.append(State(np.outer(v, v.conj())))
    return out


def best_trivial_target(ensemble: Ensemble, n_polar: int = 20,
                        n_azimuth: int = 40):
    """Grid search over pure qubit targets for the best trivial-weight bound."""
    if ensemble.states[0].shape[0] != 2:
        raise ValueError("grid search is implemented for qubit ensembles")
    best, best_state = 0.0, None
    for st in bloch_grid_targets(n_polar, n_azimuth):
        val = trivial_component_weight_bound(ensemble, st)
        if val > best:
            best, best_state = val, st
    mixed = State(np.eye(2) / 2)
    val = trivial_component_weight_bound(ensemble, mixed)
    if val > best:
        best, best_state = val, mixed
    return best, best_state
