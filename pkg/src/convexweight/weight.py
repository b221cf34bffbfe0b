"""Convex-weight computation: primal assembly, witness and decomposition.

For a device D and free set F the primal maximizes the normalized total
trace of a cone element dominated blockwise by D; the optimum equals
1 - W_F(D).  The dual slack on each dominance constraint is the witness
block Y, and the primal slack divided by the weight is the outside
component of the optimal convex split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hermitian as hm
from .devices import (Device, Ensemble, InstrumentSet, MeasurementAssemblage,
                      Povm, State, StateAssemblage, objective_normalization,
                      rebuild_from_blocks, validate)
from .freesets import (ConeBundle, DeviceShape, FreeSetSpec, emit_cone,
                       membership_check)
from .solver.program import ConeProgram, SolverFailure, term_adjoint_identity

# below this the convex split is degenerate and snapped to an exact 0 / 1
SPLIT_TOL = 1e-7


@dataclass
class WeightResult:
    weight: float
    witness: dict[tuple[int, int], np.ndarray]
    free_component: Device | None
    outside_component: Device | None
    gap: float
    relaxed: bool
    witness_value: float = np.nan
    iterations: int = 0
    _sigma_hat: dict = field(default_factory=dict, repr=False)
    _aux_values: dict = field(default_factory=dict, repr=False)
    _bundle: ConeBundle | None = field(default=None, repr=False)
    _spec: FreeSetSpec | None = field(default=None, repr=False)


def _clean_psd(block: np.ndarray) -> np.ndarray:
    """Symmetrize and clip solver-level negative eigenvalue noise."""
    w, v = np.linalg.eigh(hm.as_hermitian(block, tol=1e-6))
    scale = max(1.0, float(np.abs(w).max()))
    if w.min() < -1e-6 * scale:
        raise SolverFailure("numerical_failure",
                            f"component block has eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    return hm.as_hermitian((v * w) @ v.conj().T)


def _renormalize(template: Device, blocks: dict) -> Device:
    """Project cleaned blocks onto the exact device normalization manifold."""
    nx = 1 + max(x for _, x in blocks)
    ni = 1 + max(i for i, _ in blocks)
    out = dict(blocks)
    if isinstance(template, (State, Ensemble)):
        total = sum(float(np.trace(b).real) for b in out.values())
        out = {k: b / total for k, b in out.items()}
    elif isinstance(template, StateAssemblage):
        for x in range(nx):
            t = sum(float(np.trace(out[(i, x)]).real) for i in range(ni))
            for i in range(ni):
                out[(i, x)] = out[(i, x)] / t
    elif isinstance(template, (Povm, MeasurementAssemblage)):
        for x in range(nx):
            s_inv = hm.pseudo_inv_sqrt(sum(out[(i, x)] for i in range(ni)))
            for i in range(ni):
                out[(i, x)] = hm.as_hermitian(s_inv @ out[(i, x)] @ s_inv)
    elif isinstance(template, (InstrumentSet,)):
        dh, dk = template.dims
        for x in range(nx):
            marg = hm.partial_trace(sum(out[(i, x)] for i in range(ni)),
                                    template.dims, over="second")
            q = hm.kron(hm.pseudo_inv_sqrt(dh * marg), np.eye(dk))
            for i in range(ni):
                out[(i, x)] = hm.as_hermitian(q @ out[(i, x)] @ q)
    else:  # ChannelChoi
        dh, dk = template.dims
        marg = hm.partial_trace(out[(0, 0)], template.dims, over="second")
        q = hm.kron(hm.pseudo_inv_sqrt(dh * marg), np.eye(dk))
        out[(0, 0)] = hm.as_hermitian(q @ out[(0, 0)] @ q)
    return rebuild_from_blocks(template, out)


def _component_device(template: Device, blocks: dict, scale: float) -> Device:
    cleaned = {k: _clean_psd(b / scale) for k, b in blocks.items()}
    return _renormalize(template, cleaned)


def compute_weight(device: Device, spec: FreeSetSpec) -> WeightResult:
    """Weight, dual witness, and optimal convex split of a device."""
    spec.check_class(device)
    bad = validate(device)
    if bad:
        raise ValueError("invalid device: " + "; ".join(bad))
    shape = DeviceShape.of(device)
    norm = objective_normalization(device)

    prog = ConeProgram()
    bundle = emit_cone(prog, spec, shape)
    dev_blocks = device.blocks()
    slack_names = {}
    for (i, x), block in dev_blocks.items():
        name = f"slack_{i}_{x}"
        prog.add_dominance(bundle.element(i, x), block, name)
        slack_names[(i, x)] = name
        for coeff, handle, op in bundle.element(i, x):
            prog.add_objective(
                handle, norm * term_adjoint_identity(coeff, op, block.shape[0]))

    res = prog.solve_or_raise()
    value = min(max(res.value, 0.0), 1.0)
    lam = 1.0 - value

    witness = {}
    sigma_hat = {}
    witness_value = 0.0
    for label, block in dev_blocks.items():
        y = hm.as_hermitian(res.dual(slack_names[label]), tol=1e-6)
        witness[label] = y
        sigma_hat[label] = hm.as_hermitian(
            block - res.primal(slack_names[label]), tol=1e-6)
        witness_value += hm.hs_inner(block, y)

    aux_values = {h: res.primal_blocks[h] for h in bundle.aux}

    if lam <= SPLIT_TOL:
        weight = 0.0
        free = rebuild_from_blocks(device, dict(dev_blocks))
        outside = None
    elif lam >= 1.0 - SPLIT_TOL:
        weight = 1.0
        free = None
        outside = rebuild_from_blocks(device, dict(dev_blocks))
    else:
        weight = lam
        free = _component_device(device, sigma_hat, 1.0 - lam)
        outside = _component_device(
            device, {k: dev_blocks[k] - sigma_hat[k] for k in dev_blocks}, lam)

    return WeightResult(weight=weight, witness=witness, free_component=free,
                        outside_component=outside, gap=res.gap,
                        relaxed=bundle.relaxed, witness_value=witness_value,
                        iterations=res.iterations, _sigma_hat=sigma_hat,
                        _aux_values=aux_values, _bundle=bundle, _spec=spec)


class DecompositionError(RuntimeError):
    pass


def optimal_decomposition(result: WeightResult, device: Device,
                          tol: float = 1e-6):
    """Validated convex split (1-lambda, D_F, lambda, D_tilde) of the device.

    The free part's membership is certified constructively for the
    parametrized cones: the solver's auxiliary blocks, rescaled, must
    reproduce the free component.
    """
    lam = result.weight
    free, outside = result.free_component, result.outside_component
    dev_blocks = device.blocks()

    parts = []
    if free is not None:
        parts.append((1.0 - lam, free.blocks()))
    if outside is not None:
        parts.append((lam, outside.blocks()))
    for label, block in dev_blocks.items():
        recon = sum(c * blocks[label] for c, blocks in parts)
        scale = max(1.0, float(np.abs(block).max()))
        if float(np.abs(recon - block).max()) > tol * scale:
            raise DecompositionError(
                f"reconstruction residual too large on block {label}")

    for comp in (free, outside):
        if comp is not None:
            bad = validate(comp)
            if bad:
                raise DecompositionError("component invalid: " + "; ".join(bad))

    if free is not None and result._spec is not None:
        spec = result._spec
        if spec.kind in ("trivial-ensemble", "trivial-povm", "ppt-state", "eb-ppt"):
            if not membership_check(free, spec):
                raise DecompositionError("free component fails membership")
        else:
            # constructive membership: rescaled cone auxiliaries must map
            # onto the free component's blocks
            for (i, x), block in free.blocks().items():
                expr = np.zeros_like(block)
                for coeff, handle, op in result._bundle.element(i, x):
                    aux = result._aux_values[handle] / (1.0 - lam)
                    if op is None:
                        expr = expr + coeff * aux
                    elif op[0] == "pt":
                        expr = expr + coeff * hm.partial_transpose(aux, op[1])
                    elif op[0] == "eye":
                        expr = expr + coeff * aux[0, 0].real * np.eye(block.shape[0])
                if float(np.abs(expr - block).max()) > 10 * tol:
                    raise DecompositionError(
                        f"free component not certified by cone data at {(i, x)}")
    return (1.0 - lam, free, lam, outside)
