"""Free-set cones as affine + PSD constraint bundles, plus membership tests.

Each kind emits, into a cone program, auxiliary PSD blocks together with a
linear expression `element(i, x)` for the cone member's blocks.  The same
bundle powers the weight primal (dominance against the device), membership
feasibility, and the payoff minimization over the normalized free set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import hermitian as hm
from .devices import Device, PSD_TOL
from .solver.program import ConeProgram, SolverFailure, Term, term_matrix

STRATEGY_GUARD = 10**6

KIND_CLASSES: dict[str, set[str] | None] = {
    "trivial-ensemble": {"ensemble", "state-assemblage"},
    "trivial-povm": {"povm", "measurement-assemblage"},
    "jm": {"povm", "measurement-assemblage"},
    "lhs": {"state-assemblage"},
    "ppt-state": {"state"},
    "eb-ppt": {"channel-choi"},
    "custom": None,
}

# PPT equals separability only at these bipartitions
_PPT_EXACT = {(2, 2), (2, 3), (3, 2)}


@dataclass(frozen=True)
class FreeSetSpec:
    """Declarative description of a free set.

    `split` gives the bipartition for ppt-state; `generator` supplies the
    constraint bundle for the custom kind.
    """

    kind: str
    split: tuple[int, int] | None = None
    generator: Callable | None = None

    def __post_init__(self):
        if self.kind not in KIND_CLASSES:
            raise ValueError(f"unknown free-set kind {self.kind!r}")
        if self.kind == "custom" and self.generator is None:
            raise ValueError("custom free set needs a generator")

    def check_class(self, device: Device) -> None:
        allowed = KIND_CLASSES[self.kind]
        if allowed is not None and device.kind not in allowed:
            raise ValueError(
                f"free set {self.kind!r} is not defined for {device.kind!r} devices")


@dataclass(frozen=True)
class DeviceShape:
    kind: str
    block_dim: int
    n_outcomes: int
    n_settings: int
    dims: tuple[int, int] | None = None

    @classmethod
    def of(cls, device: Device) -> "DeviceShape":
        dims = getattr(device, "dims", None)
        return cls(device.kind, device.block_dim, device.n_outcomes,
                   device.n_settings, dims)

    def labels(self):
        return [(i, x) for x in range(self.n_settings)
                for i in range(self.n_outcomes)]


class ConeBundle:
    """Auxiliary blocks plus the linear map from them to the cone element."""

    def __init__(self, aux: list[int], element: Callable[[int, int], list[Term]],
                 relaxed: bool = False):
        self.aux = aux
        self.element = element
        self.relaxed = relaxed


def deterministic_strategies(n_settings: int, n_outcomes: int) -> list[tuple[int, ...]]:
    """All response functions setting -> outcome, in lexicographic order."""
    if n_settings < 1 or n_outcomes < 1:
        raise ValueError("counts must be >= 1")
    if n_outcomes**n_settings > STRATEGY_GUARD:
        raise ValueError(
            f"{n_outcomes}^{n_settings} strategies exceed the enumeration guard")
    return list(itertools.product(range(n_outcomes), repeat=n_settings))


def emit_cone(prog: ConeProgram, spec: FreeSetSpec, shape: DeviceShape) -> ConeBundle:
    """Add the cone's auxiliary blocks and linking rows; return the bundle."""
    d, ni, nx = shape.block_dim, shape.n_outcomes, shape.n_settings

    if spec.kind == "trivial-ensemble":
        tau = prog.add_block(d, "aux_tau")
        return ConeBundle([tau], lambda i, x: [(1.0, tau, None)])

    if spec.kind == "trivial-povm":
        q = {(i, x): prog.add_scalar(f"aux_q_{i}_{x}")
             for x in range(nx) for i in range(ni)}
        one = np.array([[1.0]])
        for x in range(1, nx):
            coeffs = {q[(i, x)]: one for i in range(ni)}
            for i in range(ni):
                coeffs[q[(i, 0)]] = coeffs.get(q[(i, 0)], 0) - one
            prog.add_row(coeffs, 0.0)
        return ConeBundle(list(q.values()),
                          lambda i, x: [(1.0, q[(i, x)], ("eye", d))])

    if spec.kind in ("jm", "lhs"):
        strategies = deterministic_strategies(nx, ni)
        parents = [prog.add_block(d, f"aux_parent_{k}")
                   for k in range(len(strategies))]
        if spec.kind == "jm":
            alpha = prog.add_scalar("aux_alpha")
            prog.add_block_equality(
                [(1.0, g, None) for g in parents] + [(-1.0, alpha, ("eye", d))],
                np.zeros((d, d)))
            aux = parents + [alpha]
        else:
            aux = parents

        def element(i, x, _strat=strategies, _par=parents):
            return [(1.0, _par[k], None) for k, lam in enumerate(_strat)
                    if lam[x] == i]

        return ConeBundle(aux, element)

    if spec.kind == "ppt-state":
        split = spec.split
        if split is None or split[0] * split[1] != d:
            raise ValueError(f"ppt-state needs a bipartition of dimension {d}")
        sig = prog.add_block(d, "aux_sigma")
        ptb = prog.add_block(d, "aux_sigma_pt")
        prog.add_block_equality(
            [(1.0, sig, ("pt", split)), (-1.0, ptb, None)], np.zeros((d, d)))
        return ConeBundle([sig, ptb], lambda i, x: [(1.0, sig, None)])

    if spec.kind == "eb-ppt":
        if shape.dims is None:
            raise ValueError("eb-ppt needs channel dims")
        dh, dk = shape.dims
        jhat = prog.add_block(d, "aux_jhat")
        ptb = prog.add_block(d, "aux_jhat_pt")
        prog.add_block_equality(
            [(1.0, jhat, ("pt", (dh, dk))), (-1.0, ptb, None)], np.zeros((d, d)))
        eye_k = np.eye(dk)
        eye_hk = np.eye(dh * dk)
        for f in hm.hermitian_basis(dh):
            coeff = hm.kron(f, eye_k) - (np.trace(f).real / dh) * eye_hk
            prog.add_row({jhat: coeff}, 0.0)
        return ConeBundle([jhat, ptb], lambda i, x: [(1.0, jhat, None)],
                          relaxed=(dh, dk) not in _PPT_EXACT)

    if spec.kind == "custom":
        return spec.generator(prog, shape)

    raise ValueError(f"unknown free-set kind {spec.kind!r}")


def element_row_coeffs(terms: list[Term], functional: np.ndarray) -> dict[int, np.ndarray]:
    """Coefficients of < functional, element > as a scalar row over the aux."""
    coeffs: dict[int, np.ndarray] = {}
    for c, h, op in terms:
        mat = term_matrix(c, op, functional)
        coeffs[h] = coeffs[h] + mat if h in coeffs else mat
    return coeffs


def add_normalization(prog: ConeProgram, bundle: ConeBundle,
                      shape: DeviceShape) -> None:
    """Pin the cone element to the normalized free set (scale alpha = 1)."""
    d, ni, nx = shape.block_dim, shape.n_outcomes, shape.n_settings
    eye = np.eye(d, dtype=complex)
    if shape.kind in ("state", "ensemble", "state-assemblage",
                      "channel-choi", "instrument-set"):
        for x in range(nx):
            coeffs: dict[int, np.ndarray] = {}
            for i in range(ni):
                for h, mat in element_row_coeffs(bundle.element(i, x), eye).items():
                    coeffs[h] = coeffs[h] + mat if h in coeffs else mat
            prog.add_row(coeffs, 1.0)
    elif shape.kind in ("povm", "measurement-assemblage"):
        for x in range(nx):
            terms = [t for i in range(ni) for t in bundle.element(i, x)]
            prog.add_block_equality(terms, eye)
    else:
        raise ValueError(f"unsupported device class {shape.kind!r}")


# -- membership -------------------------------------------------------------

def _approx_equal(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    scale = max(1.0, float(np.abs(a).max()), float(np.abs(b).max()))
    return float(np.abs(a - b).max()) <= tol * scale


def _direct_membership(device: Device, spec: FreeSetSpec) -> bool:
    tol = 10 * PSD_TOL
    blocks = device.blocks()
    if spec.kind == "trivial-ensemble":
        vals = list(blocks.values())
        first = vals[0]
        return (float(np.linalg.eigvalsh(first).min()) >= -tol
                and all(_approx_equal(v, first, tol) for v in vals[1:]))
    if spec.kind == "trivial-povm":
        d = device.block_dim
        for b in blocks.values():
            q = np.trace(b).real / d
            if q < -tol or not _approx_equal(b, q * np.eye(d), tol):
                return False
        return True
    if spec.kind == "ppt-state":
        rho = blocks[(0, 0)]
        pt = hm.partial_transpose(rho, spec.split, on="second")
        return (float(np.linalg.eigvalsh(rho).min()) >= -tol
                and float(np.linalg.eigvalsh(pt).min()) >= -tol)
    if spec.kind == "eb-ppt":
        j = blocks[(0, 0)]
        pt = hm.partial_transpose(j, device.dims, on="second")
        return (float(np.linalg.eigvalsh(j).min()) >= -tol
                and float(np.linalg.eigvalsh(pt).min()) >= -tol)
    raise ValueError(spec.kind)


def membership_check(device: Device, spec: FreeSetSpec) -> bool:
    """True iff the device lies in the free set.

    Kinds whose cone membership reduces to closed-form spectral or equality
    conditions are checked directly; the parametrized cones (jm, lhs,
    custom) run a feasibility program whose infeasibility certificate
    witnesses 'outside'.
    """
    spec.check_class(device)
    if spec.kind in ("trivial-ensemble", "trivial-povm", "ppt-state", "eb-ppt"):
        return _direct_membership(device, spec)

    prog = ConeProgram()
    shape = DeviceShape.of(device)
    bundle = emit_cone(prog, spec, shape)
    for (i, x), block in device.blocks().items():
        prog.add_block_equality(bundle.element(i, x), block)
    for h in bundle.aux:
        prog.add_objective(h, -np.eye(prog.dims[h]))
    res = prog.solve()
    if res.status == "optimal":
        return True
    if res.status == "primal_infeasible":
        return False
    raise SolverFailure(res.status, f"membership check ended with {res.status}")
