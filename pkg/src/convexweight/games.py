"""Exclusion input-output games: payoffs, witness games, ratio checks.

A game pairs reward tensors with the half of the data the device does not
supply: measurement-side devices play against fixed input ensembles,
state-side devices against fixed POVMs, and transformation devices against
both.  Witness games are built from the dual blocks of a weight
computation so that the payoff ratio against the free set reproduces
1 - W exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hermitian as hm
from .devices import (ChannelChoi, Device, Ensemble, InstrumentSet,
                      MeasurementAssemblage, Povm, State, StateAssemblage,
                      random_state)
from .freesets import (ConeBundle, DeviceShape, FreeSetSpec, add_normalization,
                       element_row_coeffs, emit_cone)
from .solver.program import ConeProgram
from .weight import WeightResult

STATE_SIDE = ("state", "ensemble", "state-assemblage")
MEAS_SIDE = ("povm", "measurement-assemblage")


class GameError(ValueError):
    pass


@dataclass
class ExclusionGame:
    """Game data for one device class.

    `povms[x]` / `ensembles[x]` index setting contexts; for instrument sets
    both are nested one level deeper as `[x][i]`.  `rewards[x]` (or
    `rewards[x][i]`) are 2D arrays over (input label, outcome label).
    """

    device_class: str
    rewards: list
    ensembles: list | None = None
    povms: list | None = None
    canonical: bool = False
    meta: dict = field(default_factory=dict)


# -- payoff evaluation --------------------------------------------------------

def payoff(game: ExclusionGame, device: Device) -> float:
    """Reward-weighted success functional of the device in the game."""
    if device.kind != game.device_class:
        raise GameError(
            f"game for {game.device_class!r} cannot score a {device.kind!r}")
    blocks = device.blocks()
    total = 0.0
    if device.kind in STATE_SIDE:
        for x, omega in enumerate(game.rewards):
            effects = game.povms[x]
            for i in range(omega.shape[0]):
                for j in range(omega.shape[1]):
                    if omega[i, j] != 0.0:
                        total += omega[i, j] * hm.hs_inner(effects[j], blocks[(i, x)])
        return total
    if device.kind in MEAS_SIDE:
        for x, omega in enumerate(game.rewards):
            ens = game.ensembles[x]
            for i in range(omega.shape[0]):
                p, rho = ens[i]
                if p == 0.0:
                    continue
                for j in range(omega.shape[1]):
                    if omega[i, j] != 0.0:
                        total += omega[i, j] * p * hm.hs_inner(rho, blocks[(j, x)])
        return total
    if device.kind == "channel-choi":
        omega = game.rewards[0]
        for a, (p, rho) in enumerate(game.ensembles[0]):
            out = hm.choi_invert(device.j, device.dims, rho)
            for b, eff in enumerate(game.povms[0]):
                total += omega[a, b] * p * hm.hs_inner(eff, out)
        return total
    if device.kind == "instrument-set":
        for x in range(len(game.rewards)):
            for i in range(len(game.rewards[x])):
                omega = game.rewards[x][i]
                for a, (p, rho) in enumerate(game.ensembles[x][i]):
                    out = hm.choi_invert(blocks[(i, x)], device.dims, rho)
                    for b, eff in enumerate(game.povms[x][i]):
                        total += omega[a, b] * p * hm.hs_inner(eff, out)
        return total
    raise GameError(f"unsupported device class {device.kind!r}")


def payoff_functionals(game: ExclusionGame, shape: DeviceShape) -> dict:
    """Hermitian K per device block label with payoff = sum <K, block>."""
    out: dict[tuple[int, int], np.ndarray] = {}
    if shape.kind in STATE_SIDE:
        for x, omega in enumerate(game.rewards):
            for i in range(omega.shape[0]):
                k = sum(omega[i, j] * game.povms[x][j]
                        for j in range(omega.shape[1]))
                out[(i, x)] = hm.as_hermitian(k)
        return out
    if shape.kind in MEAS_SIDE:
        for x, omega in enumerate(game.rewards):
            for j in range(omega.shape[1]):
                k = sum(omega[i, j] * p * rho
                        for i, (p, rho) in enumerate(game.ensembles[x]))
                out[(j, x)] = hm.as_hermitian(k)
        return out
    if shape.kind == "channel-choi":
        out[(0, 0)] = _lifted_witness(game.rewards[0], game.ensembles[0],
                                      game.povms[0], shape.dims[0])
        return out
    if shape.kind == "instrument-set":
        for x in range(len(game.rewards)):
            for i in range(len(game.rewards[x])):
                out[(i, x)] = _lifted_witness(game.rewards[x][i],
                                              game.ensembles[x][i],
                                              game.povms[x][i], shape.dims[0])
        return out
    raise GameError(shape.kind)


def _lifted_witness(omega, ensemble, effects, dh: int) -> np.ndarray:
    """d * sum omega p rho^T (x) M, so that <K, J> is the game payoff."""
    k = 0
    for a, (p, rho) in enumerate(ensemble):
        for b, eff in enumerate(effects):
            k = k + dh * omega[a, b] * p * hm.kron(rho.T, eff)
    return hm.as_hermitian(k)


# -- informationally complete frames -----------------------------------------

_QUBIT_KETS = [
    np.array([1.0, 0.0]),
    np.array([0.0, 1.0]),
    np.array([1.0, 1.0]) / np.sqrt(2),
    np.array([1.0, -1.0]) / np.sqrt(2),
    np.array([1.0, 1.0j]) / np.sqrt(2),
    np.array([1.0, -1.0j]) / np.sqrt(2),
]


def ic_frame(dim: int):
    """Input ensemble and POVM spanning the Hermitian operators on C^dim.

    Powers of two use tensor products of the six Pauli eigenstates with the
    projectors scaled into a POVM; other dimensions use the computational
    plus two-level superposition states, completed into a POVM by an
    inverse-square-root filter.
    """
    k = dim.bit_length() - 1
    if dim == 2**k:
        kets = [np.array([1.0])]
        for _ in range(k):
            kets = [np.kron(a, b) for a in kets for b in _QUBIT_KETS]
        projs = [np.outer(v, v.conj()) for v in kets]
        ensemble = [(1.0 / len(projs), hm.as_hermitian(p)) for p in projs]
        effects = [hm.as_hermitian(p / 3.0**k) for p in projs]
        return ensemble, effects
    kets = [np.eye(dim)[:, j].astype(complex) for j in range(dim)]
    extra = []
    for j in range(dim):
        for l in range(j + 1, dim):
            e = np.zeros(dim, dtype=complex)
            e[j] = 1.0
            for phase in (1.0, 1.0j):
                v = e.copy()
                v[l] = phase
                extra.append(v / np.sqrt(2))
    kets = kets + extra
    projs = [np.outer(v, v.conj()) for v in kets]
    ensemble = [(1.0 / len(projs), hm.as_hermitian(p)) for p in projs]
    effects = exclusion_povm_filter(projs)
    return ensemble, effects


def exclusion_povm_filter(blocks) -> list[np.ndarray]:
    """Conjugate witness blocks by the inverse square root of their sum.

    Returns a valid POVM; fails when the sum is singular beyond the kernel
    cutoff, since the filtered effects could then only resolve a subspace.
    """
    blocks = [hm.as_hermitian(b, tol=1e-6) for b in blocks]
    s = sum(blocks)
    w = np.linalg.eigvalsh(s)
    if w.min() <= hm.KERNEL_CUTOFF * max(1.0, w.max()):
        raise GameError("witness sum is singular; cannot filter into a POVM")
    s_inv = hm.pseudo_inv_sqrt(s)
    return [hm.as_hermitian(s_inv @ b @ s_inv) for b in blocks]


def _solve_reward_tensor(y: np.ndarray, ensemble, effects, dh: int):
    """Least-squares omega with y = d sum omega p rho^T (x) M."""
    cols = []
    for p, rho in ensemble:
        for eff in effects:
            mat = dh * p * hm.kron(rho.T, eff)
            cols.append(np.concatenate([mat.real.ravel(), mat.imag.ravel()]))
    design = np.stack(cols, axis=1)
    target = np.concatenate([y.real.ravel(), y.imag.ravel()])
    omega, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = float(np.linalg.norm(design @ omega - target))
    if resid > 1e-8 * max(1.0, float(np.linalg.norm(target))):
        raise GameError(
            f"witness decomposition residual {resid:.3e}: frame is not "
            "informationally complete")
    return omega.reshape(len(ensemble), len(effects))


# -- witness games ------------------------------------------------------------

def game_from_witness(witness: dict, shape: DeviceShape) -> ExclusionGame:
    """Exclusion game realizing the dual witness as a payoff functional."""
    ni, nx = shape.n_outcomes, shape.n_settings
    d = shape.block_dim

    if shape.kind in STATE_SIDE:
        total = sum(witness.values())
        n = hm.operator_norm(total)
        if n <= 1e-12:
            raise GameError("zero witness cannot seed a game")
        povms, rewards = [], []
        for x in range(nx):
            effects = [witness[(i, x)] / n for i in range(ni)]
            completion = np.eye(d) - sum(effects)
            povms.append(effects + [hm.as_hermitian(completion, tol=1e-6)])
            omega = np.zeros((ni, ni + 1))
            omega[:ni, :ni] = np.eye(ni)
            rewards.append(omega)
        return ExclusionGame(shape.kind, rewards, povms=povms,
                             meta={"witness_scale": n})

    if shape.kind in MEAS_SIDE:
        traces = {k: float(np.trace(y).real) for k, y in witness.items()}
        n_tilde = sum(traces.values())
        if n_tilde <= 1e-12:
            raise GameError("zero witness cannot seed a game")
        ensembles, rewards = [], []
        for x in range(nx):
            ens = []
            for i in range(ni):
                t = traces[(i, x)]
                rho = witness[(i, x)] / t if t > 1e-12 * n_tilde \
                    else np.eye(d) / d
                ens.append((t / n_tilde, hm.as_hermitian(rho, tol=1e-6)))
            ensembles.append(ens)
            rewards.append(np.eye(ni))
        return ExclusionGame(shape.kind, rewards, ensembles=ensembles,
                             meta={"witness_scale": n_tilde})

    if shape.kind == "channel-choi":
        ensemble, effects = ic_frame(shape.dims[0])
        omega = _solve_reward_tensor(witness[(0, 0)], ensemble, effects,
                                     shape.dims[0])
        return ExclusionGame(shape.kind, [omega], ensembles=[ensemble],
                             povms=[effects])

    if shape.kind == "instrument-set":
        ensemble, effects = ic_frame(shape.dims[0])
        rewards = [[_solve_reward_tensor(witness[(i, x)], ensemble, effects,
                                         shape.dims[0])
                    for i in range(ni)] for x in range(nx)]
        return ExclusionGame(
            shape.kind, rewards,
            ensembles=[[ensemble] * ni for _ in range(nx)],
            povms=[[effects] * ni for _ in range(nx)])

    raise GameError(shape.kind)


# -- optimization of payoffs over device classes and free sets ----------------

def _add_class_constraints(prog: ConeProgram, shape: DeviceShape,
                           handles: dict) -> None:
    d, ni, nx = shape.block_dim, shape.n_outcomes, shape.n_settings
    eye = np.eye(d, dtype=complex)
    if shape.kind in STATE_SIDE:
        for x in range(nx):
            prog.add_row({handles[(i, x)]: eye for i in range(ni)}, 1.0)
    elif shape.kind in MEAS_SIDE:
        for x in range(nx):
            prog.add_block_equality(
                [(1.0, handles[(i, x)], None) for i in range(ni)], eye)
    elif shape.kind in ("channel-choi", "instrument-set"):
        dh, dk = shape.dims
        for x in range(nx):
            for f in hm.hermitian_basis(dh):
                coeff = hm.kron(f, np.eye(dk))
                prog.add_row({handles[(i, x)]: coeff for i in range(ni)},
                             np.trace(f).real / dh)
    else:
        raise GameError(shape.kind)


def optimize_over_class(functionals: dict, shape: DeviceShape,
                        maximize: bool) -> float:
    """Extremal value of sum <K, block> over all valid devices of a class."""
    prog = ConeProgram()
    handles = {lbl: prog.add_block(shape.block_dim, f"b_{lbl[0]}_{lbl[1]}")
               for lbl in shape.labels()}
    sign = 1.0 if maximize else -1.0
    for lbl, k in functionals.items():
        prog.add_objective(handles[lbl], sign * k)
    _add_class_constraints(prog, shape, handles)
    res = prog.solve_or_raise()
    return sign * res.value


def optimize_over_free(functionals: dict, shape: DeviceShape,
                       spec: FreeSetSpec, maximize: bool = False) -> float:
    """Extremal value of sum <K, element> over the normalized free set."""
    prog = ConeProgram()
    bundle = emit_cone(prog, spec, shape)
    sign = 1.0 if maximize else -1.0
    for lbl, k in functionals.items():
        i, x = lbl
        for h, mat in element_row_coeffs(bundle.element(i, x), sign * k).items():
            prog.add_objective(h, mat)
    add_normalization(prog, bundle, shape)
    res = prog.solve_or_raise()
    return sign * res.value


# -- canonical form -----------------------------------------------------------

def _shift_constant(game: ExclusionGame, shape: DeviceShape) -> float:
    """Payoff change per unit added to every reward entry.

    Requires the game structure that makes a uniform reward shift a
    device-independent payoff shift (complete POVMs on the state side,
    shared per-setting frames for instrument sets).
    """
    tol = 1e-8
    if shape.kind in STATE_SIDE:
        for x, effects in enumerate(game.povms):
            s = sum(effects)
            if float(np.abs(s - np.eye(s.shape[0])).max()) > tol:
                raise GameError("game POVMs are incomplete; shift is not "
                                "device independent")
        return float(shape.n_settings)
    if shape.kind in MEAS_SIDE:
        return float(sum(p for ens in game.ensembles for p, _ in ens))
    if shape.kind == "channel-choi":
        s = sum(game.povms[0])
        if float(np.abs(s - np.eye(s.shape[0])).max()) > tol:
            raise GameError("game POVM is incomplete; shift is not "
                            "device independent")
        return float(sum(p for p, _ in game.ensembles[0]))
    if shape.kind == "instrument-set":
        total = 0.0
        for x in range(len(game.rewards)):
            ref = game.ensembles[x][0]
            for i in range(1, len(game.ensembles[x])):
                ens = game.ensembles[x][i]
                if len(ens) != len(ref) or any(
                        abs(p - q) > tol or np.abs(r - s).max() > tol
                        for (p, r), (q, s) in zip(ens, ref)):
                    raise GameError("instrument game frames differ across "
                                    "outcomes; shift is not device independent")
            s = sum(game.povms[x][0])
            if float(np.abs(s - np.eye(s.shape[0])).max()) > tol:
                raise GameError("game POVM is incomplete")
            total += sum(p for p, _ in ref)
        return total
    raise GameError(shape.kind)


def canonicalize(game: ExclusionGame, shape: DeviceShape) -> ExclusionGame:
    """Rescale rewards so the class-wide payoff range is exactly [0, 1]."""
    funcs = payoff_functionals(game, shape)
    lo = optimize_over_class(funcs, shape, maximize=False)
    hi = optimize_over_class(funcs, shape, maximize=True)
    if hi - lo <= 1e-9:
        raise GameError("constant payoff: game has no canonical form")
    shift = _shift_constant(game, shape)
    delta = lo / shift
    scale = hi - lo
    if game.device_class == "instrument-set":
        rewards = [[(om - delta) / scale for om in row] for row in game.rewards]
    else:
        rewards = [(om - delta) / scale for om in game.rewards]
    return ExclusionGame(game.device_class, rewards, ensembles=game.ensembles,
                         povms=game.povms, canonical=True,
                         meta=dict(game.meta, payoff_min=lo, payoff_max=hi))


# -- ratio verification -------------------------------------------------------

def random_game(shape: DeviceShape, rng) -> ExclusionGame:
    """Random complete game of the class with rewards in [0, 1]."""
    ni, nx, d = shape.n_outcomes, shape.n_settings, shape.block_dim
    if shape.kind in STATE_SIDE:
        from .devices import random_povm_effects
        povms = [random_povm_effects(rng, d, ni) for _ in range(nx)]
        rewards = [rng.uniform(size=(ni, ni)) for _ in range(nx)]
        return ExclusionGame(shape.kind, rewards, povms=povms)
    if shape.kind in MEAS_SIDE:
        p = rng.dirichlet(np.ones(ni * nx)).reshape(nx, ni)
        ensembles = [[(p[x, i], random_state(rng, d)) for i in range(ni)]
                     for x in range(nx)]
        rewards = [rng.uniform(size=(ni, ni)) for _ in range(nx)]
        return ExclusionGame(shape.kind, rewards, ensembles=ensembles)
    if shape.kind == "channel-choi":
        dh, dk = shape.dims
        from .devices import random_povm_effects
        n_in = dh * dh
        p = rng.dirichlet(np.ones(n_in))
        ens = [(p[a], random_state(rng, dh)) for a in range(n_in)]
        effects = random_povm_effects(rng, dk, dk + 1)
        return ExclusionGame(shape.kind, [rng.uniform(size=(n_in, dk + 1))],
                             ensembles=[ens], povms=[effects])
    if shape.kind == "instrument-set":
        dh, dk = shape.dims
        from .devices import random_povm_effects
        n_in = dh * dh
        rewards, ensembles, povms = [], [], []
        for x in range(nx):
            p = rng.dirichlet(np.ones(n_in))
            ens = [(p[a], random_state(rng, dh)) for a in range(n_in)]
            effects = random_povm_effects(rng, dk, dk + 1)
            rewards.append([rng.uniform(size=(n_in, dk + 1))
                            for _ in range(ni)])
            ensembles.append([ens] * ni)
            povms.append([effects] * ni)
        return ExclusionGame(shape.kind, rewards, ensembles=ensembles,
                             povms=povms)
    raise GameError(shape.kind)


def verify_ratio(device: Device, spec: FreeSetSpec, result: WeightResult,
                 n_random_games: int = 20, seed: int = 0,
                 ratio_tol: float = 1e-5) -> dict:
    """Check the payoff-ratio identity and the payoff lower bound.

    At the witness game the device-to-free payoff ratio must equal 1 - W;
    the outside component must score zero; and for random nonnegative
    games the device payoff must dominate (1 - W) times the free minimum.
    """
    shape = DeviceShape.of(device)
    game = game_from_witness(result.witness, shape)
    num = payoff(game, device)
    funcs = payoff_functionals(game, shape)
    den = optimize_over_free(funcs, shape, spec, maximize=False)

    report = {"weight": result.weight, "num": num, "den": den,
              "ratio": np.nan, "pass": False, "outside_payoff": None,
              "lower_bound_violation": 0.0}
    if den <= 1e-9:
        if result.weight < 1.0 - 1e-6:
            raise GameError("free-set payoff minimum vanished for a device "
                            "of weight below one: witness normalization fault")
        report["ratio"] = 0.0
        report["pass"] = num <= ratio_tol
    else:
        ratio = num / den
        report["ratio"] = ratio
        report["pass"] = abs(ratio - (1.0 - result.weight)) <= ratio_tol

    if result.outside_component is not None:
        p_out = payoff(game, result.outside_component)
        report["outside_payoff"] = p_out
        report["pass"] = report["pass"] and abs(p_out) <= 1e-6 * max(
            1.0, abs(num), abs(den))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_random_games):
        g = random_game(shape, rng)
        fg = payoff_functionals(g, shape)
        p_dev = payoff(g, device)
        p_free = optimize_over_free(fg, shape, spec, maximize=False)
        worst = min(worst, p_dev - (1.0 - result.weight) * p_free)
    report["lower_bound_violation"] = -worst
    report["pass"] = report["pass"] and worst >= -1e-6
    return report
