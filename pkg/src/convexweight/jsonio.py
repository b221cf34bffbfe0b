"""JSON documents for devices, weight results, games and certificates.

Complex entries are [re, im] pairs in row-major matrices; floats are
emitted with 17 significant digits so that serialize-parse round trips are
exact (and serialize o parse o serialize is byte identical).
"""

from __future__ import annotations

import json

import numpy as np

from . import hermitian as hm
from .devices import (ChannelChoi, Device, Ensemble, InstrumentSet,
                      MeasurementAssemblage, Povm, State, StateAssemblage,
                      validate)
from .games import ExclusionGame

SCHEMA_VERSION = "1"

KIND_NAMES = ("state", "ensemble", "state-assemblage", "povm",
              "measurement-assemblage", "channel-choi", "instrument-set")


class ParseError(ValueError):
    """Structured document error with a JSON-path and a category.

    category is one of 'json' (malformed text), 'schema' (wrong structure)
    or 'invariant' (valid structure, invalid device).
    """

    def __init__(self, category: str, path: str, message: str):
        super().__init__(f"{category} error at {path}: {message}")
        self.category = category
        self.path = path
        self.detail = message


# -- low-level encoding -------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        return "null"
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x))
    return format(float(x), ".17g")


def dumps(obj, indent: int = 0) -> str:
    """JSON text with deterministic 17-significant-digit floats."""
    pad = " " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = ",\n".join(f'{pad}  {json.dumps(str(k))}: {dumps(v)}'
                           for k, v in obj.items())
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj)}")


def matrix_to_doc(mat: np.ndarray) -> list:
    m = np.asarray(mat, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_doc(doc, path: str) -> np.ndarray:
    if not isinstance(doc, list) or not doc:
        raise ParseError("schema", path, "expected a nonempty matrix")
    n = len(doc)
    out = np.zeros((n, n), dtype=complex)
    for j, row in enumerate(doc):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError("schema", f"{path}[{j}]",
                             f"expected a row of {n} entries")
        for k, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(t, (int, float)) for t in z)):
                raise ParseError("schema", f"{path}[{j}][{k}]",
                                 "expected a [re, im] pair")
            out[j, k] = complex(z[0], z[1])
    return out


def _hermitian_from_doc(doc, path: str) -> np.ndarray:
    mat = matrix_from_doc(doc, path)
    try:
        return hm.as_hermitian(mat)
    except hm.HermitianError as exc:
        raise ParseError("schema", path, str(exc)) from exc


# -- devices ------------------------------------------------------------------

def serialize_device(device: Device) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "kind": device.kind}
    if isinstance(device, State):
        doc["dims"] = [device.block_dim]
        doc["data"] = matrix_to_doc(device.rho)
    elif isinstance(device, (Ensemble, Povm)):
        doc["dims"] = [device.block_dim]
        blocks = device.blocks()
        doc["data"] = [matrix_to_doc(blocks[(i, 0)])
                       for i in range(device.n_outcomes)]
    elif isinstance(device, (StateAssemblage, MeasurementAssemblage)):
        doc["dims"] = [device.block_dim]
        blocks = device.blocks()
        doc["data"] = [[matrix_to_doc(blocks[(i, x)])
                        for i in range(device.n_outcomes)]
                       for x in range(device.n_settings)]
    elif isinstance(device, ChannelChoi):
        doc["dims"] = list(device.dims)
        doc["data"] = matrix_to_doc(device.j)
    elif isinstance(device, InstrumentSet):
        doc["dims"] = list(device.dims)
        blocks = device.blocks()
        doc["data"] = [[matrix_to_doc(blocks[(i, x)])
                        for i in range(device.n_outcomes)]
                       for x in range(device.n_settings)]
    else:
        raise TypeError(f"unsupported device {type(device)}")
    return doc


def parse_device(text: str) -> Device:
    """Validated device from JSON text; raises ParseError otherwise."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("json", "$", str(exc)) from exc
    return device_from_doc(doc)


def device_from_doc(doc) -> Device:
    if not isinstance(doc, dict):
        raise ParseError("schema", "$", "expected an object")
    kind = doc.get("kind")
    if kind not in KIND_NAMES:
        raise ParseError("schema", "$.kind", f"unknown device kind {kind!r}")
    data = doc.get("data")
    if data is None:
        raise ParseError("schema", "$.data", "missing data")
    try:
        if kind == "state":
            device: Device = State(_hermitian_from_doc(data, "$.data"))
        elif kind == "ensemble":
            blocks = [_hermitian_from_doc(b, f"$.data[{i}]")
                      for i, b in enumerate(_expect_list(data, "$.data"))]
            device = Ensemble.from_blocks(blocks)
        elif kind == "povm":
            device = Povm([_hermitian_from_doc(b, f"$.data[{i}]")
                           for i, b in enumerate(_expect_list(data, "$.data"))])
        elif kind in ("state-assemblage", "measurement-assemblage"):
            rows = [[_hermitian_from_doc(b, f"$.data[{x}][{i}]")
                     for i, b in enumerate(_expect_list(row, f"$.data[{x}]"))]
                    for x, row in enumerate(_expect_list(data, "$.data"))]
            device = (StateAssemblage(rows) if kind == "state-assemblage"
                      else MeasurementAssemblage(rows))
        elif kind == "channel-choi":
            dims = _expect_dims(doc, 2)
            device = ChannelChoi(_hermitian_from_doc(data, "$.data"), dims)
        else:
            dims = _expect_dims(doc, 2)
            rows = [[_hermitian_from_doc(b, f"$.data[{x}][{i}]")
                     for i, b in enumerate(_expect_list(row, f"$.data[{x}]"))]
                    for x, row in enumerate(_expect_list(data, "$.data"))]
            device = InstrumentSet(rows, dims)
    except hm.HermitianError as exc:
        raise ParseError("schema", "$.data", str(exc)) from exc
    bad = validate(device)
    if bad:
        raise ParseError("invariant", "$.data", "; ".join(bad))
    return device


def _expect_list(obj, path: str) -> list:
    if not isinstance(obj, list) or not obj:
        raise ParseError("schema", path, "expected a nonempty array")
    return obj


def _expect_dims(doc, n: int) -> tuple:
    dims = doc.get("dims")
    if (not isinstance(dims, list) or len(dims) != n
            or not all(isinstance(d, int) and d >= 1 for d in dims)):
        raise ParseError("schema", "$.dims", f"expected {n} positive integers")
    return tuple(dims)


# -- results ------------------------------------------------------------------

def serialize_weight_result(result, device: Device) -> dict:
    witness = [[matrix_to_doc(result.witness[(i, x)])
                for i in range(device.n_outcomes)]
               for x in range(device.n_settings)]
    return {
        "schema_version": SCHEMA_VERSION,
        "weight": float(result.weight),
        "gap": float(result.gap),
        "relaxed": bool(result.relaxed),
        "witness_value": float(result.witness_value),
        "witness": witness,
        "free_component": (None if result.free_component is None
                           else serialize_device(result.free_component)),
        "outside_component": (None if result.outside_component is None
                              else serialize_device(result.outside_component)),
    }


def _ensemble_doc(ens):
    return [{"p": float(p), "rho": matrix_to_doc(r)} for p, r in ens]


def serialize_game(game: ExclusionGame) -> dict:
    doc = {"schema_version": SCHEMA_VERSION,
           "device_class": game.device_class,
           "canonical": bool(game.canonical)}
    if game.device_class == "instrument-set":
        doc["rewards"] = [[np.asarray(om).tolist() for om in row]
                          for row in game.rewards]
        doc["ensembles"] = [[_ensemble_doc(e) for e in row]
                            for row in game.ensembles]
        doc["povms"] = [[[matrix_to_doc(m) for m in effs] for effs in row]
                        for row in game.povms]
    else:
        doc["rewards"] = [np.asarray(om).tolist() for om in game.rewards]
        doc["ensembles"] = (None if game.ensembles is None else
                            [_ensemble_doc(e) for e in game.ensembles])
        doc["povms"] = (None if game.povms is None else
                        [[matrix_to_doc(m) for m in effs]
                         for effs in game.povms])
    return doc


def serialize_certificate(cert) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "e_blocks": [matrix_to_doc(e) for e in cert.e_blocks],
        "max_weight": float(cert.max_weight),
    }
