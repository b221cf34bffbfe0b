"""Block-diagonal Hermitian-PSD cone programs.

A :class:`ConeProgram` is built over complex Hermitian PSD variable blocks
with scalar equality rows (Hermitian coefficient matrices) and PSD
dominance constraints, then compiled to a real symmetric standard form via
the complex embedding (the factor 2 in embedded inner products is tracked
here) and handed to the interior-point engine.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .. import hermitian as hm
from . import ipm

DEFAULT_GAP_TOL = 1e-7
DEFAULT_FEAS_TOL = 1e-8


class SolverFailure(RuntimeError):
    """The interior-point engine did not reach a conclusive status."""

    def __init__(self, status: str, message: str = ""):
        super().__init__(message or f"solver status: {status}")
        self.status = status


# a term of a linear block expression: coeff * op(X_handle)
#   op None        -> X itself
#   op ("pt", (d1, d2)) -> partial transpose on the second factor
#   op ("eye", d)  -> value of a 1x1 block spread onto d x d identity
Term = tuple[float, int, tuple | None]


def term_matrix(coeff: float, op, basis_elem: np.ndarray) -> np.ndarray:
    """Row coefficient on a block for one output basis element (adjoint of op)."""
    if op is None:
        return coeff * basis_elem
    if op[0] == "pt":
        return coeff * hm.partial_transpose(basis_elem, op[1], on="second")
    if op[0] == "eye":
        return np.array([[coeff * np.trace(basis_elem).real]], dtype=complex)
    raise ValueError(f"unknown op {op!r}")


def term_adjoint_identity(coeff: float, op, dim: int) -> np.ndarray:
    """Adjoint of op applied to the identity on the output space."""
    if op is None or op[0] == "pt":
        return coeff * np.eye(dim, dtype=complex)
    if op[0] == "eye":
        return np.array([[coeff * dim]], dtype=complex)
    raise ValueError(f"unknown op {op!r}")


@dataclass
class SolveResult:
    """Primal/dual solution of a cone program.

    `value` is the optimum of the maximization; `dual_blocks` carries the
    dual slack Z_b = A^T y - C_b per variable block (the witness blocks of
    the weight programs live on the dominance slacks).
    """

    status: str
    value: float = np.nan
    primal_blocks: list[np.ndarray] = field(default_factory=list)
    dual_blocks: list[np.ndarray] = field(default_factory=list)
    y: np.ndarray | None = None
    gap: float = np.nan
    iterations: int = 0
    names: dict[str, int] = field(default_factory=dict)

    def primal(self, name: str) -> np.ndarray:
        return self.primal_blocks[self.names[name]]

    def dual(self, name: str) -> np.ndarray:
        return self.dual_blocks[self.names[name]]


class ConeProgram:
    """Builder for maximize sum_b <C_b, X_b> over Hermitian PSD blocks."""

    def __init__(self):
        self.dims: list[int] = []
        self.names: dict[str, int] = {}
        self._obj: dict[int, np.ndarray] = {}
        self._rows: list[tuple[dict[int, np.ndarray], float]] = []

    # -- construction -----------------------------------------------------

    def add_block(self, dim: int, name: str | None = None) -> int:
        if dim < 1:
            raise ValueError("block dimension must be >= 1")
        self.dims.append(int(dim))
        h = len(self.dims) - 1
        if name is not None:
            if name in self.names:
                raise ValueError(f"duplicate block name {name!r}")
            self.names[name] = h
        return h

    def add_scalar(self, name: str | None = None) -> int:
        return self.add_block(1, name)

    def add_objective(self, handle: int, c: np.ndarray) -> None:
        c = hm.as_hermitian(c)
        if handle in self._obj:
            self._obj[handle] = self._obj[handle] + c
        else:
            self._obj[handle] = c

    def add_row(self, coeffs: dict[int, np.ndarray], rhs: float) -> None:
        """Scalar equality sum_b <F_b, X_b> = rhs with Hermitian F_b."""
        self._rows.append(({h: hm.as_hermitian(f) for h, f in coeffs.items()},
                           float(rhs)))

    def add_block_equality(self, terms: list[Term], rhs: np.ndarray) -> None:
        """Entrywise equality sum_t coeff_t op_t(X_t) = rhs (Hermitian rhs)."""
        rhs = hm.as_hermitian(rhs)
        n = rhs.shape[0]
        for f in hm.hermitian_basis(n):
            coeffs: dict[int, np.ndarray] = {}
            for coeff, handle, op in terms:
                mat = term_matrix(coeff, op, f)
                if handle in coeffs:
                    coeffs[handle] = coeffs[handle] + mat
                else:
                    coeffs[handle] = mat
            self.add_row(coeffs, hm.hs_inner(f, rhs))

    def add_dominance(self, terms: list[Term], bound: np.ndarray,
                      name: str | None = None) -> int:
        """Constraint sum_t coeff_t op_t(X_t) <= bound via a PSD slack block."""
        bound = hm.as_hermitian(bound)
        slack = self.add_block(bound.shape[0], name)
        self.add_block_equality(list(terms) + [(1.0, slack, None)], bound)
        return slack

    # -- compilation ------------------------------------------------------

    def _svec_dims(self) -> list[int]:
        return [2 * d * (2 * d + 1) // 2 for d in self.dims]

    @staticmethod
    def _svec(m: np.ndarray) -> np.ndarray:
        """Isometric vectorization of a real symmetric matrix."""
        n = m.shape[0]
        iu = np.triu_indices(n, 1)
        return np.concatenate([np.diag(m), np.sqrt(2.0) * m[iu]])

    def compile(self) -> tuple[ipm.RealProgram, dict]:
        """Embed to real symmetric form, normalize rows, drop dependent rows.

        Returns the real program plus bookkeeping needed to interpret duals.
        If dependent rows are inconsistent the program is primal infeasible;
        a Farkas certificate is recorded instead of raising.
        """
        nblk = len(self.dims)
        if nblk == 0:
            raise ValueError("program has no blocks")
        emb_dims = [2 * d for d in self.dims]
        c_blocks = []
        for b in range(nblk):
            cb = self._obj.get(b)
            cb = np.zeros((self.dims[b],) * 2, dtype=complex) if cb is None else cb
            c_blocks.append(-hm.embed_complex(cb))  # min form for the engine
        # normalize the objective so that rescaled objectives follow the
        # same trajectory (scaling equivariance up to rounding)
        obj_scale = float(np.sqrt(sum(np.sum(cb * cb) for cb in c_blocks)))
        obj_scale = obj_scale if obj_scale > 1e-12 else 1.0
        c_blocks = [cb / obj_scale for cb in c_blocks]

        m_all = len(self._rows)
        rhs_all = np.array([2.0 * r for _, r in self._rows])
        emb_rows: list[dict[int, np.ndarray]] = []
        scales = np.ones(max(m_all, 1))
        for k, (coeffs, _) in enumerate(self._rows):
            emb = {h: hm.embed_complex(f) for h, f in coeffs.items()}
            nrm = np.sqrt(sum(float(np.sum(f * f)) for f in emb.values()))
            if nrm <= 1e-14:
                scales[k] = 1.0
            else:
                scales[k] = nrm
                emb = {h: f / nrm for h, f in emb.items()}
            emb_rows.append(emb)
        rhs_scaled = rhs_all / scales[:m_all] if m_all else rhs_all

        info: dict = {"scales": scales[:m_all], "kept": np.arange(m_all),
                      "infeasible": False, "obj_scale": obj_scale}
        keep = np.arange(m_all)
        if m_all:
            svd = self._svec_dims()
            offs = np.concatenate([[0], np.cumsum(svd)])
            g = np.zeros((m_all, offs[-1]))
            for k, emb in enumerate(emb_rows):
                for h, f in emb.items():
                    g[k, offs[h]:offs[h + 1]] = self._svec(f)
            q, r, piv = scipy.linalg.qr(g.T, mode="economic", pivoting=True)
            diag = np.abs(np.diag(r))
            tol = max(diag.max(), 1.0) * 1e-11 if diag.size else 0.0
            rank = int((diag > tol).sum())
            keep = np.sort(piv[:rank])
            dropped = np.setdiff1d(np.arange(m_all), keep)
            if dropped.size:
                coeff, *_ = np.linalg.lstsq(g[keep].T, g[dropped].T, rcond=None)
                resid = rhs_scaled[dropped] - coeff.T @ rhs_scaled[keep]
                bad = np.abs(resid) > 1e-9 * max(1.0, np.abs(rhs_scaled).max())
                if bad.any():
                    j = int(dropped[np.argmax(np.abs(resid))])
                    ray = np.zeros(m_all)
                    ray[j] = 1.0
                    ray[keep] = -coeff[:, dropped.tolist().index(j)]
                    sign = rhs_scaled @ ray
                    info["infeasible"] = True
                    info["farkas_y"] = (ray if sign > 0 else -ray) / scales[:m_all]
                    return ipm.RealProgram(emb_dims, c_blocks, rhs_scaled[keep],
                                           []), info

        info["kept"] = keep
        rows_per_block: list[tuple[np.ndarray, np.ndarray]] = []
        for b in range(nblk):
            idx, mats = [], []
            for pos, k in enumerate(keep):
                f = emb_rows[k].get(b)
                if f is not None:
                    idx.append(pos)
                    mats.append(f)
            if idx:
                rows_per_block.append((np.array(idx, dtype=np.intp),
                                       np.ascontiguousarray(np.stack(mats))))
            else:
                rows_per_block.append((np.array([], dtype=np.intp),
                                       np.zeros((0, emb_dims[b], emb_dims[b]))))
        b_vec = rhs_scaled[keep] if m_all else np.zeros(0)
        init_scale = 1.0 + max(
            [float(np.abs(b_vec).max()) if b_vec.size else 0.0]
            + [float(np.linalg.norm(cb, 2)) for cb in c_blocks])
        prog = ipm.RealProgram(emb_dims, c_blocks, b_vec, rows_per_block,
                               init_scale)
        return prog, info

    # -- solving ----------------------------------------------------------

    def solve(self, gap_tol: float | None = None, feas_tol: float = DEFAULT_FEAS_TOL,
              max_iter: int = ipm.MAX_ITER) -> SolveResult:
        if gap_tol is None:
            gap_tol = float(os.environ.get("CW_SOLVER_TOL", DEFAULT_GAP_TOL))
        prog, info = self.compile()
        if info["infeasible"]:
            y_full = info["farkas_y"]
            return SolveResult(ipm.PRIMAL_INFEASIBLE, y=y_full, names=dict(self.names))
        raw = ipm.solve_real(prog, gap_tol=gap_tol, feas_tol=feas_tol,
                             max_iter=max_iter)
        res = SolveResult(raw.status, iterations=raw.iterations,
                          names=dict(self.names))
        k = info["obj_scale"]
        if raw.status == ipm.OPTIMAL:
            res.value = -k * raw.pobj / 2.0
            res.gap = raw.gap
            res.primal_blocks = [hm.unembed_complex(xb) for xb in raw.x]
            res.dual_blocks = [k * hm.unembed_complex(sb) for sb in raw.s]
            y_full = np.zeros(len(self._rows))
            y_full[info["kept"]] = -k * raw.y
            res.y = y_full / info["scales"] if len(self._rows) else y_full
        elif raw.status in (ipm.PRIMAL_INFEASIBLE, ipm.DUAL_INFEASIBLE):
            if raw.y is not None and len(self._rows):
                y_full = np.zeros(len(self._rows))
                y_full[info["kept"]] = raw.y
                res.y = y_full / info["scales"]
            res.dual_blocks = [hm.unembed_complex(sb) for sb in raw.s]
            res.primal_blocks = [hm.unembed_complex(xb) for xb in raw.x]
        return res

    def solve_or_raise(self, **kw) -> SolveResult:
        res = self.solve(**kw)
        if res.status != ipm.OPTIMAL:
            raise SolverFailure(res.status)
        return res
