"""Homogeneous self-dual interior-point method for block-diagonal SDPs.

Solves the standard form

    minimize  <c, x>   s.t.  A(x) = b,  x in product of real PSD cones,

by path following on the self-dual embedding with Nesterov-Todd scaling,
a Mehrotra predictor-corrector and a dense Schur-complement solve.  The
embedding yields clean primal/dual infeasibility certificates, which the
free-set membership tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import kernels

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
NUMERICAL_FAILURE = "numerical_failure"

MAX_ITER = 200
STEP_FRACTION = 0.99


@dataclass
class RealProgram:
    """Assembled real standard-form data, block-sparse by rows."""

    dims: list[int]
    c: list[np.ndarray]
    b: np.ndarray
    # per block: (row indices touching the block, stacked coefficient matrices)
    rows: list[tuple[np.ndarray, np.ndarray]]
    init_scale: float = 1.0


@dataclass
class RawResult:
    status: str
    x: list[np.ndarray] = field(default_factory=list)
    y: np.ndarray | None = None
    s: list[np.ndarray] = field(default_factory=list)
    pobj: float = np.nan
    dobj: float = np.nan
    gap: float = np.nan
    pres: float = np.nan
    dres: float = np.nan
    iterations: int = 0


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def _chol_psd(m: np.ndarray) -> np.ndarray:
    """Cholesky factor with an eigenvalue-clipped fallback near the boundary."""
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(_sym(m))
        floor = max(w.max(), 1.0) * 1e-14
        w = np.clip(w, floor, None)
        # not triangular, but only ever used through products L @ L.T
        return v * np.sqrt(w)


class _Solver:
    def __init__(self, prog: RealProgram, gap_tol: float, feas_tol: float,
                 max_iter: int = MAX_ITER):
        self.prog = prog
        self.gap_tol = gap_tol
        self.feas_tol = feas_tol
        self.max_iter = max_iter
        self.dims = prog.dims
        self.nblk = len(prog.dims)
        self.m = prog.b.size
        self.nu = sum(prog.dims) + 1
        self.bnorm = 1.0 + float(np.linalg.norm(prog.b))
        self.cnorm = 1.0 + float(np.sqrt(sum(np.sum(cb * cb) for cb in prog.c)))
        row_norms = [
            float(np.sqrt((mats * mats).sum(axis=(1, 2)).max())) if mats.size else 0.0
            for _, mats in prog.rows
        ]
        self.anorm = max(1.0, max(row_norms, default=1.0))

    # -- linear maps ------------------------------------------------------

    def apply_a(self, x: list[np.ndarray]) -> np.ndarray:
        out = np.zeros(self.m)
        for b, (idx, mats) in enumerate(self.prog.rows):
            if idx.size:
                out[idx] += kernels.inner_products(mats, x[b])
        return out

    def apply_at(self, y: np.ndarray) -> list[np.ndarray]:
        out = []
        for b, (idx, mats) in enumerate(self.prog.rows):
            n = self.dims[b]
            if idx.size:
                out.append(kernels.weighted_sum(mats, np.ascontiguousarray(y[idx])))
            else:
                out.append(np.zeros((n, n)))
        return out

    @staticmethod
    def _dot(a: list[np.ndarray], b: list[np.ndarray]) -> float:
        return float(sum(np.sum(x * y) for x, y in zip(a, b)))

    # -- main loop --------------------------------------------------------

    def solve(self) -> RawResult:
        prog = self.prog
        t0 = prog.init_scale
        x = [t0 * np.eye(n) for n in self.dims]
        s = [t0 * np.eye(n) for n in self.dims]
        y = np.zeros(self.m)
        tau, kappa = 1.0, 1.0

        best = RawResult(NUMERICAL_FAILURE)
        for it in range(self.max_iter):
            ax = self.apply_a(x)
            aty = self.apply_at(y)
            r_p = ax - tau * prog.b
            r_d = [tau * prog.c[b] - aty[b] - s[b] for b in range(self.nblk)]
            cx = self._dot(prog.c, x)
            by = float(prog.b @ y)
            r_g = cx - by + kappa

            # convergence / certificate tests on the de-homogenized point
            pres = float(np.linalg.norm(r_p / tau)) / self.bnorm
            dres = float(np.sqrt(sum(np.sum((rb / tau) ** 2) for rb in r_d))) / self.cnorm
            pobj = cx / tau
            dobj = by / tau
            gap = abs(pobj - dobj) / max(1.0, abs(pobj), abs(dobj))
            comp = self._dot(x, s) / (tau * tau) / max(1.0, abs(pobj), abs(dobj))
            if pres <= self.feas_tol and dres <= self.feas_tol \
                    and max(gap, comp) <= self.gap_tol:
                return RawResult(OPTIMAL, [xb / tau for xb in x], y / tau,
                                 [sb / tau for sb in s], pobj, dobj,
                                 max(gap, comp), pres, dres, it)

            # infeasibility certificates from the homogeneous iterate: the
            # normalized improving-ray residual must be tiny
            if by > 0:
                res = np.sqrt(sum(np.sum((aty[b] + s[b]) ** 2) for b in range(self.nblk)))
                if res <= 1e-8 * self.anorm * by:
                    return RawResult(PRIMAL_INFEASIBLE, [xb / by for xb in x], y / by,
                                     [sb / by for sb in s], np.nan, np.nan,
                                     np.nan, pres, dres, it)
            if cx < 0:
                if float(np.linalg.norm(ax)) <= 1e-8 * self.anorm * (-cx):
                    return RawResult(DUAL_INFEASIBLE, [xb / -cx for xb in x], y / -cx,
                                     [sb / -cx for sb in s], np.nan, np.nan,
                                     np.nan, pres, dres, it)

            mu = (self._dot(x, s) + tau * kappa) / self.nu
            if not np.isfinite(mu) or tau < 1e-12 or mu <= 0:
                break
            best = RawResult(NUMERICAL_FAILURE, [xb / tau for xb in x], y / tau,
                             [sb / tau for sb in s], pobj, dobj,
                             max(gap, comp), pres, dres, it)

            # Nesterov-Todd scaling per block: with L_s^T L_x = U diag(sv) V^T,
            # R = L_x V / sqrt(sv) satisfies R^-1 X R^-T = R^T S R = diag(sv)
            lam, r_mat, r_inv = [], [], []
            for b in range(self.nblk):
                lx = _chol_psd(x[b])
                ls = _chol_psd(s[b])
                _, sv, vt = np.linalg.svd(ls.T @ lx)
                sv = np.clip(sv, 1e-150, None)
                r_b = (lx @ vt.T) / np.sqrt(sv)
                ri_b = (np.sqrt(sv)[:, None] * vt) @ np.linalg.solve(
                    lx, np.eye(self.dims[b]))
                lam.append(sv)
                r_mat.append(r_b)
                r_inv.append(ri_b)
            w = [rb @ rb.T for rb in r_mat]

            # Schur complement over the touching rows of each block
            schur = np.zeros((self.m, self.m))
            for b, (idx, mats) in enumerate(self.prog.rows):
                if idx.size:
                    schur[np.ix_(idx, idx)] += kernels.gram_conjugated(mats, w[b])
            try:
                schur_f = np.linalg.cholesky(
                    schur + np.eye(self.m) * (1e-13 * max(1.0, schur.trace() / max(self.m, 1))))
            except np.linalg.LinAlgError:
                schur_f = None

            def msolve(rhs):
                if self.m == 0:
                    return rhs
                if schur_f is not None:
                    z = solve_triangular(schur_f, rhs, lower=True)
                    return solve_triangular(schur_f.T, z, lower=False)
                return np.linalg.lstsq(schur, rhs, rcond=None)[0]

            wcw = [w[b] @ prog.c[b] @ w[b] for b in range(self.nblk)]
            v_vec = self.apply_a(wcw)
            u1 = msolve(v_vec + prog.b)
            qcc = self._dot(prog.c, wcw)
            wrdw = [w[b] @ r_d[b] @ w[b] for b in range(self.nblk)]
            a_wrdw = self.apply_a(wrdw)
            qcrd = self._dot(prog.c, wrdw)

            def direction(sigma, d_blocks, d_tk, corr_used):
                eta = 1.0 - sigma if corr_used else 1.0
                phi = [r_mat[b] @ _lyap_inv(lam[b], d_blocks[b]) @ r_mat[b].T
                       for b in range(self.nblk)]
                a_phi = self.apply_a(phi)
                rhs1 = -eta * r_p - a_phi + eta * a_wrdw
                u2 = msolve(rhs1)
                coef = -qcc + float((v_vec - prog.b) @ u1) - kappa / tau
                rhs_t = (-eta * r_g - self._dot(prog.c, phi) + eta * qcrd
                         - float((v_vec - prog.b) @ u2) - d_tk / tau)
                dtau = rhs_t / coef
                dy = dtau * u1 + u2
                atdy = self.apply_at(dy)
                ds = [prog.c[b] * dtau - atdy[b] + eta * r_d[b] for b in range(self.nblk)]
                dx = [_sym(phi[b] - w[b] @ ds[b] @ w[b]) for b in range(self.nblk)]
                ds = [_sym(d) for d in ds]
                dkappa = (d_tk - kappa * dtau) / tau
                return dx, dy, ds, dtau, dkappa

            # predictor
            d_aff = [-np.diag(lam[b] ** 2) for b in range(self.nblk)]
            dxa, dya, dsa, dta, dka = direction(0.0, d_aff, -tau * kappa, False)
            alpha_a = min(1.0, self._max_step(x, s, tau, kappa, dxa, dsa, dta, dka,
                                              lam, r_mat, r_inv))
            ga = (self._dot([x[b] + alpha_a * dxa[b] for b in range(self.nblk)],
                            [s[b] + alpha_a * dsa[b] for b in range(self.nblk)])
                  + (tau + alpha_a * dta) * (kappa + alpha_a * dka))
            sigma = min(max((ga / (mu * self.nu)) ** 3, 1e-10), 1.0 - 1e-10)

            # corrector
            d_comb = []
            for b in range(self.nblk):
                dsa_bar = r_mat[b].T @ dsa[b] @ r_mat[b]
                dxa_bar = r_inv[b] @ dxa[b] @ r_inv[b].T
                cross = (dxa_bar @ dsa_bar + dsa_bar @ dxa_bar) / 2.0
                d_comb.append(sigma * mu * np.eye(self.dims[b])
                              - np.diag(lam[b] ** 2) - cross)
            d_tk = sigma * mu - tau * kappa - dta * dka
            dx, dy, ds, dtau, dkappa = direction(sigma, d_comb, d_tk, True)

            alpha = STEP_FRACTION * self._max_step(x, s, tau, kappa, dx, ds,
                                                   dtau, dkappa, lam, r_mat, r_inv)
            alpha = min(alpha, 1.0)
            if not np.isfinite(alpha) or alpha <= 1e-14:
                break
            x = [_sym(x[b] + alpha * dx[b]) for b in range(self.nblk)]
            s = [_sym(s[b] + alpha * ds[b]) for b in range(self.nblk)]
            y = y + alpha * dy
            tau += alpha * dtau
            kappa += alpha * dkappa
        best.iterations = self.max_iter
        return best

    def _max_step(self, x, s, tau, kappa, dx, ds, dtau, dkappa, lam, r_mat, r_inv):
        """Largest step keeping all blocks PSD and tau, kappa positive."""
        alpha = np.inf
        for b in range(self.nblk):
            dxb = r_inv[b] @ dx[b] @ r_inv[b].T
            dsb = r_mat[b].T @ ds[b] @ r_mat[b]
            rt = np.sqrt(lam[b])
            for q in (dxb, dsb):
                t = _sym(q / rt[:, None] / rt[None, :])
                wmin = float(np.linalg.eigvalsh(t).min())
                if wmin < 0:
                    alpha = min(alpha, -1.0 / wmin)
        if dtau < 0:
            alpha = min(alpha, -tau / dtau)
        if dkappa < 0:
            alpha = min(alpha, -kappa / dkappa)
        return alpha


def _lyap_inv(lam: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Solve (diag(lam) U + U diag(lam)) / 2 = M for symmetric U."""
    return 2.0 * m / (lam[:, None] + lam[None, :])


def solve_real(prog: RealProgram, gap_tol: float = 1e-7, feas_tol: float = 1e-8,
               max_iter: int = MAX_ITER) -> RawResult:
    if not prog.dims:
        raise ValueError("program needs at least one block")
    return _Solver(prog, gap_tol, feas_tol, max_iter).solve()
