"""Dense complex Hermitian linear algebra and Choi-map machinery.

Everything downstream (devices, cone programs, dilations) works with plain
complex ndarrays that have been symmetrized once at a trust boundary via
:func:`as_hermitian`.  Tolerances are relative to the matrix scale; the
kernel cutoff for pseudo-inverses is shared across the package.
"""

from __future__ import annotations

import numpy as np

HERMITICITY_TOL = 1e-10
KERNEL_CUTOFF = 1e-9


class HermitianError(ValueError):
    """Input violates a Hermiticity / positivity / shape requirement."""


def as_hermitian(mat, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Check near-Hermiticity and return the exactly symmetrized copy."""
    a = np.asarray(mat, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise HermitianError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    asym = float(np.abs(a - a.conj().T).max())
    if asym > tol * scale:
        raise HermitianError(f"matrix is not Hermitian: asymmetry {asym:.3e}")
    return (a + a.conj().T) / 2.0


def eigh(h: np.ndarray):
    """Eigendecomposition of a Hermitian matrix: ascending values, unitary V."""
    return np.linalg.eigh(as_hermitian(h))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def _check_bipartite(h: np.ndarray, dims) -> tuple[int, int]:
    d1, d2 = int(dims[0]), int(dims[1])
    if h.shape != (d1 * d2, d1 * d2):
        raise HermitianError(f"dims {dims} do not match matrix of shape {h.shape}")
    return d1, d2


def partial_trace(h: np.ndarray, dims, over: str = "second") -> np.ndarray:
    """Trace out one tensor factor of an operator on H1 (x) H2."""
    h = np.asarray(h, dtype=complex)
    d1, d2 = _check_bipartite(h, dims)
    t = h.reshape(d1, d2, d1, d2)
    if over == "second":
        return np.einsum("ijkj->ik", t)
    if over == "first":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"over must be 'first' or 'second', got {over!r}")


def partial_transpose(h: np.ndarray, dims, on: str = "second") -> np.ndarray:
    """Transpose one tensor factor in the computational basis."""
    h = np.asarray(h, dtype=complex)
    d1, d2 = _check_bipartite(h, dims)
    t = h.reshape(d1, d2, d1, d2)
    if on == "second":
        return t.transpose(0, 3, 2, 1).reshape(d1 * d2, d1 * d2)
    if on == "first":
        return t.transpose(2, 1, 0, 3).reshape(d1 * d2, d1 * d2)
    raise ValueError(f"on must be 'first' or 'second', got {on!r}")


def choi_from_kraus(kraus) -> np.ndarray:
    """Choi matrix (id (x) map)|psi+><psi+| of a map given by Kraus operators.

    Kraus operators map a dH-dimensional input to a dK-dimensional output;
    the result lives on H (x) K with trace 1 iff the map is trace preserving.
    """
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    if not ks:
        raise HermitianError("need at least one Kraus operator")
    dk, dh = ks[0].shape
    for k in ks:
        if k.shape != (dk, dh):
            raise HermitianError("Kraus operators have inconsistent shapes")
    total = sum(k.conj().T @ k for k in ks)
    if float(np.linalg.eigvalsh(total).max()) > 1.0 + 1e-8:
        raise HermitianError("Kraus operators exceed trace-non-increasing bound")
    j = np.zeros((dh * dk, dh * dk), dtype=complex)
    for k in ks:
        v = k.T.reshape(-1)  # (1 (x) K) sum_j |j>|j>, entries v[(j,m)] = K[m,j]
        j += np.outer(v, v.conj())
    return as_hermitian(j / dh)


def choi_invert(j: np.ndarray, dims, rho: np.ndarray) -> np.ndarray:
    """Apply the map encoded by the Choi matrix j to the input state rho."""
    dh, dk = int(dims[0]), int(dims[1])
    j = np.asarray(j, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dh, dh):
        raise HermitianError(f"input state shape {rho.shape} does not match dH={dh}")
    _check_bipartite(j, dims)
    lifted = kron(rho.T, np.eye(dk)) @ j
    return dh * partial_trace(lifted, (dh, dk), over="first")


def operator_norm(h: np.ndarray) -> float:
    """Largest absolute eigenvalue of a Hermitian matrix."""
    w = np.linalg.eigvalsh(as_hermitian(h))
    return float(np.abs(w).max())


def _psd_eig(h: np.ndarray, tol: float = 1e-9):
    w, v = np.linalg.eigh(as_hermitian(h))
    scale = max(float(np.abs(w).max()), 1e-30)
    if w.min() < -tol * max(1.0, scale):
        raise HermitianError(f"matrix is not PSD: min eigenvalue {w.min():.3e}")
    return np.clip(w, 0.0, None), v, scale


def pseudo_sqrt(h: np.ndarray) -> np.ndarray:
    """PSD square root, zero on the numerical kernel."""
    w, v, scale = _psd_eig(h)
    w = np.where(w > KERNEL_CUTOFF * scale, w, 0.0)
    return as_hermitian((v * np.sqrt(w)) @ v.conj().T)


def pseudo_inv_sqrt(h: np.ndarray) -> np.ndarray:
    """Inverse square root on the support, zero on the numerical kernel."""
    w, v, scale = _psd_eig(h)
    inv = np.where(w > KERNEL_CUTOFF * scale, w, np.inf)
    return as_hermitian((v / np.sqrt(inv)) @ v.conj().T)


def pseudo_inv(h: np.ndarray) -> np.ndarray:
    """Moore-Penrose inverse of a PSD matrix with the shared kernel cutoff."""
    w, v, scale = _psd_eig(h)
    inv = np.where(w > KERNEL_CUTOFF * scale, w, np.inf)
    return as_hermitian((v / inv) @ v.conj().T)


def support_projector(h: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the range of a PSD matrix."""
    w, v, scale = _psd_eig(h)
    keep = w > KERNEL_CUTOFF * scale
    vs = v[:, keep]
    return as_hermitian(vs @ vs.conj().T)


def hs_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Hilbert-Schmidt inner product <a, b>, real for Hermitian arguments."""
    return float(np.real(np.einsum("ij,ij->", np.asarray(a).conj(), np.asarray(b))))


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Orthogonal (unnormalized) basis of n x n Hermitian matrices.

    Ordered as: diagonal units, then for each j < k the real and imaginary
    off-diagonal units.  <F, X> recovers Re/Im of the matrix entries.
    """
    out = []
    for j in range(n):
        f = np.zeros((n, n), dtype=complex)
        f[j, j] = 1.0
        out.append(f)
    for j in range(n):
        for k in range(j + 1, n):
            f = np.zeros((n, n), dtype=complex)
            f[j, k] = 0.5
            f[k, j] = 0.5
            out.append(f)
            g = np.zeros((n, n), dtype=complex)
            g[j, k] = 0.5j
            g[k, j] = -0.5j
            out.append(g)
    return out


def embed_complex(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re h, -Im h], [Im h, Re h]] of a Hermitian h.

    The spectrum of the output is that of h with doubled multiplicity and
    <embed(a), embed(b)> = 2 <a, b>; the factor 2 is tracked by the solver.
    """
    h = np.asarray(h, dtype=complex)
    re, im = h.real, h.imag
    top = np.hstack([re, -im])
    bot = np.hstack([im, re])
    out = np.vstack([top, bot])
    return (out + out.T) / 2.0


def unembed_complex(m: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_complex`, averaging the two embedded copies."""
    n = m.shape[0] // 2
    tl, tr = m[:n, :n], m[:n, n:]
    bl, br = m[n:, :n], m[n:, n:]
    re = (tl + br) / 2.0
    im = (bl - tr) / 2.0
    h = re + 1j * im
    return (h + h.conj().T) / 2.0
