"""Discrete dynamic Laplacian and its smallest-magnitude eigenpairs."""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .errors import EigenSolveError

log = logging.getLogger(__name__)

DENSE_LIMIT = 1200


@dataclass(frozen=True)
class DynamicLaplacian:
    matrix: np.ndarray
    formulation: str = "fixed-domain"
    times: tuple = ()


@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)

    def vector(self, k):
        """Eigenvector ``f_k`` with 1-based ``k`` as in ``f_1, f_2, ...``."""
        return self.eigenvectors[:, k - 1]


def dynamic_laplacian(D, P_list=(), times=(), adjoints=None, formulation="fixed-domain"):
    """``(D + sum_i P_i^T D P_i) / n`` with ``n = len(P_list) + 1``.

    ``adjoints`` optionally replaces each ``P_i^T`` by a separately collocated
    dual (not self-adjoint in general).
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("D must be square")
    M = D.copy()
    for i, P in enumerate(P_list):
        P = np.asarray(P, dtype=float)
        if P.shape != D.shape:
            raise ValueError(f"transfer matrix {i} has shape {P.shape}, expected {D.shape}")
        left = P.T if adjoints is None else np.asarray(adjoints[i], dtype=float)
        if left.shape != D.shape:
            raise ValueError(f"adjoint matrix {i} has shape {left.shape}, expected {D.shape}")
        M += left @ (D @ P)
    M /= len(P_list) + 1
    return DynamicLaplacian(M, formulation, tuple(times))


def symmetrize(D):
    D = np.asarray(D, dtype=float)
    return 0.5 * (D + D.T)


def _order(w, V, rel=1e-9):
    """Ascending |lambda|; near-ties by real part descending, then eigenvector."""
    mag = np.abs(w)
    first = np.argsort(mag, kind="stable")
    groups, cur = [], [first[0]]
    for i in first[1:]:
        if mag[i] - mag[cur[0]] <= rel * max(1.0, mag[cur[0]]):
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i]
    groups.append(cur)
    out = []
    for g in groups:
        out.extend(sorted(g, key=lambda i: (-w[i].real, -w[i].imag,
                                            tuple(_normalize(V[:, i])[:8]))))
    return out


def _normalize(v, tie=1e-6):
    """Phase-align the largest entry to the positive real axis, take the real part,
    scale to unit max-norm with the first (near-)maximal entry positive.

    Symmetric eigenfunctions often have entries of equal magnitude and
    opposite sign; treating magnitudes within ``tie`` as equal makes the sign
    independent of rounding in the eigensolver.
    """
    i = int(np.argmax(np.abs(v)))
    v = v * (np.abs(v[i]) / v[i])
    f = np.real(v)
    m = np.max(np.abs(f))
    j = int(np.flatnonzero(np.abs(f) >= (1.0 - tie) * m)[0])
    return f * (np.sign(f[j]) / m)


def smallest_magnitude_eigs(matrix, k=4, tol=1e-8, method="auto", sigma=0.0):
    """``k`` eigenpairs of smallest magnitude of a dense nonsymmetric matrix.

    ``method`` is ``"dense"`` (full LAPACK eigensolve, then selection),
    ``"arnoldi"`` (ARPACK shift-invert about ``sigma``) or ``"auto"``.
    Every returned pair satisfies ``|M f - lambda f| / |f| <= tol``.
    """
    M = matrix.matrix if isinstance(matrix, DynamicLaplacian) else np.asarray(matrix, dtype=float)
    n = M.shape[0]
    if k < 1 or k >= n - 1:
        raise ValueError(f"need 1 <= k < n - 1, got k={k}, n={n}")
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "arnoldi"
    if method == "arnoldi":
        try:
            w, V = spla.eigs(M, k=min(k + 2, n - 2), sigma=sigma, which="LM",
                             v0=np.ones(n), tol=0.0, maxiter=20 * n)
        except (spla.ArpackNoConvergence, RuntimeError) as exc:
            log.warning("Arnoldi failed (%s); falling back to dense eigensolve", exc)
            method = "dense"
    if method == "dense":
        w, V = sla.eig(M)
    elif method != "arnoldi":
        raise ValueError(f"unknown eigensolver method {method!r}")
    idx = _order(w, V)[:k]
    w = w[idx]
    F = np.column_stack([_normalize(V[:, i]) for i in idx])
    # residuals of the complex pairs; the real parts differ from them only by Im(lambda)
    Vc = V[:, idx]
    res = np.linalg.norm(M @ Vc - Vc * w, axis=0) / np.linalg.norm(Vc, axis=0)
    log.info("eigenvalues %s residuals %s", np.array2string(w, precision=5), res)
    if np.any(res > tol):
        raise EigenSolveError(f"eigen residuals {res} exceed tol {tol}", res)
    return SpectralResult(w, F, res)


def rayleigh_quotient(matrix, f, weights=None):
    """``-<f, M f>_w / <f, f>_w`` with node weights ``w`` (uniform by default)."""
    M = matrix.matrix if isinstance(matrix, DynamicLaplacian) else np.asarray(matrix, dtype=float)
    f = np.asarray(f, dtype=float)
    w = np.ones_like(f) if weights is None else np.asarray(weights, dtype=float)
    den = np.sum(w * f * f)
    if den == 0:
        raise ValueError("Rayleigh quotient of the zero vector")
    return float(-np.sum(w * f * (M @ f)) / den)


def rayleigh_check(D, P, f, weights=None):
    """Rayleigh quotient of ``(D + P^T D P) / 2`` at ``f``."""
    return rayleigh_quotient(dynamic_laplacian(D, [P]).matrix, f, weights)
