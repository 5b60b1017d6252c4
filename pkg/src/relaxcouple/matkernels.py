"""Small dense real linear algebra kernels.

Matrices are plain two-dimensional ``float64`` numpy arrays.  Zero-width
matrices (shape ``(m, 0)``) are valid everywhere and follow the usual
product rules, which keeps the empty blocks that appear for degenerate
systems out of the calling code.

The eigensolver is a cyclic Jacobi method.  It is slow compared to LAPACK
but unconditionally produces orthonormal eigenvectors, and the matrices
handled here never exceed a few dozen rows.
"""

from __future__ import annotations

import numpy as np

from .errors import NotPositiveDefiniteError, SingularSystemError, ValidationError

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
SIGN_TOL = 1e-12


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float array (copy-free when possible)."""
    a = np.asarray(M, dtype=float)
    if a.ndim == 1 and a.size == 0:
        a = a.reshape(0, 0)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be two-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def max_norm(M) -> float:
    a = np.asarray(M, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


def fix_column_signs(V: np.ndarray, tol: float = SIGN_TOL) -> np.ndarray:
    """Flip columns in place so the first entry above ``tol`` is positive."""
    for j in range(V.shape[1]):
        col = V[:, j]
        idx = np.flatnonzero(np.abs(col) > tol)
        if idx.size and col[idx[0]] < 0:
            V[:, j] = -col
    return V


def _check_square(a: np.ndarray, name: str) -> None:
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")


def _check_symmetric(a: np.ndarray, tol: float, name: str) -> None:
    asym = max_norm(a - a.T)
    if asym > tol * max(1.0, max_norm(a)):
        raise ValidationError(f"{name} not symmetric: max|M - M^T| = {asym:.3e}")


def sym_eig(M, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi.

    Returns ascending eigenvalues and a matrix whose orthonormal columns are
    the matching eigenvectors, each with its first significant entry made
    positive.  ``tol`` bounds the admissible asymmetry relative to
    ``max(1, max|M|)``.
    """
    a = as_matrix(M, "sym_eig input").copy()
    _check_square(a, "sym_eig input")
    _check_symmetric(a, tol, "sym_eig input")
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    V = np.eye(n)
    scale = np.linalg.norm(a)
    if n > 1 and scale > 0.0:
        target = JACOBI_TOL * scale
        for _ in range(JACOBI_MAX_SWEEPS):
            off = np.linalg.norm(a - np.diag(np.diag(a)))
            if off <= target:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if abs(apq) <= 1e-300:
                        continue
                    tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                    t = np.copysign(1.0, tau) / (abs(tau) + np.hypot(1.0, tau))
                    c = 1.0 / np.hypot(1.0, t)
                    s = t * c
                    ap = a[:, p].copy()
                    aq = a[:, q].copy()
                    a[:, p] = c * ap - s * aq
                    a[:, q] = s * ap + c * aq
                    ap = a[p, :].copy()
                    aq = a[q, :].copy()
                    a[p, :] = c * ap - s * aq
                    a[q, :] = s * ap + c * aq
                    a[p, q] = a[q, p] = 0.0
                    vp = V[:, p].copy()
                    vq = V[:, q].copy()
                    V[:, p] = c * vp - s * vq
                    V[:, q] = s * vp + c * vq
        else:
            raise ArithmeticError("Jacobi iteration did not converge")
    lam = np.diag(a).copy()
    order = np.argsort(lam, kind="stable")
    return lam[order], fix_column_signs(V[:, order])


def cholesky_spd(B) -> np.ndarray:
    """Lower-triangular ``L`` with ``B = L L^T``."""
    b = as_matrix(B, "cholesky input")
    _check_square(b, "cholesky input")
    _check_symmetric(b, 1e-12, "cholesky input")
    n = b.shape[0]
    L = np.zeros((n, n))
    floor = 1e-13 * max_norm(b)
    for j in range(n):
        d = b[j, j] - L[j, :j] @ L[j, :j]
        if d <= floor:
            raise NotPositiveDefiniteError(
                f"not positive definite: pivot {d:.3e} at index {j}"
            )
        L[j, j] = np.sqrt(d)
        L[j + 1 :, j] = (b[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def _forward_substitute(L: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    X = np.array(rhs, dtype=float, copy=True)
    for i in range(L.shape[0]):
        X[i] = (X[i] - L[i, :i] @ X[:i]) / L[i, i]
    return X


def pencil_eig(Msym, Bspd) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``M w = mu B w`` for symmetric ``M`` and SPD ``B``.

    Reduces to a standard symmetric problem through the Cholesky factor of
    ``B``.  The eigenvector matrix ``W`` satisfies ``W^T B W = I``.
    """
    m = as_matrix(Msym, "pencil matrix")
    _check_square(m, "pencil matrix")
    _check_symmetric(m, 1e-12, "pencil matrix")
    L = cholesky_spd(Bspd)
    if L.shape != m.shape:
        raise ValidationError(f"pencil shapes differ: {m.shape} vs {L.shape}")
    Linv = _forward_substitute(L, np.eye(L.shape[0]))
    C = Linv @ m @ Linv.T
    mu, Y = sym_eig(0.5 * (C + C.T))
    return mu, fix_column_signs(Linv.T @ Y)


def lu_solve(M, rhs) -> np.ndarray:
    """Solve ``M X = rhs`` by Gaussian elimination with partial pivoting.

    ``rhs`` may be a vector or a matrix with one column per right-hand side.
    """
    a = as_matrix(M, "system matrix").copy()
    _check_square(a, "system matrix")
    b = np.array(rhs, dtype=float, copy=True)
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    if b.shape[0] != a.shape[0]:
        raise ValidationError(
            f"rhs has {b.shape[0]} rows, system has {a.shape[0]}"
        )
    n = a.shape[0]
    floor = 1e-12 * max_norm(a)
    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[piv, k]) <= floor:
            raise SingularSystemError(f"singular system: pivot {a[piv, k]:.3e} at column {k}")
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        f = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(f, a[k, k:])
        b[k + 1 :] -= np.outer(f, b[k])
    x = np.zeros_like(b)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return x[:, 0] if vector else x


def orth_complement(K) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``range(K)``."""
    k = as_matrix(K, "K")
    m, p = k.shape
    if p == 0:
        return np.eye(m)
    if p > m:
        raise ValidationError(f"K has more columns ({p}) than rows ({m})")
    gram_eigs, _ = sym_eig(k.T @ k)
    if gram_eigs[0] <= 1e-10 * gram_eigs[-1]:
        raise ValidationError("K is rank deficient")
    proj = np.eye(m) - k @ lu_solve(k.T @ k, k.T)
    _, V = sym_eig(0.5 * (proj + proj.T))
    # eigenvalues of the projector are 0 (p times) then 1 (m - p times)
    return V[:, p:]


def lu_det(M) -> float:
    """Determinant via partially pivoted elimination."""
    a = as_matrix(M, "matrix").copy()
    _check_square(a, "matrix")
    det = 1.0
    for k in range(a.shape[0]):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if a[piv, k] == 0.0:
            return 0.0
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            det = -det
        det *= a[k, k]
        f = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(f, a[k, k:])
    return float(det)


def orthonormalize(W) -> np.ndarray:
    """Symmetric (Loewdin) orthonormalisation ``W (W^T W)^{-1/2}``."""
    w = as_matrix(W, "W")
    if w.shape[1] == 0:
        return w.copy()
    lam, V = sym_eig(w.T @ w)
    if lam[0] <= 1e-14 * lam[-1]:
        raise ValidationError("columns are linearly dependent")
    return w @ (V / np.sqrt(lam)) @ V.T


def max_principal_angle(U, W) -> float:
    """Largest principal angle (radians) between two column spaces."""
    q1, q2 = orthonormalize(U), orthonormalize(W)
    if q1.shape[1] != q2.shape[1]:
        raise ValidationError("subspaces have different dimensions")
    if q1.shape[1] == 0:
        return 0.0
    resid = q2 - q1 @ (q1.T @ q2)
    lam, _ = sym_eig(0.5 * (resid.T @ resid + (resid.T @ resid).T))
    return float(np.arcsin(min(1.0, np.sqrt(max(lam[-1], 0.0)))))
