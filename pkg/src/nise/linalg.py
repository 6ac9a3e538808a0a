"""Dense real linear algebra used by the estimators.

Cholesky factorization and the cyclic Jacobi eigensolver are implemented
here directly.  Least squares goes through a column-pivoted Householder QR
(LAPACK ``geqp3`` via :func:`scipy.linalg.qr`), which also gives the rank
decision used throughout the package.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from nise.errors import NoConvergence, NotPositiveDefinite, RankDeficient

#: relative pivot tolerance for rank decisions (pivot < RANK_TOL * largest pivot)
RANK_TOL = 1e-12
#: sweep cap for the Jacobi eigensolver
MAX_SWEEPS = 100
_SYM_RTOL = 1e-10


class EigenSolution(NamedTuple):
    """Eigenvalues in ascending order; column ``j`` of ``eigenvectors`` pairs with ``eigenvalues[j]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.array(a, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _check_symmetric(a: np.ndarray, name: str) -> None:
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    if np.max(np.abs(a - a.T), initial=0.0) > _SYM_RTOL * scale:
        raise ValueError(f"{name} is not symmetric")


def cholesky(a) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == a``.

    Raises
    ------
    NotPositiveDefinite
        If a pivot falls at or below ``RANK_TOL`` times the largest diagonal entry.
    """
    a = as_matrix(a, "A")
    _check_symmetric(a, "A")
    n = a.shape[0]
    tol = RANK_TOL * float(np.max(np.abs(np.diag(a)), initial=0.0))
    L = np.zeros_like(a)
    for j in range(n):
        row = L[j, :j]
        d = a[j, j] - row @ row
        if not d > tol:
            raise NotPositiveDefinite(f"pivot {j} is {d:.3g} (tolerance {tol:.3g})")
        ljj = np.sqrt(d)
        L[j, j] = ljj
        L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ row) / ljj
    return L


def _pivoted_qr(x: np.ndarray):
    n, k = x.shape
    if n < k:
        raise RankDeficient(f"{n} rows cannot support {k} columns")
    q, r, perm = sla.qr(x, mode="economic", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(r))
    if k and not np.all(diag > RANK_TOL * diag[0]):
        rank = int(np.sum(diag > RANK_TOL * diag[0]))
        raise RankDeficient(f"design has rank {rank} < {k} columns")
    return q, r, perm


def least_squares(x, y) -> np.ndarray:
    """Minimize ``||y - x b||`` by column-pivoted QR.

    ``y`` may be a vector or a matrix of right-hand sides; the result has
    matching trailing shape.
    """
    x = as_matrix(x, "X")
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != x.shape[0]:
        raise ValueError(f"row mismatch: X has {x.shape[0]}, y has {y.shape[0]}")
    q, r, perm = _pivoted_qr(x)
    coef_p = sla.solve_triangular(r, q.T @ y, check_finite=False)
    coef = np.empty_like(coef_p)
    coef[perm] = coef_p
    return coef


def gram_inverse(x) -> np.ndarray:
    """``(x.T x)^{-1}`` from the pivoted QR factor, without forming ``x.T x``."""
    x = as_matrix(x, "X")
    _, r, perm = _pivoted_qr(x)
    rinv = sla.solve_triangular(r, np.eye(r.shape[0]), check_finite=False)
    inv_p = rinv @ rinv.T
    out = np.empty_like(inv_p)
    out[np.ix_(perm, perm)] = inv_p
    return out


def residual_maker(x, y) -> np.ndarray:
    """Return ``M y`` with ``M = I - x (x'x)^{-1} x'``; ``M`` is never formed."""
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2 and x.shape[1] == 0:
        return y.copy()
    return y - as_matrix(x, "X") @ least_squares(x, y)


def sym_eig(a) -> EigenSolution:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations."""
    a = as_matrix(a, "A")
    _check_symmetric(a, "A")
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    if n == 1 or scale == 0.0:
        return _sorted(np.diag(a).copy(), v)

    tol = n * np.finfo(np.float64).eps * scale
    for _ in range(MAX_SWEEPS):
        off = np.sqrt(max(0.0, float(np.sum(a * a) - np.sum(np.diag(a) ** 2))))
        if off <= tol:
            return _sorted(np.diag(a).copy(), v)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise NoConvergence(f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps")


def _sorted(w: np.ndarray, v: np.ndarray) -> EigenSolution:
    order = np.argsort(w, kind="stable")
    return EigenSolution(w[order], v[:, order])


def gen_sym_eig(a, b) -> EigenSolution:
    """Solve ``a v = lambda b v`` for symmetric ``a`` and positive definite ``b``.

    Reduces to a standard symmetric problem through ``b = L L'``; the returned
    eigenvectors are ``b``-orthonormal.
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape != b.shape:
        raise ValueError(f"A {a.shape} and B {b.shape} differ in shape")
    _check_symmetric(a, "A")
    L = cholesky(b)
    tmp = sla.solve_triangular(L, a, lower=True, check_finite=False)
    c = sla.solve_triangular(L, tmp.T, lower=True, check_finite=False)
    w, z = sym_eig(0.5 * (c + c.T))
    vecs = sla.solve_triangular(L.T, z, lower=False, check_finite=False)
    return EigenSolution(w, vecs)
