"""Normalized-weight system assembly, known/unknown partition and CG solve.

The combined operator is ``lam * W + (1 - lam) * L_lap``. ``W`` is the
Laplacian of a graph whose only edges connect each pixel to two terminal
nodes pinned at alpha = 1 and alpha = 0. The terminals are eliminated in
closed form: pixel i picks up ``lam * (w_f[i] + w_b[i])`` on the diagonal and
``lam * w_f[i]`` on the right-hand side. That is the same solution as
keeping the terminals as extra known nodes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .errors import BadLambda, DimensionMismatch, LengthMismatch, NoUnknownPixels, NotConverged
from .imageio import Label


@dataclass(frozen=True)
class CGParams:
    tol: float = 1e-7
    max_iter: int = 2000

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("cg tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("cg max_iter must be >= 1")


@dataclass
class CombinedSystem:
    L: scipy.sparse.csr_matrix
    terminal_rhs: np.ndarray
    lam: float


@dataclass
class PartitionedSystem:
    L_u: scipy.sparse.csr_matrix
    R: scipy.sparse.csr_matrix  # unknown x known
    q_k: np.ndarray
    rhs: np.ndarray
    unknown: np.ndarray  # unknown-order position -> flat pixel index
    known: np.ndarray


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float


def check_lambda(lam):
    if not (0.0 <= lam <= 1.0):
        raise BadLambda(f"lambda must lie in [0, 1], got {lam}")


def assemble(lam, w_f, w_b, L_lap):
    check_lambda(lam)
    w_f = np.asarray(w_f, dtype=np.float64)
    w_b = np.asarray(w_b, dtype=np.float64)
    n = L_lap.shape[0]
    if w_f.shape != (n,) or w_b.shape != (n,):
        raise DimensionMismatch(f"terminal weights must have length {n}")
    L = (1.0 - lam) * scipy.sparse.csr_matrix(L_lap) + scipy.sparse.diags(lam * (w_f + w_b), format="csr")
    L = L.tocsr()
    L.sort_indices()
    return CombinedSystem(L, lam * w_f, lam)


def partition(system, trimap):
    labels = np.asarray(trimap).ravel()
    if labels.size != system.L.shape[0]:
        raise DimensionMismatch("trimap size does not match system dimension")
    unknown = np.flatnonzero(labels == Label.UNKNOWN)
    if unknown.size == 0:
        raise NoUnknownPixels("trimap has no unknown pixels")
    known = np.flatnonzero(labels != Label.UNKNOWN)
    q_k = (labels[known] == Label.FOREGROUND).astype(np.float64)

    rows = system.L[unknown]
    L_u = rows[:, unknown].tocsr()
    R = rows[:, known].tocsr()
    L_u.sort_indices()
    R.sort_indices()
    rhs = system.terminal_rhs[unknown] - R @ q_k
    return PartitionedSystem(L_u, R, q_k, rhs, unknown, known)


def conjugate_gradient(A, b, tol=1e-7, max_iter=2000, precondition=True):
    """Jacobi-preconditioned CG on a symmetric positive definite ``A``.

    Stops once ``||A x - b|| <= tol * ||b||``. Raises ``NotConverged`` with
    the last iterate attached if ``max_iter`` is reached first.
    """
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros_like(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CGResult(x, 0, 0.0)
    if precondition:
        diag = A.diagonal() if scipy.sparse.issparse(A) else np.diag(A).copy()
        inv_diag = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)
    else:
        inv_diag = np.ones_like(b)

    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    rel = 1.0
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise NotConverged(float(np.linalg.norm(b - A @ x) / bnorm), it, x)
        step = rz / pAp
        x += step * p
        r -= step * Ap
        rel = np.linalg.norm(r) / bnorm
        if rel <= tol:
            # recursive residual drifts; confirm against the true one
            rel = float(np.linalg.norm(b - A @ x) / bnorm)
            if rel <= tol:
                return CGResult(x, it, rel)
            r = b - A @ x
            z = inv_diag * r
            p = z.copy()
            rz = r @ z
            continue
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NotConverged(float(rel), max_iter, x)


def solve_cg(part, tol=1e-7, max_iter=2000):
    return conjugate_gradient(part.L_u, part.rhs, tol=tol, max_iter=max_iter)


def compose_matte(q_u, trimap, unknown=None):
    trimap = np.asarray(trimap)
    labels = trimap.ravel()
    if unknown is None:
        unknown = np.flatnonzero(labels == Label.UNKNOWN)
    q_u = np.asarray(q_u, dtype=np.float64)
    if q_u.shape != unknown.shape:
        raise LengthMismatch(f"expected {unknown.size} unknown alphas, got {q_u.size}")
    alpha = (labels == Label.FOREGROUND).astype(np.float64)
    alpha[unknown] = np.clip(q_u, 0.0, 1.0)
    return alpha.reshape(trimap.shape)
