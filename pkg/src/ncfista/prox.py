"""Exact proximal and projection maps used by the benchmark problems.

All maps act on plain numpy arrays (``project_nonneg`` also accepts a
``Point`` and clips blockwise).  Spectral routines symmetrize their input
first, return eigen/singular values in descending order, and fix signs so
that decompositions are reproducible.
"""

from __future__ import annotations

import numpy as np

from .point import Point


def symmetric_eig(Z: np.ndarray):
    """Eigendecomposition of the symmetric part of Z.

    Returns (values, vectors) with values descending and each eigenvector
    signed so its largest-magnitude entry is positive.  Reconstruction
    satisfies ||sym(Z) - Q diag(w) Q^T||_F <= 1e-8 (1 + ||Z||_F).
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ValueError("symmetric_eig needs a square matrix")
    S = 0.5 * (Z + Z.T)
    w, Q = np.linalg.eigh(S)
    w, Q = w[::-1].copy(), Q[:, ::-1].copy()
    lead = np.argmax(np.abs(Q), axis=0)
    signs = np.sign(Q[lead, np.arange(Q.shape[1])])
    signs[signs == 0] = 1.0
    return w, Q * signs


def thin_svd(Z: np.ndarray):
    """Thin SVD with descending singular values and canonical signs.

    Each left singular vector is signed so its largest-magnitude entry is
    positive; the corresponding right vector is flipped with it.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise ValueError("thin_svd needs a matrix")
    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    lead = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[lead, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, s, Vt * signs[:, None]


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-and-threshold: find the largest active set whose shifted entries
    stay positive, shift, and clip.  O(n log n), exact.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("project_simplex needs a nonempty vector")
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    counts = np.arange(1, v.size + 1)
    support = counts[u - cumulative / counts > 0][-1]
    shift = cumulative[support - 1] / support
    return np.maximum(v - shift, 0.0)


def project_psd(Z: np.ndarray) -> np.ndarray:
    """Projection onto the positive semidefinite cone (symmetrizes first)."""
    w, Q = symmetric_eig(Z)
    out = (Q * np.maximum(w, 0.0)) @ Q.T
    return 0.5 * (out + out.T)


def project_spectraplex(Z: np.ndarray) -> np.ndarray:
    """Projection onto the trace-one PSD matrices.

    Reduces to a simplex projection of the eigenvalues of the symmetric
    part, then reassembles in the same eigenbasis.
    """
    w, Q = symmetric_eig(Z)
    out = (Q * project_simplex(w)) @ Q.T
    return 0.5 * (out + out.T)


def prox_nuclear_ball(
    Z: np.ndarray, coeff: float, weight: float, radius: float
) -> np.ndarray:
    """Prox of weight * nuclear norm restricted to the Frobenius ball.

    Minimizes weight ||U||_* + (coeff/2) ||U - Z||_F^2 over ||U||_F <=
    radius.  In singular-value space the optimality conditions reduce to
    soft-thresholding at weight/coeff followed by a uniform radial scaling
    onto the ball whenever the thresholded point lies outside it.
    """
    if coeff <= 0:
        raise ValueError("prox coefficient must be positive")
    if radius <= 0:
        raise ValueError("radius must be positive")
    if weight < 0:
        raise ValueError("weight must be nonnegative")
    Z = np.asarray(Z, dtype=float)
    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    t = np.maximum(s - weight / coeff, 0.0)
    norm = float(np.linalg.norm(t))
    if norm > radius:
        t *= radius / norm
    return (U * t) @ Vt


def project_nonneg(z):
    """Entrywise clip at zero; applied blockwise when given a Point."""
    if isinstance(z, Point):
        return Point(tuple(np.maximum(b, 0.0) for b in z.blocks))
    return np.maximum(np.asarray(z, dtype=float), 0.0)
