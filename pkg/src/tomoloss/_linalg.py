"""Small dense (3x3) linear-algebra helpers."""

from __future__ import annotations

import numpy as np

#: Relative eigenvalue cutoff below which a mode is treated as exactly zero.
PINV_RELATIVE_CUTOFF = 1e-12


def spectral_pinv(matrix: np.ndarray, rel_cutoff: float = PINV_RELATIVE_CUTOFF) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric matrix via eigendecomposition.

    Eigenvalues below ``rel_cutoff`` times the largest absolute eigenvalue
    are treated as exact zeros, so rank-deficient-by-construction matrices
    (e.g. a projected information matrix) do not leak inverted noise.
    """
    a = np.asarray(matrix, dtype=float)
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    scale = np.max(np.abs(w)) if w.size else 0.0
    if scale == 0.0:
        return np.zeros_like(a)
    keep = np.abs(w) > rel_cutoff * scale
    inv_w = np.zeros_like(w)
    inv_w[keep] = 1.0 / w[keep]
    return (v * inv_w) @ v.T


def pinv_solve_psd(matrix: np.ndarray, rhs: np.ndarray,
                   rel_cutoff: float = PINV_RELATIVE_CUTOFF) -> np.ndarray:
    """Least-squares solve ``matrix @ x = rhs`` for a symmetric PSD matrix.

    Components of ``rhs`` in the (numerical) null space are dropped, which
    keeps unconstrained coordinates at zero.
    """
    a = np.asarray(matrix, dtype=float)
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    scale = np.max(np.abs(w)) if w.size else 0.0
    if scale == 0.0:
        return np.zeros_like(np.asarray(rhs, dtype=float))
    keep = np.abs(w) > rel_cutoff * scale
    coeff = v.T @ np.asarray(rhs, dtype=float)
    coeff = np.where(keep, coeff / np.where(keep, w, 1.0), 0.0)
    return v @ coeff
