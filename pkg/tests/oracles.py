"""Independent brute-force oracles used by the test suite.

These deliberately avoid the code paths they are meant to check: the
likelihood search is a zooming grid scan, and the special-function
reference is adaptive quadrature of the defining integral.
"""

import numpy as np
from scipy import integrate

from tomoloss.bloch import Povm
from tomoloss.estimators import OutcomeCounts


def erfc_quadrature(a: float) -> float:
    """(2/sqrt(pi)) * integral_a^inf exp(-t^2) dt by adaptive quadrature."""
    val, err = integrate.quad(lambda t: np.exp(-t * t), a, np.inf,
                              epsabs=1e-13, epsrel=1e-13, limit=200)
    return 2.0 / np.sqrt(np.pi) * val


def grid_search_mle(povm: Povm, counts: OutcomeCounts, *, levels: int = 9,
                    points: int = 21, shrink: float = 2.5) -> np.ndarray:
    """Grid-search maximizer of the log-likelihood over the closed unit ball.

    Starts from a coarse grid on [-1, 1]^3 and zooms around the best
    point.  Grid points outside the ball are pulled radially onto the
    sphere so boundary maxima are covered at full grid density.  Near-ties
    (within 1e-9 log-likelihood) are broken toward the smallest norm,
    matching the maximum-entropy convention for flat directions.
    """
    c = counts.as_array()
    v = povm.v_vector()
    w = povm.w_matrix()
    active = c > 0

    def loglik_at(pts):
        probs = v + pts @ w.T
        ok = (probs[:, active] > 0).all(axis=1)
        return np.where(
            ok,
            (np.log(np.maximum(probs[:, active], 1e-300)) * c[active]).sum(axis=1),
            -np.inf,
        )

    center = np.zeros(3)
    half = 1.0
    for _ in range(levels):
        axes = [np.linspace(center[i] - half, center[i] + half, points) for i in range(3)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        norms = np.linalg.norm(grid, axis=1)
        outside = norms > 1.0
        grid[outside] = grid[outside] / norms[outside, None]
        loglik = loglik_at(grid)
        best = int(np.argmax(loglik))
        near = loglik >= loglik[best] - 1e-9
        candidates = grid[near]
        center = candidates[int(np.argmin(np.linalg.norm(candidates, axis=1)))]
        half = half / shrink

    # the likelihood is constant along directions orthogonal to every
    # observed effect direction, so the smallest-norm maximizer has no
    # component there; dropping it never changes the likelihood
    u, sv, _ = np.linalg.svd(w[active], full_matrices=False)
    basis = (w[active].T @ u[:, sv > 1e-12 * sv.max()]) if sv.size else w[active].T
    if basis.size:
        q, _ = np.linalg.qr(basis)
        projected = q @ (q.T @ center)
        if abs(loglik_at(projected[None, :])[0] - loglik_at(center[None, :])[0]) <= 1e-9:
            center = projected
    return center
