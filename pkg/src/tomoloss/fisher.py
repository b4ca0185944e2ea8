"""Per-trial Fisher information, Cramer-Rao bounds and the sample-size
threshold beyond which boundary effects decay.

The threshold ``n_star`` compares the variance of the linear estimator
along the radial direction with the squared distance from the true state
to the boundary plane; once the trial count clears it, the boundary
corrections to the expected losses shrink exponentially and the
asymptotic (Cramer-Rao) picture applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bloch import NORM_SLACK, Povm, as_bloch_array, probabilities, xyz_povm
from .exceptions import (
    DivergentInformationError,
    DomainError,
    SingularMatrixError,
    UndefinedDirectionError,
)
from .losses import LossHessian, hesse_hs, hesse_if

#: Probability floor below which the information matrix is declared divergent.
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class FisherMatrix:
    """3x3 symmetric PSD information matrix with a cached inverse.

    The inverse is computed lazily on first access and is only defined
    when the matrix is numerically invertible (informationally complete
    POVM with all outcome probabilities positive).
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise DomainError(f"expected a 3x3 matrix, got shape {m.shape}")
        if float(np.max(np.abs(m - m.T))) > 1e-10 * max(1.0, float(np.max(np.abs(m)))):
            raise DomainError("information matrix must be symmetric")
        m = 0.5 * (m + m.T)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_inverse_cache", None)

    @property
    def inverse(self) -> np.ndarray:
        inv = object.__getattribute__(self, "_inverse_cache")
        if inv is None:
            try:
                inv = np.linalg.inv(self.matrix)
            except np.linalg.LinAlgError as exc:
                raise SingularMatrixError("information matrix is singular") from exc
            if not np.all(np.isfinite(inv)):
                raise SingularMatrixError("information matrix is singular")
            inv.flags.writeable = False
            object.__setattr__(self, "_inverse_cache", inv)
        return inv

    def is_invertible(self) -> bool:
        try:
            self.inverse
        except SingularMatrixError:
            return False
        return True


def fisher_matrix(povm: Povm, s) -> FisherMatrix:
    """Per-trial information matrix sum_x w_x w_x^T / p(x|s).

    Raises :class:`DivergentInformationError` naming the first outcome
    whose probability falls at or below the floor.
    """
    p = probabilities(povm, s)
    for label, prob in zip(povm.labels, p):
        if prob <= PROB_FLOOR:
            raise DivergentInformationError(
                f"outcome {label!r} has probability {prob:.3g} <= {PROB_FLOOR:g}; "
                "the information matrix diverges"
            )
    w = povm.w_matrix()
    return FisherMatrix((w.T / p) @ w)


def cramer_rao_bound(h: LossHessian, f: FisherMatrix, n: float) -> float:
    """Asymptotic lower bound tr[H F^-1] / N on the expected quadratic loss."""
    if n < 1:
        raise DomainError(f"trial count must be >= 1, got {n}")
    return float(np.trace(h.h @ f.inverse)) / n


def n_star(povm: Povm, s) -> float:
    """Trial-count threshold 2 (e.F^-1 e) / (1 - |s|)^2 for boundary effects.

    ``e`` is the radial unit vector of the true state.  Returns +inf for
    pure states (provided the information matrix stays finite there) and
    raises for s = 0, where no radial direction exists.
    """
    arr = as_bloch_array(s)
    r = float(np.linalg.norm(arr))
    if r == 0.0:
        raise UndefinedDirectionError("the threshold needs a radial direction; s = 0 has none")
    if r > 1.0 + NORM_SLACK:
        raise DomainError(f"|s| = {r:.17g} exceeds 1")
    f = fisher_matrix(povm, arr)
    e = arr / r
    radial_var = float(e @ f.inverse @ e)
    if r >= 1.0 - NORM_SLACK:
        return math.inf
    return 2.0 * radial_var / (1.0 - r) ** 2


def _xyz_interior(s) -> tuple[np.ndarray, float]:
    arr = as_bloch_array(s)
    r = float(np.linalg.norm(arr))
    if r > 1.0 + NORM_SLACK:
        raise DomainError(f"|s| = {r:.17g} exceeds 1")
    return arr, r


def fisher_matrix_xyz(s) -> FisherMatrix:
    """Closed form of the information matrix for the axis POVM:
    diag(1/(1-s1^2), 1/(1-s2^2), 1/(1-s3^2)) / 3."""
    arr, r = _xyz_interior(s)
    denom = 1.0 - arr ** 2
    if np.any(denom <= 3.0 * PROB_FLOOR):
        axis = int(np.argmax(arr ** 2))
        raise DivergentInformationError(
            f"axis {axis + 1} component of |s| reaches 1; the information matrix diverges"
        )
    return FisherMatrix(np.diag(1.0 / (3.0 * denom)))


def n_star_xyz(s) -> float:
    """Axis-POVM closed form of :func:`n_star`:

        6 * ( (1+r)/(1-r) + 2 ((s1 s2)^2 + (s2 s3)^2 + (s3 s1)^2) / (r^2 (1-r)^2) ).

    Diverges like (1-r)^-1 when s is aligned with a measurement axis and
    like (1-r)^-2 otherwise.
    """
    arr, r = _xyz_interior(s)
    if r == 0.0:
        raise UndefinedDirectionError("the threshold needs a radial direction; s = 0 has none")
    if r >= 1.0 - NORM_SLACK:
        return math.inf
    cross = (arr[0] * arr[1]) ** 2 + (arr[1] * arr[2]) ** 2 + (arr[2] * arr[0]) ** 2
    return 6.0 * ((1.0 + r) / (1.0 - r) + 2.0 * cross / (r ** 2 * (1.0 - r) ** 2))


def crb_hs_xyz(s, n: float) -> float:
    """Axis-POVM Cramer-Rao bound for the squared Hilbert-Schmidt loss:
    (3/4) (3 - |s|^2) / N."""
    arr, r = _xyz_interior(s)
    if n < 1:
        raise DomainError(f"trial count must be >= 1, got {n}")
    if r >= 1.0:
        # formula extends continuously to r = 1 (used for contrast lines)
        r = min(r, 1.0)
    return 0.75 * (3.0 - r ** 2) / n


def crb_if_xyz(s, n: float) -> float:
    """Axis-POVM Cramer-Rao bound for the (second-order) infidelity:
    (3/4) (3 + 2 ((s1 s2)^2 + (s2 s3)^2 + (s3 s1)^2) / (1 - |s|^2)) / N."""
    arr, r = _xyz_interior(s)
    if n < 1:
        raise DomainError(f"trial count must be >= 1, got {n}")
    if r >= 1.0:
        raise DomainError("the infidelity bound is undefined for pure states")
    cross = (arr[0] * arr[1]) ** 2 + (arr[1] * arr[2]) ** 2 + (arr[2] * arr[0]) ** 2
    return 0.75 * (3.0 + 2.0 * cross / (1.0 - r ** 2)) / n


def crb_hs(povm: Povm, s, n: float) -> float:
    """Cramer-Rao bound for the squared Hilbert-Schmidt loss, generic POVM."""
    return cramer_rao_bound(hesse_hs(), fisher_matrix(povm, s), n)


def crb_if(povm: Povm, s, n: float) -> float:
    """Cramer-Rao bound for the second-order infidelity, generic POVM."""
    return cramer_rao_bound(hesse_if(s), fisher_matrix(povm, s), n)


__all__ = [
    "FisherMatrix",
    "PROB_FLOOR",
    "cramer_rao_bound",
    "crb_hs",
    "crb_hs_xyz",
    "crb_if",
    "crb_if_xyz",
    "fisher_matrix",
    "fisher_matrix_xyz",
    "n_star",
    "n_star_xyz",
]
