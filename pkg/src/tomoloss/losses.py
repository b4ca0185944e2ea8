"""Loss functions between Bloch vectors and their local quadratic forms.

Two losses are supported: the squared Hilbert-Schmidt distance, which is
exactly quadratic in the Bloch picture, and the infidelity, which is
quadratic only to second order around the true state.  For one-qubit
systems the Hilbert-Schmidt distance coincides with the trace distance;
no separate trace-distance function is provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bloch import NORM_SLACK, as_bloch_array
from .exceptions import SingularityError, UnphysicalStateError


@dataclass(frozen=True)
class LossHessian:
    """Symmetric PSD 3x3 matrix defining a local quadratic loss."""

    h: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.h, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        if float(np.max(np.abs(m - m.T))) > 1e-12:
            raise ValueError("loss Hessian must be symmetric")
        if float(np.min(np.linalg.eigvalsh(0.5 * (m + m.T)))) < -1e-12:
            raise ValueError("loss Hessian must be positive semidefinite")
        m = 0.5 * (m + m.T)
        m.flags.writeable = False
        object.__setattr__(self, "h", m)

    def quadratic_form(self, delta) -> float:
        d = np.asarray(delta, dtype=float)
        return float(d @ self.h @ d)


def hs_distance(s, t) -> float:
    """Squared Hilbert-Schmidt distance |s - t|^2 / 4.

    Defined on all of R^3, so raw linear estimates that fall outside the
    physical ball can still be scored.
    """
    ds = as_bloch_array(s) - as_bloch_array(t)
    return 0.25 * float(ds @ ds)


def infidelity(s, t) -> float:
    """Infidelity (one minus fidelity) between two physical states.

    Equals (1 - s.t - sqrt(1-|s|^2) sqrt(1-|t|^2)) / 2; both arguments
    must lie in the closed unit ball (up to the standard slack).
    """
    a = _checked(s)
    b = _checked(t)
    ra = max(0.0, 1.0 - float(a @ a))
    rb = max(0.0, 1.0 - float(b @ b))
    val = 0.5 * (1.0 - float(a @ b) - math.sqrt(ra) * math.sqrt(rb))
    # round-off can push the value a hair outside [0, 1]
    return min(1.0, max(0.0, val))


def _checked(s) -> np.ndarray:
    arr = as_bloch_array(s)
    if float(np.linalg.norm(arr)) > 1.0 + NORM_SLACK:
        raise UnphysicalStateError(
            f"infidelity is undefined outside the unit ball (|s| = {np.linalg.norm(arr):.17g})"
        )
    return arr


def hesse_hs() -> LossHessian:
    """Half the Hessian of the squared Hilbert-Schmidt distance: I/4."""
    return LossHessian(0.25 * np.eye(3))


def hesse_if(s) -> LossHessian:
    """Half the Hessian of the infidelity at an interior state.

    Returns (I + s s^T / (1 - |s|^2)) / 4.  The curvature diverges as
    |s| -> 1, so pure states are rejected.
    """
    arr = as_bloch_array(s)
    n2 = float(arr @ arr)
    if n2 >= 1.0:
        raise SingularityError(
            "infidelity curvature diverges on the pure-state boundary |s| = 1"
        )
    return LossHessian(0.25 * (np.eye(3) + np.outer(arr, arr) / (1.0 - n2)))


def infidelity_quadratic(s, t) -> float:
    """Second-order approximation of the infidelity around s.

    Returns (t - s)^T H (t - s) with H the infidelity curvature at s;
    agrees with the exact infidelity up to third order in |t - s|.
    """
    h = hesse_if(s)
    return h.quadratic_form(as_bloch_array(t) - as_bloch_array(s))
