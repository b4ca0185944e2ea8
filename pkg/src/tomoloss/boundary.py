"""Closed-form approximate expected losses under the Gaussian + linear
boundary model.

The sampling distribution of the linear estimator is replaced by a
Gaussian centered on the true state with covariance F^-1/N, and the
spherical boundary of the state space by its tangent plane at the radial
point of the true state.  Estimates falling outside the half-space are
projected onto the plane in the information metric.  The expected
squared Hilbert-Schmidt distance and expected infidelity of that
projected estimator have closed forms, implemented here for strictly
mixed and for pure true states.

The complementary error function the formulas need is implemented from
scratch (power series plus a continued fraction) so results are
bit-stable across platforms; an asymptotic partial sum is provided
purely as a cross-check at large arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import spectral_pinv
from .bloch import NORM_SLACK, BlochVector, as_bloch_array
from .exceptions import DomainError, WrongRegimeError
from .fisher import FisherMatrix

_SQRT_PI = math.sqrt(math.pi)

#: Series/continued-fraction crossover for erfc.
_ERFC_SPLIT = 2.0


def erfc(a: float) -> float:
    """Complementary error function (2/sqrt(pi)) * integral_a^inf exp(-t^2) dt.

    Absolute accuracy is a few ulp over the real line; the reflection
    erfc(a) + erfc(-a) = 2 holds exactly because negative arguments are
    evaluated through it.
    """
    x = float(a)
    if x != x:  # NaN
        return x
    if x < 0.0:
        return 2.0 - erfc(-x)
    if x == 0.0:
        return 1.0
    if x < _ERFC_SPLIT:
        return 1.0 - _erf_series(x)
    return _erfc_continued_fraction(x)


def _erf_series(x: float) -> float:
    # erf(x) = (2/sqrt(pi)) sum_n (-1)^n x^(2n+1) / (n! (2n+1)); converges
    # fast for |x| < 2 with only mild cancellation.
    term = x
    total = x
    n = 0
    xx = x * x
    while True:
        n += 1
        term *= -xx / n
        contrib = term / (2 * n + 1)
        total += contrib
        if abs(contrib) < 1e-18 * abs(total) or n > 200:
            break
    return 2.0 * total / _SQRT_PI


def _erfc_continued_fraction(x: float) -> float:
    # sqrt(pi) exp(x^2) erfc(x) = 1/(x+ (1/2)/(x+ 1/(x+ (3/2)/(x+ ...))));
    # evaluated with the modified Lentz algorithm.
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    for k in range(1, 300):
        a = 1.0 if k == 1 else 0.5 * (k - 1)
        d = x + a * d
        if d == 0.0:
            d = tiny
        c = x + a / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(-x * x) / _SQRT_PI * f


def erfc_asymptotic(a: float, m_max: int) -> float:
    """Partial sum of the large-argument expansion of erfc.

    Returns exp(-a^2)/(sqrt(pi) a) * (1 + sum_{m=1}^{m_max} (-1)^m
    (2m-1)!! / (2 a^2)^m).  Only meaningful for a > 0; the truncation
    error is bounded by the first omitted term.
    """
    if a <= 0.0:
        raise DomainError("the asymptotic expansion requires a > 0")
    if m_max < 0:
        raise DomainError("m_max must be >= 0")
    two_a2 = 2.0 * a * a
    term = 1.0
    total = 1.0
    for m in range(1, m_max + 1):
        term *= -(2 * m - 1) / two_a2
        total += term
    return math.exp(-a * a) / (_SQRT_PI * a) * total


@dataclass(frozen=True)
class ApproxLossInputs:
    """True state, information matrix and trial count for the closed forms."""

    s: BlochVector
    f: FisherMatrix
    n: float

    def __post_init__(self):
        if not isinstance(self.s, BlochVector):
            object.__setattr__(self, "s", BlochVector.from_array(self.s))
        if not self.s.physical():
            raise DomainError(f"|s| = {self.s.norm:.17g} exceeds 1")
        self.f.inverse  # raises if singular
        if self.n < 1:
            raise DomainError(f"trial count must be >= 1, got {self.n}")


def _radial_scalars(s: BlochVector, f: FisherMatrix):
    arr = s.as_array()
    r = s.norm
    if r == 0.0:
        from .exceptions import UndefinedDirectionError

        raise UndefinedDirectionError("s = 0 has no radial direction")
    e = arr / r
    finv = f.inverse
    e_finv_e = float(e @ finv @ e)
    e_finv2_e = float(e @ finv @ finv @ e)
    tr_finv = float(np.trace(finv))
    return arr, r, e, e_finv_e, e_finv2_e, tr_finv


def _require_mixed(s: BlochVector) -> None:
    r = s.norm
    if r <= NORM_SLACK:
        raise WrongRegimeError(
            "s = 0 has no boundary direction; the projected-Gaussian model needs 0 < |s| < 1"
        )
    if r >= 1.0 - NORM_SLACK:
        raise WrongRegimeError(
            "|s| = 1: use the pure-state formula (expected_hs_pure / expected_if_pure)"
        )


def _require_pure(s) -> BlochVector:
    vec = s if isinstance(s, BlochVector) else BlochVector.from_array(s)
    if abs(vec.norm - 1.0) > NORM_SLACK:
        raise WrongRegimeError(
            f"|s| = {vec.norm:.17g} is not 1: use the mixed-state formula"
        )
    return vec


def boundary_threshold(s, f: FisherMatrix) -> float:
    """Trial count 2 (e.F^-1 e)/(1-|s|)^2 after which the boundary terms
    decay exponentially; +inf on the boundary itself."""
    vec = s if isinstance(s, BlochVector) else BlochVector.from_array(s)
    _, r, _, e_finv_e, _, _ = _radial_scalars(vec, f)
    if r >= 1.0 - NORM_SLACK:
        return math.inf
    return 2.0 * e_finv_e / (1.0 - r) ** 2


def expected_hs_mixed(inputs: ApproxLossInputs) -> float:
    """Model expected squared Hilbert-Schmidt distance, mixed true state.

    Exact expectation of |t - s|^2/4 over the projected Gaussian: the
    asymptotic 1/N term with its erfc depletion, an exponentially damped
    1/sqrt(N) cross term, and a constant-in-N term carrying the squared
    distance (1-|s|)^2 from the state to the boundary plane.
    """
    _require_mixed(inputs.s)
    _, r, _, e_finv_e, e_finv2_e, tr_finv = _radial_scalars(inputs.s, inputs.f)
    n = inputs.n
    n_thresh = 2.0 * e_finv_e / (1.0 - r) ** 2
    tail = erfc(math.sqrt(n / n_thresh))
    damp = math.exp(-n / n_thresh)
    ratio = e_finv2_e / e_finv_e

    leading = 0.25 * (tr_finv - 0.5 * ratio * tail) / n
    cross = -0.25 * (1.0 - r) / math.sqrt(2.0 * math.pi * e_finv_e) * ratio * damp / math.sqrt(n)
    plane = 0.125 * (1.0 - r) ** 2 * (e_finv2_e / e_finv_e ** 2) * tail
    return leading + cross + plane


def expected_hs_pure(s, f: FisherMatrix, n: float) -> float:
    """Model expected squared Hilbert-Schmidt distance at a pure true state.

    Half the Gaussian mass always sits outside the tangent plane, so the
    value (tr F^-1 - (e.F^-2 e)/(2 e.F^-1 e)) / (4N) stays strictly below
    the Cramer-Rao bound for all N.  Requires a finite, invertible
    information matrix at the boundary state.
    """
    vec = _require_pure(s)
    if n < 1:
        raise DomainError(f"trial count must be >= 1, got {n}")
    _, _, _, e_finv_e, e_finv2_e, tr_finv = _radial_scalars(vec, f)
    return 0.25 * (tr_finv - 0.5 * e_finv2_e / e_finv_e) / n


def expected_if_mixed(inputs: ApproxLossInputs) -> float:
    """Model expected infidelity, mixed true state.

    Estimates inside the half-space are scored with the second-order
    expansion of the infidelity; estimates projected onto the boundary
    plane are scored with the linearized infidelity (1 - s.t)/2, which
    on the plane equals (1 - |s|)/2 exactly.  The middle term uses the
    generalized inverse of the information matrix restricted to the
    directions orthogonal to s.
    """
    _require_mixed(inputs.s)
    arr, r, e, e_finv_e, _, tr_finv = _radial_scalars(inputs.s, inputs.f)
    n = inputs.n
    finv = inputs.f.inverse
    n_thresh = 2.0 * e_finv_e / (1.0 - r) ** 2
    tail = erfc(math.sqrt(n / n_thresh))
    damp = math.exp(-n / n_thresh)

    s_finv_s = float(arr @ finv @ arr)
    radial_curv = s_finv_s / (1.0 - r ** 2)
    proj = np.eye(3) - np.outer(e, e)
    pinched = proj @ inputs.f.matrix @ proj
    tr_tangent = float(np.trace(spectral_pinv(pinched)))

    leading = 0.25 * (tr_finv + radial_curv) / n * (1.0 - 0.5 * tail)
    cross = (-0.25 * (1.0 - r) / math.sqrt(2.0 * math.pi * e_finv_e)
             * (tr_finv - tr_tangent + radial_curv) * damp / math.sqrt(n))
    plane = 0.25 * (1.0 - r) * tail
    return leading + cross + plane


def expected_if_pure(s, f: FisherMatrix, n: float) -> float:
    """Model expected infidelity at a pure true state.

    For |s| = 1 the infidelity is linear in the estimate, and the model
    expectation reduces to sqrt(e.F^-1 e / (2 pi N)) / 2: a 1/sqrt(N)
    decay, qualitatively slower than any Cramer-Rao rate.
    """
    vec = _require_pure(s)
    if n < 1:
        raise DomainError(f"trial count must be >= 1, got {n}")
    _, _, _, e_finv_e, _, _ = _radial_scalars(vec, f)
    return 0.5 * math.sqrt(e_finv_e / (2.0 * math.pi)) / math.sqrt(n)
