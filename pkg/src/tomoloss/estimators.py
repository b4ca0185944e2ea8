"""Estimators mapping outcome counts to Bloch vectors.

Three routes are provided:

* a linear (least-squares) inversion of the observed frequencies, which
  may land outside the physical ball;
* a maximum-likelihood estimator: damped Newton ascent of the
  log-likelihood started from the maximally mixed state, with
  backtracking into the unit ball and a tangential polish stage once the
  boundary is active, so the returned point is the constrained maximizer;
* the tangent-plane projection used by the Gaussian boundary model,
  which replaces the sphere with its tangent plane at the true state's
  radial point and projects in the metric of the information matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._linalg import pinv_solve_psd
from .bloch import NORM_SLACK, BlochVector, Povm, as_bloch_array
from .exceptions import DomainError, NotInformationallyCompleteError
from .fisher import FisherMatrix

#: Default Newton convergence controls (exposed so configs can override).
STEP_TOL = 1e-10
LOGLIK_TOL = 1e-12
MAX_ITERATIONS = 200

#: Boundary proximity below which the sphere constraint is treated as active.
_BOUNDARY_BAND = 1e-9

#: Maximum residual |p(x|s_li) - f(x)| for the linear estimate to count as
#: an exact solution of the frequency equations (the fast-path condition).
_CONSISTENCY_TOL = 1e-10


@dataclass(frozen=True)
class OutcomeCounts:
    """Histogram of outcome occurrences over one simulated data set."""

    counts: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(x) for x in self.counts)
        if any(x < 0 for x in c):
            raise DomainError("counts must be nonnegative")
        if sum(c) < 1:
            raise DomainError("at least one trial is required")
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        """Total number of trials."""
        return sum(self.counts)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float)

    def frequencies(self) -> np.ndarray:
        """Relative frequencies; sum to 1 by construction."""
        return self.as_array() / self.n


@dataclass(frozen=True)
class MleReport:
    """Maximum-likelihood estimate plus solver diagnostics."""

    estimate: BlochVector
    iterations: int
    converged: bool
    hit_boundary: bool
    used_linear_fast_path: bool


class LogLikelihood(NamedTuple):
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def _require_counts(povm: Povm, counts: OutcomeCounts) -> np.ndarray:
    c = counts.as_array()
    if c.shape != (len(povm),):
        raise DomainError(
            f"count vector has {c.shape[0]} entries but the POVM has {len(povm)} outcomes"
        )
    return c


def _require_ic(povm: Povm) -> None:
    if int(np.linalg.matrix_rank(povm.w_matrix(), tol=1e-10)) < 3:
        raise NotInformationallyCompleteError(
            "POVM direction vectors do not span R^3; counts cannot determine the state"
        )


def linear_estimate(povm: Povm, counts: OutcomeCounts) -> np.ndarray:
    """Least-squares solution of the frequency equations w_x.s = f(x) - v_x.

    For the six-outcome axis POVM this reduces exactly to
    s_alpha = 3 (f(alpha+) - f(alpha-)).  The result is a raw point of
    R^3 and may lie outside the physical ball.
    """
    _require_ic(povm)
    _require_counts(povm, counts)
    rhs = counts.frequencies() - povm.v_vector()
    sol, *_ = np.linalg.lstsq(povm.w_matrix(), rhs, rcond=None)
    return sol


def log_likelihood(povm: Povm, counts: OutcomeCounts, s) -> LogLikelihood:
    """Log-likelihood of the counts at state s, with gradient and Hessian.

    The value is -inf when an observed outcome has zero probability;
    outcomes with zero counts never contribute, so states on the boundary
    remain admissible as long as every observed outcome stays possible.
    """
    c = _require_counts(povm, counts)
    x = as_bloch_array(s)
    v = povm.v_vector()
    w = povm.w_matrix()
    return _loglik_full(v, w, c, x)


def _loglik_value(v, w, c, x) -> float:
    p = v + w @ x
    act = c > 0
    pa = p[act]
    if np.any(pa <= 0.0):
        return -math.inf
    return float(c[act] @ np.log(pa))


def _loglik_full(v, w, c, x) -> LogLikelihood:
    p = v + w @ x
    act = c > 0
    pa = p[act]
    wa = w[act]
    ca = c[act]
    if np.any(pa <= 0.0):
        with np.errstate(divide="ignore", invalid="ignore"):
            grad = wa.T @ (ca / pa)
            hess = -(wa.T * (ca / pa ** 2)) @ wa
        return LogLikelihood(-math.inf, grad, hess)
    grad = wa.T @ (ca / pa)
    hess = -(wa.T * (ca / pa ** 2)) @ wa
    return LogLikelihood(float(ca @ np.log(pa)), grad, hess)


def _reproduces_frequencies(povm: Povm, counts: OutcomeCounts, s_li: np.ndarray) -> bool:
    p = povm.v_vector() + povm.w_matrix() @ s_li
    return float(np.max(np.abs(p - counts.frequencies()))) <= _CONSISTENCY_TOL


def _ball_exit_step(x: np.ndarray, d: np.ndarray) -> float:
    """Largest t >= 0 with |x + t d| <= 1 (+inf if the ray never exits)."""
    dd = float(d @ d)
    if dd == 0.0:
        return math.inf
    xd = float(x @ d)
    slack = 1.0 - float(x @ x)
    disc = xd * xd + dd * slack
    if disc <= 0.0:
        return 0.0
    return (-xd + math.sqrt(disc)) / dd


def mle(povm: Povm, counts: OutcomeCounts, *,
        step_tol: float = STEP_TOL,
        loglik_tol: float = LOGLIK_TOL,
        max_iterations: int = MAX_ITERATIONS) -> MleReport:
    """Maximum-likelihood Bloch vector for the observed counts.

    Fast path: when the linear estimate is physical *and* exactly
    reproduces the observed frequencies, it is the stationary point of
    the concave log-likelihood and hence the maximum-likelihood estimate,
    so it is returned directly.  (Mere physicality is not enough: a
    least-squares point of an inconsistent system is generally not a
    stationary point of the likelihood.)

    Otherwise damped Newton ascent runs from s = 0.  Steps that would
    leave the unit ball are shortened to the exact ball boundary and then
    halved until the log-likelihood improves.  Once the iterate sits on
    the sphere with the gradient pointing outward, the search switches to
    Newton steps in the tangent plane (renormalized back onto the
    sphere), so boundary solutions are polished to stationarity rather
    than left wherever the first shortened step landed.
    """
    _require_ic(povm)
    c = _require_counts(povm, counts)
    s_li = linear_estimate(povm, counts)
    li_norm = float(np.linalg.norm(s_li))
    if li_norm <= 1.0 + NORM_SLACK and _reproduces_frequencies(povm, counts, s_li):
        return MleReport(
            estimate=BlochVector.from_array(s_li),
            iterations=0,
            converged=True,
            hit_boundary=li_norm >= 1.0 - _BOUNDARY_BAND,
            used_linear_fast_path=True,
        )

    v = povm.v_vector()
    w = povm.w_matrix()
    x = np.zeros(3)
    ll = _loglik_value(v, w, c, x)
    converged = False
    iterations = 0

    while iterations < max_iterations:
        iterations += 1
        _, grad, hess = _loglik_full(v, w, c, x)
        xnorm = float(np.linalg.norm(x))
        on_sphere = xnorm >= 1.0 - _BOUNDARY_BAND
        outward = on_sphere and float(grad @ x) > 0.0
        accepted = False

        if outward:
            new_x, new_ll, accepted, stationary = _tangential_step(
                v, w, c, x, ll, grad, hess, xnorm)
            if stationary:
                converged = True
                break
        else:
            # interior ascent: Newton direction, steepest ascent as fallback
            for d in _interior_directions(grad, hess):
                new_x, new_ll, accepted = _ball_search(v, w, c, x, d, ll)
                if accepted:
                    break
            if not accepted and on_sphere:
                # pinned against the sphere with every inward move exhausted:
                # the optimum may still lie elsewhere on the boundary
                new_x, new_ll, accepted, stationary = _tangential_step(
                    v, w, c, x, ll, grad, hess, xnorm)
                if stationary:
                    converged = True
                    break

        if not accepted:
            # no admissible point improves the likelihood: local optimum
            converged = True
            break
        step = float(np.linalg.norm(new_x - x))
        gain = new_ll - ll
        x, ll = new_x, new_ll
        if step < step_tol or gain < loglik_tol:
            converged = True
            break

    final_norm = float(np.linalg.norm(x))
    return MleReport(
        estimate=BlochVector.from_array(x),
        iterations=iterations,
        converged=converged,
        hit_boundary=final_norm >= 1.0 - _BOUNDARY_BAND,
        used_linear_fast_path=False,
    )


def _interior_directions(grad, hess):
    """Candidate ascent directions: Newton step, then steepest ascent."""
    newton = pinv_solve_psd(-hess, grad)
    dirs = []
    if np.all(np.isfinite(newton)) and float(np.linalg.norm(newton)) > 0.0:
        dirs.append(newton)
    if float(np.linalg.norm(grad)) > 0.0:
        dirs.append(grad / max(1.0, float(np.linalg.norm(grad))))
    return dirs


def _tangential_step(v, w, c, x, ll, grad, hess, xnorm):
    """One polish step along the sphere: Newton in the tangent plane with a
    steepest-ascent fallback, candidates renormalized onto the sphere.

    Returns (new_x, new_ll, accepted, stationary); stationary means the
    tangential gradient already vanishes, i.e. the boundary optimum is
    reached.
    """
    xhat = x / xnorm
    radial = float(grad @ xhat)
    g_tan = grad - radial * xhat
    if float(np.linalg.norm(g_tan)) <= 1e-9 * max(1.0, float(np.linalg.norm(grad))):
        return x, ll, False, True
    proj = np.eye(3) - np.outer(xhat, xhat)
    # second-order model along the sphere: the projected Hessian plus the
    # constraint-curvature term radial * P (without it, Newton steps
    # overshoot by roughly a factor of two and the polish zigzags)
    newton = pinv_solve_psd(proj @ (-hess) @ proj + radial * proj, g_tan)
    directions = []
    if np.all(np.isfinite(newton)) and float(newton @ g_tan) > 0.0:
        directions.append(newton)
    directions.append(g_tan / max(1.0, float(np.linalg.norm(g_tan))))
    for d in directions:
        new_x, new_ll, accepted = _sphere_search(v, w, c, x, d, ll)
        if accepted:
            return new_x, new_ll, True, False
    return x, ll, False, False


def _ball_search(v, w, c, x, d, ll, max_halvings: int = 60):
    """Backtracking line search along d keeping iterates inside the ball."""
    t = min(1.0, _ball_exit_step(x, d))
    if t <= 0.0:
        return x, ll, False
    for _ in range(max_halvings):
        cand = x + t * d
        cand_ll = _loglik_value(v, w, c, cand)
        if cand_ll > ll:
            return cand, cand_ll, True
        t *= 0.5
    return x, ll, False


def _sphere_search(v, w, c, x, d, ll, max_halvings: int = 60):
    """Backtracking search along a tangent direction, renormalized to the sphere."""
    t = 1.0
    for _ in range(max_halvings):
        cand = x + t * d
        cn = float(np.linalg.norm(cand))
        if cn > 0.0:
            cand = cand / cn
            cand_ll = _loglik_value(v, w, c, cand)
            if cand_ll > ll:
                return cand, cand_ll, True
        t *= 0.5
    return x, ll, False


def project_to_tangent(s_li, s_true, f: FisherMatrix) -> np.ndarray:
    """Project a raw linear estimate onto the tangent half-space at s_true.

    The half-space is bounded by the plane tangent to the unit sphere at
    the radial point of ``s_true``.  Points already inside are returned
    unchanged; outside points are moved onto the plane along F^-1 e, the
    minimizer of the information-metric distance, after which the plane
    equation e.result = 1 holds to round-off.  A slack of ``NORM_SLACK``
    on the inside test makes the projection exactly idempotent.
    """
    z = as_bloch_array(s_li).copy()
    e = BlochVector.from_array(s_true).unit()
    u = float(e @ z)
    if u <= 1.0 + NORM_SLACK:
        return z
    finv_e = f.inverse @ e
    return z - ((u - 1.0) / float(e @ finv_e)) * finv_e
