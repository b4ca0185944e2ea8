"""Stochastic engines: full tomography simulation and the sampling
integrator for the projected-Gaussian model.

Reproducibility contract: every (trial-count index, sequence index) pair
owns an independent counter-based random stream derived from the master
seed, so a simulation is bit-identical for a fixed (seed, plan)
regardless of how sequences are distributed over workers.  Results are
merged into a preallocated per-sequence array and reduced in a fixed
order.  Comparisons across different generators or implementations must
go through means and standard errors, never bit equality.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bloch import NORM_SLACK, BlochVector, Povm, as_bloch_array, probabilities
from .estimators import OutcomeCounts, mle
from .exceptions import DomainError, SingularMatrixError, UndefinedDirectionError
from .fisher import FisherMatrix
from .losses import LossHessian, hs_distance, infidelity

#: Trial counts up to this bound are sampled as independent categorical
#: draws; larger ones fall back to the binomial-decomposition sampler.
CATEGORICAL_SAMPLING_MAX = 1000

LOSS_KINDS = ("hs", "if")


@dataclass(frozen=True)
class SimulationPlan:
    """Full description of one tomography simulation campaign."""

    povm: Povm
    s_true: BlochVector
    n_grid: tuple[int, ...]
    sequences: int
    seed: int
    losses: tuple[str, ...] = LOSS_KINDS

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(n < 1 for n in grid):
            raise DomainError("n_grid must contain trial counts >= 1")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("n_grid must be strictly increasing")
        object.__setattr__(self, "n_grid", grid)
        if self.sequences < 1:
            raise DomainError("at least one sequence is required")
        losses = tuple(self.losses)
        if not losses or any(kind not in LOSS_KINDS for kind in losses):
            raise DomainError(f"losses must be a nonempty subset of {LOSS_KINDS}")
        object.__setattr__(self, "losses", losses)
        if not isinstance(self.s_true, BlochVector):
            object.__setattr__(self, "s_true", BlochVector.from_array(self.s_true))
        if not self.s_true.physical():
            raise DomainError(f"|s_true| = {self.s_true.norm:.17g} exceeds 1")


@dataclass(frozen=True)
class ExpectedLossEstimate:
    """Sample mean of a loss over independent sequences, with its MC error.

    ``std_error`` is the sample standard deviation divided by
    sqrt(sequences); it is NaN when only one sequence was run.  The
    estimate is flagged when more than 0.1% of sequences failed to
    converge.
    """

    n: float
    mean: float
    std_error: float
    sequences: int
    failures: int = 0
    flagged: bool = field(default=False)


def sequence_stream(seed: int, n_index: int, sequence_index: int) -> np.random.Generator:
    """Independent counter-based stream for one (trial-count, sequence) cell."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(n_index, sequence_index))
    return np.random.Generator(np.random.Philox(ss))


def sample_counts(povm: Povm, s, n: int, stream: np.random.Generator) -> OutcomeCounts:
    """Multinomial outcome histogram for n trials on state s.

    Small n uses n independent categorical draws; large n the binomial
    decomposition (numpy's multinomial).  Both produce the same
    distribution; the split is purely a speed/exactness tradeoff.
    """
    if n < 1:
        raise DomainError(f"trial count must be >= 1, got {n}")
    p = probabilities(povm, s)
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    if n <= CATEGORICAL_SAMPLING_MAX:
        edges = np.cumsum(p)
        idx = np.searchsorted(edges, stream.random(int(n)), side="right")
        idx = np.minimum(idx, len(p) - 1)
        counts = np.bincount(idx, minlength=len(p))
    else:
        counts = stream.multinomial(int(n), p)
    return OutcomeCounts(tuple(int(c) for c in counts))


def _score(kind: str, estimate: BlochVector, s_true: BlochVector) -> float:
    if kind == "hs":
        return hs_distance(estimate, s_true)
    return infidelity(estimate, s_true)


def _sequence_block(plan: SimulationPlan, n_index: int, n: int,
                    start: int, stop: int) -> tuple[int, np.ndarray, np.ndarray]:
    """Losses and failure flags for sequences [start, stop) at one n."""
    values = np.empty((stop - start, len(plan.losses)))
    failed = np.zeros(stop - start, dtype=bool)
    for offset, seq in enumerate(range(start, stop)):
        stream = sequence_stream(plan.seed, n_index, seq)
        counts = sample_counts(plan.povm, plan.s_true, n, stream)
        report = mle(plan.povm, counts)
        if not report.converged:
            failed[offset] = True
        if report.estimate.norm > 1.0 + NORM_SLACK:
            raise RuntimeError("maximum-likelihood estimate left the unit ball")
        for j, kind in enumerate(plan.losses):
            values[offset, j] = _score(kind, report.estimate, plan.s_true)
    return start, values, failed


def empirical_expected_loss(plan: SimulationPlan, *,
                            workers: int = 1) -> dict[str, list[ExpectedLossEstimate]]:
    """Expected losses of the maximum-likelihood estimator by simulation.

    For each trial count in the plan, runs ``plan.sequences`` independent
    data sets, estimates the state from each, scores the requested losses
    against the true state and returns the per-N sample means with their
    Monte Carlo standard errors.  Deterministic for a fixed (seed, plan),
    whatever the worker count.
    """
    results: dict[str, list[ExpectedLossEstimate]] = {kind: [] for kind in plan.losses}
    m = plan.sequences
    for n_index, n in enumerate(plan.n_grid):
        values = np.empty((m, len(plan.losses)))
        failed = np.zeros(m, dtype=bool)
        if workers <= 1 or m < 2 * workers:
            _, values[:], failed[:] = _sequence_block(plan, n_index, n, 0, m)
        else:
            bounds = np.linspace(0, m, workers + 1, dtype=int)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_sequence_block, plan, n_index, n, int(a), int(b))
                    for a, b in zip(bounds[:-1], bounds[1:]) if b > a
                ]
                for fut in futures:
                    start, block, fail_block = fut.result()
                    values[start:start + len(block)] = block
                    failed[start:start + len(fail_block)] = fail_block
        failures = int(failed.sum())
        flagged = failures > 0.001 * m
        for j, kind in enumerate(plan.losses):
            col = values[:, j]
            mean = float(col.mean())
            stderr = float(col.std(ddof=1) / math.sqrt(m)) if m > 1 else math.nan
            results[kind].append(
                ExpectedLossEstimate(float(n), mean, stderr, m, failures, flagged)
            )
    return results


def gaussian_sampler(mean, covariance, stream: np.random.Generator,
                     size: int | None = None) -> np.ndarray:
    """Draw from a trivariate normal via the Cholesky factor of the covariance.

    Returns shape (3,) for ``size=None`` and (size, 3) otherwise.
    """
    mu = as_bloch_array(mean)
    cov = np.asarray(covariance, dtype=float)
    if cov.shape != (3, 3):
        raise DomainError(f"covariance must be 3x3, got {cov.shape}")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("covariance is not symmetric positive definite") from exc
    if size is None:
        return mu + chol @ stream.standard_normal(3)
    return mu + stream.standard_normal((int(size), 3)) @ chol.T


def gaussian_projection_oracle(s, f: FisherMatrix, n: float, m: int, loss,
                               stream: np.random.Generator) -> ExpectedLossEstimate:
    """Brute-force integrator for the projected-Gaussian model.

    Samples m points from Normal(s, F^-1/n), moves those outside the
    tangent half-space onto the boundary plane (information-metric
    projection, identical to ``project_to_tangent``), applies ``loss``
    and returns the sample mean with its standard error.

    ``loss`` is called as ``loss(points, projected)`` with the (m, 3)
    array of post-projection estimates and the boolean mask of points
    that were projected; see the ``*_loss`` factories below.
    """
    arr = as_bloch_array(s)
    r = float(np.linalg.norm(arr))
    if r == 0.0:
        raise UndefinedDirectionError("the projection needs a radial direction; s = 0 has none")
    if m < 1:
        raise DomainError("at least one sample is required")
    if n < 1:
        raise DomainError(f"trial count must be >= 1, got {n}")
    points = gaussian_sampler(arr, f.inverse / n, stream, size=m)
    e = arr / r
    overshoot = points @ e
    projected = overshoot > 1.0 + NORM_SLACK
    finv_e = f.inverse @ e
    scale = float(e @ finv_e)
    points[projected] -= np.outer((overshoot[projected] - 1.0) / scale, finv_e)
    values = np.asarray(loss(points, projected), dtype=float)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(m)) if m > 1 else math.nan
    return ExpectedLossEstimate(float(n), mean, stderr, int(m))


def squared_hs_loss(s_true):
    """Loss functional |t - s|^2 / 4 (exact and quadratic everywhere)."""
    target = as_bloch_array(s_true)

    def fn(points, projected):
        d = points - target
        return 0.25 * np.einsum("ij,ij->i", d, d)

    return fn


def quadratic_form_loss(s_true, hessian: LossHessian):
    """Loss functional (t - s)^T H (t - s) for an arbitrary loss Hessian."""
    target = as_bloch_array(s_true)
    h = hessian.h

    def fn(points, projected):
        d = points - target
        return np.einsum("ij,jk,ik->i", d, h, d)

    return fn


def mixed_state_infidelity_loss(s_true, hessian_if: LossHessian):
    """Infidelity scored the way the mixed-state closed form defines it.

    Unprojected points get the second-order form (t-s)^T H (t-s);
    points moved onto the boundary plane get the linearized infidelity
    (1 - s.t)/2, which is exact there because the square-root term of
    the fidelity vanishes outside the ball.
    """
    target = as_bloch_array(s_true)
    h = hessian_if.h

    def fn(points, projected):
        d = points - target
        vals = np.einsum("ij,jk,ik->i", d, h, d)
        if np.any(projected):
            vals[projected] = 0.5 * (1.0 - points[projected] @ target)
        return vals

    return fn


def pure_state_infidelity_loss(s_true):
    """Exact infidelity against a pure true state: (1 - s.t)/2 for all t."""
    target = as_bloch_array(s_true)

    def fn(points, projected):
        return 0.5 * (1.0 - points @ target)

    return fn
