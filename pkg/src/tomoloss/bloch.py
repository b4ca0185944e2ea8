"""One-qubit states and measurements in the Bloch parametrization.

A qubit density matrix is identified with its Bloch vector s (a point of
the closed unit ball in R^3), and a measurement effect with a pair
(v, w) in R^4 acting through the affine rule p = v + w . s.  The 2x2
complex matrices are never materialized; every computation in the
package lives in this three-dimensional picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, UnphysicalStateError

#: Uniform numerical slack for all physicality checks (double round-off scale).
NORM_SLACK = 1e-12


def as_bloch_array(s) -> np.ndarray:
    """Coerce a ``BlochVector`` or any length-3 sequence to a float array."""
    if isinstance(s, BlochVector):
        return s.as_array()
    arr = np.asarray(s, dtype=float)
    if arr.shape != (3,):
        raise DomainError(f"expected a 3-component Bloch vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class BlochVector:
    """Point s in R^3 parametrizing a qubit state; physical iff |s| <= 1."""

    s1: float
    s2: float
    s3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3], dtype=float)

    @property
    def norm(self) -> float:
        """Purity radius |s| (derived, never stored)."""
        return math.sqrt(self.s1 ** 2 + self.s2 ** 2 + self.s3 ** 2)

    def physical(self, slack: float = NORM_SLACK) -> bool:
        return self.norm <= 1.0 + slack

    def unit(self) -> np.ndarray:
        """Radial direction s/|s|.  Raises for the maximally mixed state."""
        from .exceptions import UndefinedDirectionError

        n = self.norm
        if n == 0.0:
            raise UndefinedDirectionError("s = 0 has no radial direction")
        return self.as_array() / n

    @classmethod
    def from_array(cls, arr) -> "BlochVector":
        a = as_bloch_array(arr)
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class SphericalCoords:
    """Spherical coordinates (r, theta, phi), physics convention.

    theta is the polar angle measured from the +z axis, phi the azimuth
    measured from the +x axis.
    """

    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise DomainError(f"radius must lie in [0, 1], got {self.r}")
        if not 0.0 <= self.theta <= math.pi:
            raise DomainError(f"polar angle must lie in [0, pi], got {self.theta}")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise DomainError(f"azimuth must lie in [0, 2*pi), got {self.phi}")


def bloch_from_spherical(coords: SphericalCoords) -> BlochVector:
    """Convert (r, theta, phi) to the Cartesian Bloch vector.

    Returns (r sin(theta) cos(phi), r sin(theta) sin(phi), r cos(theta)).
    """
    st = math.sin(coords.theta)
    return BlochVector(
        coords.r * st * math.cos(coords.phi),
        coords.r * st * math.sin(coords.phi),
        coords.r * math.cos(coords.theta),
    )


def spherical_from_bloch(s: BlochVector) -> SphericalCoords:
    """Inverse of :func:`bloch_from_spherical` (phi = 0 on the z axis)."""
    arr = as_bloch_array(s)
    r = float(np.linalg.norm(arr))
    if r == 0.0:
        return SphericalCoords(0.0, 0.0, 0.0)
    theta = math.acos(max(-1.0, min(1.0, arr[2] / r)))
    phi = math.atan2(arr[1], arr[0])
    if phi < 0.0:
        phi += 2.0 * math.pi
    if phi >= 2.0 * math.pi:
        phi = 0.0
    return SphericalCoords(r, theta, phi)


@dataclass(frozen=True)
class PovmEffect:
    """Measurement effect v*1 + w.sigma; positive semidefinite iff v >= |w|."""

    v: float
    w: tuple[float, float, float]

    def __post_init__(self):
        if len(self.w) != 3:
            raise DomainError("effect direction w must have 3 components")
        object.__setattr__(self, "w", tuple(float(x) for x in self.w))

    def w_array(self) -> np.ndarray:
        return np.asarray(self.w, dtype=float)

    def is_psd(self, slack: float = NORM_SLACK) -> bool:
        return self.v >= float(np.linalg.norm(self.w_array())) - slack


@dataclass(frozen=True)
class Povm:
    """Ordered collection of effects with outcome labels.

    A valid POVM resolves the identity: sum of v is 1 and the w vectors
    sum to zero.  Use :func:`validate_povm` for the full report.
    """

    effects: tuple[PovmEffect, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "effects", tuple(self.effects))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(len(self.effects))))
        elif len(self.labels) != len(self.effects):
            raise DomainError("one label per effect required")

    def __len__(self) -> int:
        return len(self.effects)

    def index_of(self, outcome) -> int:
        """Resolve an outcome given as integer index or string label."""
        if isinstance(outcome, str):
            try:
                return self.labels.index(outcome)
            except ValueError:
                raise DomainError(f"unknown outcome label {outcome!r}") from None
        idx = int(outcome)
        if not 0 <= idx < len(self.effects):
            raise DomainError(f"outcome index {idx} out of range 0..{len(self.effects) - 1}")
        return idx

    def v_vector(self) -> np.ndarray:
        """All offsets v_x as a (K,) array."""
        return np.array([eff.v for eff in self.effects], dtype=float)

    def w_matrix(self) -> np.ndarray:
        """All directions w_x stacked as a (K, 3) array."""
        return np.array([eff.w for eff in self.effects], dtype=float)


def outcome_probability(povm: Povm, s: BlochVector, outcome) -> float:
    """Probability v_x + w_x . s of one outcome for a physical state."""
    arr = _require_physical(s)
    idx = povm.index_of(outcome)
    eff = povm.effects[idx]
    return float(eff.v + eff.w_array() @ arr)


def probabilities(povm: Povm, s: BlochVector) -> np.ndarray:
    """All outcome probabilities as a (K,) array (sums to 1 for a valid POVM)."""
    arr = _require_physical(s)
    return povm.v_vector() + povm.w_matrix() @ arr


def _require_physical(s) -> np.ndarray:
    arr = as_bloch_array(s)
    if float(np.linalg.norm(arr)) > 1.0 + NORM_SLACK:
        raise UnphysicalStateError(f"|s| = {np.linalg.norm(arr):.17g} exceeds 1")
    return arr


@dataclass(frozen=True)
class PovmValidity:
    """Structured result of the three POVM checks; never raises."""

    complete: bool
    effects_psd: bool
    informationally_complete: bool
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def validate_povm(povm: Povm, slack: float = NORM_SLACK) -> PovmValidity:
    """Check completeness, effect positivity and informational completeness.

    Completeness means the effects resolve the identity (sum v = 1 and
    sum w = 0); informational completeness means the directions w_x span
    R^3, i.e. outcome statistics determine the state uniquely.
    """
    failures: list[str] = []

    v_sum = float(np.sum(povm.v_vector()))
    w_sum = povm.w_matrix().sum(axis=0)
    complete = abs(v_sum - 1.0) <= slack and float(np.max(np.abs(w_sum))) <= slack
    if not complete:
        failures.append(
            f"effects do not resolve the identity: sum v = {v_sum:.17g}, "
            f"max |sum w| = {float(np.max(np.abs(w_sum))):.3g}"
        )

    psd = True
    for label, eff in zip(povm.labels, povm.effects):
        if not eff.is_psd(slack):
            psd = False
            failures.append(
                f"effect {label!r} is not positive semidefinite: "
                f"v = {eff.v:.17g} < |w| = {float(np.linalg.norm(eff.w_array())):.17g}"
            )

    rank = int(np.linalg.matrix_rank(povm.w_matrix(), tol=1e-10))
    ic = rank == 3
    if not ic:
        failures.append(f"directions w_x span only a rank-{rank} subspace of R^3")

    return PovmValidity(complete, psd, ic, tuple(failures))


#: Labels of the six-outcome measurement along the three coordinate axes.
XYZ_LABELS = ("1+", "1-", "2+", "2-", "3+", "3-")


def xyz_povm() -> Povm:
    """Six-outcome POVM measuring each Pauli axis with weight 1/3.

    Effects are ordered (1+, 1-, 2+, 2-, 3+, 3-); each has v = 1/6 and
    w = +-unit_axis/6.
    """
    effects = []
    for axis in range(3):
        for sign in (+1.0, -1.0):
            w = [0.0, 0.0, 0.0]
            w[axis] = sign / 6.0
            effects.append(PovmEffect(1.0 / 6.0, tuple(w)))
    return Povm(tuple(effects), XYZ_LABELS)
