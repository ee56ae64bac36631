"""Kalman filter over camera pose, driven by VO increments, corrected by fusion.

The state is (x, y, z, psi, theta, phi) with a 6x6 covariance. Prediction
composes the incoming visual-odometry increment onto the pose (position adds,
orientation left-multiplies through rotation matrices) and inflates P by the
process noise. Correction applies the standard update against a fused 5-vector
measurement (x, y, z, psi, theta); roll is never observed, so the observation
matrix's last column is zero. Angular innovations are wrapped before the
update and angular states are wrapped after it, which keeps the filter honest
across the +/-180 heading seam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fusion import FusedMeasurement
from .geometry import Pose6D, compose_increment, is_rotation_matrix, wrap_angle

__all__ = [
    "OBSERVATION_MATRIX",
    "FilterState",
    "ProcessNoise",
    "VoIncrement",
    "correct",
    "predict",
    "run_filter",
    "state_vector",
]

# Maps state (x, y, z, psi, theta, phi) to measurement (x, y, z, psi, theta).
OBSERVATION_MATRIX = np.hstack([np.eye(5), np.zeros((5, 1))])

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class VoIncrement:
    """Relative motion between consecutive frames as seen by visual odometry."""

    dp: np.ndarray
    dR: np.ndarray

    def __post_init__(self) -> None:
        dp = np.asarray(self.dp, dtype=float)
        if dp.shape != (3,) or not np.all(np.isfinite(dp)):
            raise ValueError("dp must be a finite 3-vector")
        dR = np.asarray(self.dR, dtype=float)
        if not is_rotation_matrix(dR):
            raise ValueError("dR is not a rotation matrix (orthonormal within 1e-6)")
        object.__setattr__(self, "dp", dp)
        object.__setattr__(self, "dR", dR)

    @classmethod
    def identity(cls) -> "VoIncrement":
        return cls(np.zeros(3), np.eye(3))


@dataclass(frozen=True)
class ProcessNoise:
    """Diagonal process noise added to P once per prediction step."""

    variances: np.ndarray = field(default_factory=lambda: np.full(6, 0.01))

    def __post_init__(self) -> None:
        v = np.asarray(self.variances, dtype=float)
        if v.shape != (6,) or np.any(v < 0.0) or not np.all(np.isfinite(v)):
            raise ValueError("process noise needs 6 finite non-negative variances")
        object.__setattr__(self, "variances", v)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.variances)


@dataclass(frozen=True, eq=False)
class FilterState:
    """Pose estimate with its 6x6 covariance."""

    pose: Pose6D
    P: np.ndarray

    def __post_init__(self) -> None:
        P = np.asarray(self.P, dtype=float)
        if P.shape != (6, 6) or not np.all(np.isfinite(P)):
            raise ValueError("P must be a finite 6x6 matrix")
        if np.max(np.abs(P - P.T)) > 1e-9:
            raise ValueError("P must be symmetric")
        object.__setattr__(self, "P", P)

    @classmethod
    def initial(cls, pose: Pose6D, variance: float = 1.0) -> "FilterState":
        return cls(pose, np.eye(6) * float(variance))


def state_vector(state: FilterState) -> np.ndarray:
    """State as the 6-vector (x, y, z, psi, theta, phi)."""
    p = state.pose
    return np.array([p.x, p.y, p.z, p.psi, p.theta, p.phi])


def predict(
    state: FilterState, increment: VoIncrement, noise: ProcessNoise = ProcessNoise()
) -> FilterState:
    """Propagate the state through one VO increment, inflating P by Q."""
    pose = compose_increment(state.pose, increment.dp, increment.dR)
    return FilterState(pose, state.P + noise.matrix)


def correct(state: FilterState, measurement: FusedMeasurement) -> FilterState:
    """Fold one fused measurement into the state.

    Innovation y = z - H X with the heading and tilt components wrapped,
    gain K = P H^T (M + H P H^T)^-1, covariance P <- (I - K H) P symmetrized.
    Raises if the measurement covariance is not symmetric PSD or leaves the
    innovation covariance ill-conditioned.
    """
    M = np.asarray(measurement.M, dtype=float)
    if M.shape != (5, 5) or not np.all(np.isfinite(M)):
        raise ValueError("measurement covariance must be a finite 5x5 matrix")
    if np.max(np.abs(M - M.T)) > 1e-9:
        raise ValueError("measurement covariance must be symmetric")
    if np.min(np.linalg.eigvalsh(M)) < -1e-9:
        raise ValueError("measurement covariance must be positive semidefinite")

    H = OBSERVATION_MATRIX
    X = state_vector(state)
    P = state.P
    S = M + H @ P @ H.T
    if np.linalg.cond(S) > _COND_LIMIT:
        raise np.linalg.LinAlgError(
            f"innovation covariance condition number exceeds {_COND_LIMIT:g}"
        )
    innovation = measurement.z_vector() - H @ X
    innovation[3] = wrap_angle(innovation[3])
    innovation[4] = wrap_angle(innovation[4])
    K = np.linalg.solve(S.T, (P @ H.T).T).T
    updated = X + K @ innovation
    P_new = (np.eye(6) - K @ H) @ P
    P_new = 0.5 * (P_new + P_new.T)
    pose = Pose6D(
        float(updated[0]),
        float(updated[1]),
        float(updated[2]),
        wrap_angle(float(updated[3])),
        wrap_angle(float(updated[4])),
        wrap_angle(float(updated[5])),
    )
    return FilterState(pose, P_new)


def run_filter(
    initial: FilterState,
    increments,
    corrections=(),
    noise: ProcessNoise = ProcessNoise(),
) -> list[FilterState]:
    """Run predict/correct over timestamped streams.

    increments: iterable of (t, VoIncrement), strictly increasing t.
    corrections: iterable of (t, FusedMeasurement), strictly increasing t;
    each is applied right after the first prediction at or past its timestamp.
    Returns one FilterState per increment. Out-of-order timestamps, or a
    correction due after the final prediction, raise ValueError.
    """
    increments = list(increments)
    corrections = list(corrections)
    for stream, name in ((increments, "increment"), (corrections, "correction")):
        times = [t for t, _ in stream]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ValueError(f"{name} timestamps must be strictly increasing")

    states: list[FilterState] = []
    state = initial
    ci = 0
    for t, inc in increments:
        state = predict(state, inc, noise)
        while ci < len(corrections) and corrections[ci][0] <= t:
            state = correct(state, corrections[ci][1])
            ci += 1
        states.append(state)
    if ci < len(corrections):
        raise ValueError(
            f"correction at t={corrections[ci][0]} falls after the final prediction"
        )
    return states
