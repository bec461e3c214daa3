"""Recursive least-squares center estimation from range-only outputs.

The scalar output fed to the estimator is the projection of the target
center onto the inter-agent baseline, reconstructed purely from ranges
and dead-reckoned own positions.  A forgetting-factor recursion fuses one
such scalar per step into a 3-D center estimate.

The covariance is kept in extended precision.  With a planar run the
baseline never excites z, so the forgetting recursion multiplies the z
entry by 1/forgetting every step; over a few hundred steps that exceeds
the double range while remaining exactly representable in longdouble.
Keeping the recursion exact preserves the gain/covariance consistency
identity that the debug checks assert.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, CovarianceDegenerateError
from .vec import as_vec3, sym_eig3

_MIN_EIG = 1e-12


@dataclass(frozen=True)
class EstimatorConfig:
    """Forgetting recursion constants.

    forgetting: geometric de-weighting of old data, in (0, 1]; the value
        1 keeps all history (no forgetting).
    utilization: scaling of how strongly fresh data enters, in (0, 1].
    initial_covariance: scalar (scaled identity) or full 3x3 SPD matrix.
    """

    forgetting: float = 0.1
    utilization: float = 0.95
    initial_covariance: object = 100.0

    def __post_init__(self):
        if not 0 < self.forgetting <= 1:
            raise ConfigError("forgetting must lie in (0, 1]")
        if not 0 < self.utilization <= 1:
            raise ConfigError("utilization must lie in (0, 1]")
        cov = np.asarray(self.initial_covariance, dtype=np.float64)
        if cov.ndim == 0:
            cov = float(cov) * np.eye(3)
        if cov.shape != (3, 3):
            raise ConfigError("initial_covariance must be a scalar or a 3x3 matrix")
        if not np.all(np.isfinite(cov)) or not np.allclose(cov, cov.T, atol=1e-12):
            raise ConfigError("initial_covariance must be finite and symmetric")
        if float(sym_eig3(cov)[0]) <= 0:
            raise ConfigError("initial_covariance must be positive definite")
        object.__setattr__(self, "initial_covariance", cov)


@dataclass(frozen=True)
class EstimatorState:
    """Estimate plus everything the next update needs.

    center: current center estimate.
    covariance: longdouble 3x3, exact forgetting recursion.
    prev_prediction: displacement guess stored at the previous step.
    prev_center: estimate before the last update, kept for inspection.
    last_gain / last_innovation: most recent correction terms.
    """

    center: np.ndarray
    covariance: np.ndarray
    prev_prediction: np.ndarray
    prev_center: np.ndarray
    last_gain: np.ndarray
    last_innovation: float = 0.0

    @classmethod
    def initial(cls, cfg: EstimatorConfig, center0) -> "EstimatorState":
        c0 = as_vec3(center0, "initial center estimate")
        return cls(
            center=c0,
            covariance=np.asarray(cfg.initial_covariance, dtype=np.longdouble),
            prev_prediction=np.zeros(3),
            prev_center=c0.copy(),
            last_gain=np.zeros(3),
        )


def baseline_projection(dist1: float, dist2: float, pos1: np.ndarray, pos2: np.ndarray) -> float:
    """Projection of one target onto the agent baseline, from ranges alone.

    Algebraically equal to (pos1 - pos2) . target without ever using the
    target position: -(d1^2 - d2^2 - |pos1|^2 + |pos2|^2) / 2.
    """
    p1 = np.asarray(pos1, dtype=np.float64)
    p2 = np.asarray(pos2, dtype=np.float64)
    return -0.5 * (
        float(dist1) ** 2 - float(dist2) ** 2 - float(p1 @ p1) + float(p2 @ p2)
    )


def center_projection(projections, weights) -> float:
    """Convex combination of per-target projections: the center's output."""
    proj = np.asarray(projections, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if proj.shape != w.shape:
        raise ConfigError("projections and weights must align")
    return float(w @ proj)


def _gain_terms(cov_prev: np.ndarray, baseline: np.ndarray, cfg: EstimatorConfig):
    cov = np.asarray(cov_prev, dtype=np.longdouble)
    p = np.asarray(baseline, dtype=np.longdouble)
    y = cov @ p
    denom = np.longdouble(cfg.forgetting) * np.longdouble(cfg.utilization) + p @ y
    return y, denom


def gain(cov_prev: np.ndarray, baseline: np.ndarray, cfg: EstimatorConfig) -> np.ndarray:
    """Correction gain for the current baseline direction."""
    y, denom = _gain_terms(cov_prev, baseline, cfg)
    return np.asarray(y / denom, dtype=np.float64)


def covariance_update(cov_prev: np.ndarray, baseline: np.ndarray, cfg: EstimatorConfig) -> np.ndarray:
    """Forgetting-factor covariance recursion in rank-one update form.

    Equivalent to inverting forgetting * inv(cov) + outer(p, p) / utilization
    but carried out without any explicit inverse.  Raises when the result
    loses positive definiteness beyond tolerance.
    """
    y, denom = _gain_terms(cov_prev, baseline, cfg)
    cov = np.asarray(cov_prev, dtype=np.longdouble)
    updated = (cov - np.outer(y, y) / denom) / np.longdouble(cfg.forgetting)
    updated = (updated + updated.T) / 2
    min_eig = float(sym_eig3(updated)[0])
    if not min_eig > _MIN_EIG:
        raise CovarianceDegenerateError(min_eig)
    return updated


def step(
    state: EstimatorState,
    projection: float,
    baseline: np.ndarray,
    prediction: np.ndarray,
    cfg: EstimatorConfig,
) -> EstimatorState:
    """One estimator update.

    The innovation compares the measured projection with the projection of
    the propagated estimate (previous center plus previous displacement
    guess).  `prediction` is this step's displacement guess; it is stored
    and only enters the estimate at the next step.
    """
    p = as_vec3(baseline, "baseline")
    pred = as_vec3(prediction, "prediction")
    propagated = state.center + state.prev_prediction
    innovation = float(projection) - float(p @ propagated)
    y, denom = _gain_terms(state.covariance, p, cfg)
    k_gain = np.asarray(y / denom, dtype=np.float64)
    cov_new = covariance_update(state.covariance, p, cfg)
    center_new = propagated + k_gain * innovation
    return replace(
        state,
        center=center_new,
        covariance=cov_new,
        prev_prediction=pred,
        prev_center=state.center,
        last_gain=k_gain,
        last_innovation=innovation,
    )


def estimation_error(state: EstimatorState, true_center: np.ndarray) -> np.ndarray:
    """True center minus estimate."""
    return as_vec3(true_center, "true center") - state.center
