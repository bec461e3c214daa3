"""Anti-synchronized encirclement control around the estimated center.

Two agents hold opposite ends of a rotating diameter: agent 1 tracks the
negated preset trajectory point, agent 2 the point itself.  The orbit
radius is recomputed every step from ranges projected into the estimated
center's horizontal plane, then quantized so it only moves in discrete
jumps with a clearance margin added.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GeometryDegenerateError, InvalidControlError
from .estimator import EstimatorConfig
from .fwnn import FwnnConfig
from .vec import as_vec3
from .world import MeasurementFrame

_ACOS_TOL = 1e-9
_PROJECTION_TOL = 1e-9
_TINY = 1e-15

FEEDBACK_GAIN_LOWER = -1.0 / math.sqrt(3.0) - 1.0
FEEDBACK_GAIN_UPPER = 1.0 / math.sqrt(3.0) - 1.0
FORGETTING_UPPER = 0.5
MAX_ROTATION_DEG = 15.0


@dataclass(frozen=True)
class ControllerConfig:
    """Gains and orbit shaping constants.

    feedback_gain: proportional gain on the tracking error (negative in
        the stable range).
    frequency: orbit progression; the diameter turns frequency*180
        degrees per step, capped so one step never turns 15 degrees.
    margin: clearance added on top of the quantized radius.
    rounding_step: quantization granularity of the radius.
    """

    feedback_gain: float = -0.85
    frequency: float = 1.0 / 24.0
    margin: float = 0.8
    rounding_step: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.feedback_gain):
            raise ConfigError("feedback_gain must be finite")
        if not 0 < self.frequency < 1:
            raise ConfigError("frequency must lie in (0, 1)")
        if self.frequency * 180.0 >= MAX_ROTATION_DEG:
            raise ConfigError(
                f"frequency {self.frequency!r} turns >= {MAX_ROTATION_DEG} deg per step"
            )
        if not self.margin > 0:
            raise ConfigError("margin must be > 0")
        if not self.rounding_step > 0:
            raise ConfigError("rounding_step must be > 0")


def elevation_angle(agent1_pos: np.ndarray, center_estimate: np.ndarray, flags=None) -> float:
    """Tilt of agent 1 above the estimated center's horizontal plane."""
    a = as_vec3(agent1_pos, "agent 1 position")
    c = as_vec3(center_estimate, "center estimate")
    dz = a[2] - c[2]
    planar = math.hypot(a[0] - c[0], a[1] - c[1])
    if planar == 0.0 and dz == 0.0:
        if flags is not None:
            flags.append("elevation-degenerate")
        return 0.0
    return math.atan2(dz, planar)


def preset_trajectory(radius_value: float, k: int, cfg: ControllerConfig, elevation: float) -> np.ndarray:
    """Point on the rotating orbit at step k, tilted by the elevation."""
    angle = cfg.frequency * k * math.pi
    s, c = math.sin(angle), math.cos(angle)
    return np.array(
        [
            radius_value * s * math.cos(elevation),
            radius_value * c,
            radius_value * c * math.sin(elevation),
        ]
    )


def _law_of_cosines_angle(adjacent1: float, adjacent2: float, opposite: float) -> float:
    """Angle opposite the third side; zero when a wedge side vanishes."""
    denom = 2.0 * adjacent1 * adjacent2
    if denom < _TINY:
        return 0.0
    arg = (adjacent1 * adjacent1 + adjacent2 * adjacent2 - opposite * opposite) / denom
    if abs(arg) > 1.0 + _ACOS_TOL:
        raise GeometryDegenerateError(
            f"law-of-cosines argument {arg!r} outside [-1, 1] beyond tolerance"
        )
    return math.acos(min(1.0, max(-1.0, arg)))


def _project_range(distance: float, dz: float, flags=None) -> float:
    """Drop a range into the horizontal plane given a height offset."""
    squared = distance * distance - dz * dz
    if squared < -_PROJECTION_TOL:
        if flags is not None:
            flags.append("projection-clamped")
        return 0.0
    return math.sqrt(max(squared, 0.0))


def projected_center_distances(
    meas: MeasurementFrame,
    center_estimate: np.ndarray,
    agent1_pos: np.ndarray,
    agent2_pos: np.ndarray,
    flags=None,
) -> np.ndarray:
    """Horizontal distance from the estimated center to each target.

    Built from ranges alone via two law-of-cosines wedges that share the
    projected inter-agent chord.  Target ranges are projected using agent
    2's height above the estimated center for both agents, matching the
    printed construction.  Exact when center and targets sit on the same
    side of the chord, which the converged orbit geometry guarantees.
    """
    c = as_vec3(center_estimate, "center estimate")
    x1 = as_vec3(agent1_pos, "agent 1 position")
    x2 = as_vec3(agent2_pos, "agent 2 position")
    chord = math.hypot(x1[0] - x2[0], x1[1] - x2[1])
    if chord < _TINY:
        raise GeometryDegenerateError("agents coincide in the horizontal plane")
    to_center_1 = math.hypot(x1[0] - c[0], x1[1] - c[1])
    to_center_2 = math.hypot(x2[0] - c[0], x2[1] - c[1])
    center_angle = _law_of_cosines_angle(to_center_2, chord, to_center_1)
    dz = x2[2] - c[2]
    dists = np.empty(meas.distances.shape[1])
    for j in range(meas.distances.shape[1]):
        range_1 = _project_range(float(meas.distances[0, j]), dz, flags)
        range_2 = _project_range(float(meas.distances[1, j]), dz, flags)
        target_angle = _law_of_cosines_angle(range_2, chord, range_1)
        wedge = center_angle - target_angle
        squared = (
            range_2 * range_2
            + to_center_2 * to_center_2
            - 2.0 * range_2 * to_center_2 * math.cos(wedge)
        )
        dists[j] = math.sqrt(max(squared, 0.0))
    return dists


def _round_half_up(value: float, step: float) -> float:
    return math.floor(value / step + 0.5) * step


def radius(
    meas: MeasurementFrame,
    center_estimate: np.ndarray,
    agent1_pos: np.ndarray,
    agent2_pos: np.ndarray,
    cfg: ControllerConfig,
    flags=None,
) -> float:
    """Orbit radius: quantized worst-case center-to-target distance plus margin."""
    dists = projected_center_distances(meas, center_estimate, agent1_pos, agent2_pos, flags)
    return _round_half_up(float(np.max(dists)), cfg.rounding_step) + cfg.margin


def control(
    agent_index: int,
    agent_pos: np.ndarray,
    center_estimate: np.ndarray,
    trajectory_point: np.ndarray,
    prediction: np.ndarray,
    cfg: ControllerConfig,
) -> np.ndarray:
    """Displacement command for one agent.

    Agent 1 regulates its center-relative position onto the negated
    trajectory point, agent 2 onto the point itself; both feed the center
    displacement guess forward.
    """
    if agent_index not in (1, 2):
        raise ConfigError("agent_index must be 1 or 2")
    pos = as_vec3(agent_pos, "agent position")
    c = as_vec3(center_estimate, "center estimate")
    sign = 1.0 if agent_index == 1 else -1.0
    u = cfg.feedback_gain * ((pos - c) + sign * np.asarray(trajectory_point)) + np.asarray(
        prediction
    )
    if not np.all(np.isfinite(u)):
        raise InvalidControlError(f"control for agent {agent_index} is non-finite: {u}")
    return u


@dataclass(frozen=True)
class GainCondition:
    """One validated stability gate."""

    name: str
    value: float
    lower: float
    upper: float
    upper_inclusive: bool
    passed: bool
    margin: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "lower": self.lower,
            "upper": self.upper,
            "upper_inclusive": self.upper_inclusive,
            "passed": self.passed,
            "margin": self.margin,
        }

    def format_line(self) -> str:
        closer = "]" if self.upper_inclusive else ")"
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{self.name}: {verdict} value={self.value:.6g} "
            f"range=({self.lower:.6g}, {self.upper:.6g}{closer} margin={self.margin:.6g}"
        )


@dataclass(frozen=True)
class GainReport:
    """Outcome of the three convergence gates."""

    conditions: tuple
    excitation_bound: float

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def to_dict(self) -> dict:
        return {
            "excitation_bound": self.excitation_bound,
            "all_passed": self.all_passed,
            "conditions": [c.to_dict() for c in self.conditions],
        }

    def format_text(self) -> str:
        lines = [c.format_line() for c in self.conditions]
        lines.append(f"overall: {'PASS' if self.all_passed else 'FAIL'}")
        return "\n".join(lines)


def _condition(name, value, lower, upper, upper_inclusive) -> GainCondition:
    if upper_inclusive:
        passed = lower < value <= upper
    else:
        passed = lower < value < upper
    margin = min(value - lower, upper - value)
    return GainCondition(
        name=name,
        value=float(value),
        lower=float(lower),
        upper=float(upper),
        upper_inclusive=upper_inclusive,
        passed=bool(passed),
        margin=float(margin),
    )


def validate_gains(
    ctrl: ControllerConfig,
    est: EstimatorConfig,
    net: FwnnConfig,
    excitation_bound: float | None = None,
) -> GainReport:
    """Check the adaptation, forgetting and feedback gates.

    The learning-rate gate needs a bound on the squared baseline
    excitation; it is taken from the argument or from the network config.
    """
    bound = excitation_bound if excitation_bound is not None else net.excitation_bound
    if bound is None or not bound > 0:
        raise ConfigError("a positive excitation bound is required to validate gains")
    conditions = (
        _condition("learning-rate gate", net.learning_rate, 0.0, 2.0 / bound, False),
        _condition("forgetting gate", est.forgetting, 0.0, FORGETTING_UPPER, False),
        _condition(
            "feedback-gain gate",
            ctrl.feedback_gain,
            FEEDBACK_GAIN_LOWER,
            FEEDBACK_GAIN_UPPER,
            True,
        ),
    )
    return GainReport(conditions=conditions, excitation_bound=float(bound))
