"""Ground-truth world: two agents, M scripted targets, range-only sensing.

The world is the only module that sees true target positions.  Everything
downstream works from the MeasurementFrame it emits: per-step agent
displacements and agent-to-target distances.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .vec import as_vec3

_SPEED_TOL = 1e-12


@dataclass(frozen=True)
class NoiseConfig:
    """Measurement noise switches; everything defaults to off."""

    enabled: bool = False
    distance_std: float = 0.0
    displacement_std: float = 0.0

    def __post_init__(self):
        if self.distance_std < 0 or self.displacement_std < 0:
            raise ConfigError("noise standard deviations must be >= 0")

    @property
    def active(self) -> bool:
        return self.enabled and (self.distance_std > 0 or self.displacement_std > 0)


class TargetScript:
    """Deterministic motion law for one target, queried by step index.

    displacement(k) returns the step the target takes between k and k+1.
    Scripts are pure functions of k so re-querying a step is safe.
    """

    kind = "stationary"

    def __init__(self, max_speed: float = 0.0):
        if max_speed < 0:
            raise ConfigError("max_speed must be >= 0")
        self.max_speed = float(max_speed)

    def displacement(self, k: int) -> np.ndarray:
        return np.zeros(3)

    def to_dict(self) -> dict:
        return {"kind": self.kind}


class StationaryScript(TargetScript):
    kind = "stationary"


class LinearScript(TargetScript):
    """Constant velocity in m/step."""

    kind = "linear"

    def __init__(self, velocity):
        self.velocity = as_vec3(velocity, "linear script velocity")
        super().__init__(max_speed=float(np.linalg.norm(self.velocity)))

    def displacement(self, k: int) -> np.ndarray:
        return self.velocity.copy()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "velocity": list(self.velocity)}


class SinusoidalScript(TargetScript):
    """Oscillation a*sin(f*k + phase) along a fixed axis; f in rad/step."""

    kind = "sinusoidal"

    def __init__(self, axis, amplitude: float, frequency: float, phase: float = 0.0):
        self.axis = as_vec3(axis, "sinusoidal script axis")
        n = float(np.linalg.norm(self.axis))
        if n == 0:
            raise ConfigError("sinusoidal script axis must be nonzero")
        self.axis = self.axis / n
        if amplitude < 0 or frequency <= 0:
            raise ConfigError("sinusoidal script needs amplitude >= 0 and frequency > 0")
        self.amplitude = float(amplitude)
        self.frequency = float(frequency)
        self.phase = float(phase)
        super().__init__(max_speed=self.amplitude * self.frequency)

    def _offset(self, k: int) -> float:
        return self.amplitude * np.sin(self.frequency * k + self.phase)

    def displacement(self, k: int) -> np.ndarray:
        return (self._offset(k + 1) - self._offset(k)) * self.axis

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "axis": list(self.axis),
            "amplitude": self.amplitude,
            "frequency": self.frequency,
            "phase": self.phase,
        }


class WaypointScript(TargetScript):
    """Piecewise-linear motion through waypoints at a fixed speed.

    Needs the target's start position to resolve the path; the per-step
    positions are memoized so displacement(k) is a pure function of k.
    """

    kind = "waypoints"

    def __init__(self, start, points, speed: float):
        if speed <= 0:
            raise ConfigError("waypoint script speed must be > 0")
        pts = [as_vec3(p, "waypoint") for p in points]
        if not pts:
            raise ConfigError("waypoint script needs at least one waypoint")
        self.points = pts
        self.speed = float(speed)
        self._positions = [as_vec3(start, "waypoint script start")]
        self._leg = 0
        super().__init__(max_speed=self.speed)

    def _extend_to(self, k: int) -> None:
        while len(self._positions) <= k:
            pos = self._positions[-1]
            if self._leg >= len(self.points):
                self._positions.append(pos.copy())
                continue
            gap = self.points[self._leg] - pos
            dist = float(np.linalg.norm(gap))
            if dist <= self.speed:
                self._positions.append(self.points[self._leg].copy())
                self._leg += 1
            else:
                self._positions.append(pos + gap * (self.speed / dist))

    def displacement(self, k: int) -> np.ndarray:
        self._extend_to(k + 1)
        return self._positions[k + 1] - self._positions[k]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "points": [list(p) for p in self.points],
            "speed": self.speed,
        }


@dataclass(frozen=True)
class WorldState:
    """Snapshot of truth at step k."""

    k: int
    agents: np.ndarray  # (2, 3)
    targets: np.ndarray  # (M, 3)
    weights: np.ndarray  # (M,) convex combination defining the center

    def __post_init__(self):
        agents = np.asarray(self.agents, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if agents.shape != (2, 3):
            raise ConfigError(f"agents must have shape (2, 3), got {agents.shape}")
        if targets.ndim != 2 or targets.shape[0] < 1 or targets.shape[1] != 3:
            raise ConfigError(f"targets must have shape (M, 3) with M >= 1, got {targets.shape}")
        if weights.shape != (targets.shape[0],):
            raise ConfigError("one center weight per target required")
        if not (np.all(np.isfinite(agents)) and np.all(np.isfinite(targets))):
            raise ConfigError("positions must be finite")
        if np.any(weights <= 0) or np.any(weights > 1):
            raise ConfigError("center weights must lie in (0, 1]")
        if abs(float(weights.sum()) - 1.0) > 1e-12:
            raise ConfigError(f"center weights must sum to 1, got {weights.sum()!r}")
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "weights", weights)

    @property
    def num_targets(self) -> int:
        return self.targets.shape[0]


@dataclass(frozen=True)
class MeasurementFrame:
    """What the agents can actually sense at one step."""

    displacements: np.ndarray  # (2, 3) own displacement over the last step
    distances: np.ndarray  # (2, M) agent-to-target ranges
    baseline_distance: float  # inter-agent range
    noise_seed: int = 0

    def __post_init__(self):
        d = np.asarray(self.displacements, dtype=np.float64)
        r = np.asarray(self.distances, dtype=np.float64)
        if d.shape != (2, 3) or r.ndim != 2 or r.shape[0] != 2:
            raise ConfigError("malformed measurement frame")
        object.__setattr__(self, "displacements", d)
        object.__setattr__(self, "distances", r)


def true_center(state: WorldState) -> np.ndarray:
    """Weighted target center the agents are trying to encircle."""
    return state.weights @ state.targets


def step_agent(state: WorldState, index: int, control: np.ndarray) -> WorldState:
    """Apply one control displacement to an agent; does not advance k."""
    u = np.asarray(control, dtype=np.float64)
    if u.shape != (3,) or not np.all(np.isfinite(u)):
        raise ConfigError(f"control for agent {index} must be a finite 3-vector")
    agents = state.agents.copy()
    agents[index] = agents[index] + u
    return replace(state, agents=agents)


def step_targets(state: WorldState, scripts) -> tuple[WorldState, np.ndarray]:
    """Advance every target one step and k by one.

    Returns the new state and the center displacement (weighted sum of the
    individual target displacements).  Each script is checked against its
    declared speed bound.
    """
    if len(scripts) != state.num_targets:
        raise ConfigError("one script per target required")
    targets = state.targets.copy()
    center_disp = np.zeros(3)
    for j, script in enumerate(scripts):
        h = np.asarray(script.displacement(state.k), dtype=np.float64)
        if h.shape != (3,) or not np.all(np.isfinite(h)):
            raise ConfigError(f"script {j} emitted a malformed displacement at k={state.k}")
        speed = float(np.linalg.norm(h))
        if speed > script.max_speed + _SPEED_TOL:
            raise ConfigError(
                f"script {j} emitted speed {speed:.6g} above its bound "
                f"{script.max_speed:.6g} at k={state.k}"
            )
        targets[j] = targets[j] + h
        center_disp = center_disp + state.weights[j] * h
    return replace(state, k=state.k + 1, targets=targets), center_disp


def sense(
    state: WorldState,
    prev_agents: np.ndarray,
    noise: NoiseConfig | None = None,
    seed: int = 0,
) -> MeasurementFrame:
    """Build the measurement frame at the current step.

    Displacements are current minus previous agent positions (zero on the
    first step when prev equals current).  Distances are Euclidean ranges.
    Gaussian noise, when enabled, is drawn from a stream keyed by
    (seed, k) so a frame never depends on call history.
    """
    prev = np.asarray(prev_agents, dtype=np.float64)
    if prev.shape != (2, 3):
        raise ConfigError("prev_agents must have shape (2, 3)")
    disp = state.agents - prev
    diffs = state.agents[:, None, :] - state.targets[None, :, :]
    dists = np.linalg.norm(diffs, axis=2)
    baseline = float(np.linalg.norm(state.agents[0] - state.agents[1]))
    if noise is not None and noise.active:
        rng = np.random.default_rng((seed, state.k))
        if noise.displacement_std > 0:
            disp = disp + rng.normal(0.0, noise.displacement_std, size=disp.shape)
        if noise.distance_std > 0:
            dists = np.abs(dists + rng.normal(0.0, noise.distance_std, size=dists.shape))
            baseline = abs(baseline + float(rng.normal(0.0, noise.distance_std)))
    return MeasurementFrame(
        displacements=disp,
        distances=dists,
        baseline_distance=baseline,
        noise_seed=seed,
    )
