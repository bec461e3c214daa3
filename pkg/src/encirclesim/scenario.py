"""Scenario documents: strict JSON schema, defaults, overrides.

A scenario fully determines a run.  Parsing is strict: unknown keys are
rejected anywhere in the document so typos fail loudly instead of being
silently ignored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .controller import ControllerConfig
from .errors import ConfigError, ScenarioParseError
from .estimator import EstimatorConfig
from .fwnn import FwnnConfig
from .vec import as_vec3
from .world import (
    LinearScript,
    NoiseConfig,
    SinusoidalScript,
    StationaryScript,
    TargetScript,
    WaypointScript,
    WorldState,
)

MODES = ("full-loop", "known-displacement")

_TOP_KEYS = {"world", "targets", "fwnn", "estimator", "controller", "run"}
_WORLD_KEYS = {"agents", "targets", "center_weights", "initial_center_estimate"}
_FWNN_KEYS = {
    "rules",
    "set_size",
    "spread",
    "input_offset",
    "input_spacing",
    "learning_rate",
    "wavelet",
    "excitation_bound",
}
_ESTIMATOR_KEYS = {"forgetting", "utilization", "initial_covariance"}
_CONTROLLER_KEYS = {"feedback_gain", "frequency", "margin", "rounding_step"}
_RUN_KEYS = {"steps", "mode", "seed", "noise", "post_transient_fraction"}
_NOISE_KEYS = {"enabled", "distance_std", "displacement_std"}
_SCRIPT_KEYS = {
    "stationary": {"kind"},
    "linear": {"kind", "velocity"},
    "sinusoidal": {"kind", "axis", "amplitude", "frequency", "phase"},
    "waypoints": {"kind", "points", "speed"},
}


@dataclass(frozen=True)
class Scenario:
    """Parsed, validated run description."""

    agents: np.ndarray
    targets: np.ndarray
    center_weights: np.ndarray
    initial_center_estimate: np.ndarray
    scripts: tuple
    fwnn: FwnnConfig
    estimator: EstimatorConfig
    controller: ControllerConfig
    steps: int
    mode: str
    seed: int
    noise: NoiseConfig
    post_transient_fraction: float

    @property
    def num_targets(self) -> int:
        return self.targets.shape[0]

    def initial_world(self) -> WorldState:
        return WorldState(
            k=0,
            agents=self.agents.copy(),
            targets=self.targets.copy(),
            weights=self.center_weights.copy(),
        )

    def to_dict(self) -> dict:
        """Normalized document with every default made explicit."""
        cov = np.asarray(self.estimator.initial_covariance)
        if np.allclose(cov, cov[0, 0] * np.eye(3), atol=0.0):
            cov_out = float(cov[0, 0])
        else:
            cov_out = [list(map(float, row)) for row in cov]
        wavelet = (
            "paper-default"
            if (
                self.fwnn.wavelet_scale == 0.001
                and self.fwnn.wavelet_shift == 0.001
            )
            else {"scale": self.fwnn.wavelet_scale, "shift": self.fwnn.wavelet_shift}
        )
        fwnn = {
            "rules": self.fwnn.rules,
            "set_size": self.fwnn.set_size,
            "spread": self.fwnn.spread,
            "input_offset": self.fwnn.input_offset,
            "input_spacing": self.fwnn.input_spacing,
            "learning_rate": self.fwnn.learning_rate,
            "wavelet": wavelet,
        }
        if self.fwnn.excitation_bound is not None:
            fwnn["excitation_bound"] = self.fwnn.excitation_bound
        return {
            "world": {
                "agents": [list(map(float, a)) for a in self.agents],
                "targets": [list(map(float, t)) for t in self.targets],
                "center_weights": list(map(float, self.center_weights)),
                "initial_center_estimate": list(map(float, self.initial_center_estimate)),
            },
            "targets": [s.to_dict() for s in self.scripts],
            "fwnn": fwnn,
            "estimator": {
                "forgetting": self.estimator.forgetting,
                "utilization": self.estimator.utilization,
                "initial_covariance": cov_out,
            },
            "controller": {
                "feedback_gain": self.controller.feedback_gain,
                "frequency": self.controller.frequency,
                "margin": self.controller.margin,
                "rounding_step": self.controller.rounding_step,
            },
            "run": {
                "steps": self.steps,
                "mode": self.mode,
                "seed": self.seed,
                "noise": {
                    "enabled": self.noise.enabled,
                    "distance_std": self.noise.distance_std,
                    "displacement_std": self.noise.displacement_std,
                },
                "post_transient_fraction": self.post_transient_fraction,
            },
        }


def _require_dict(node, where: str) -> dict:
    if not isinstance(node, dict):
        raise ScenarioParseError(f"{where} must be an object")
    return node


def _check_keys(node: dict, allowed: set, required: set, where: str) -> None:
    unknown = set(node) - allowed
    if unknown:
        raise ScenarioParseError(f"unknown key(s) in {where}: {sorted(unknown)}")
    missing = required - set(node)
    if missing:
        raise ScenarioParseError(f"missing key(s) in {where}: {sorted(missing)}")


def _number(node, where: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ScenarioParseError(f"{where} must be a number")
    return float(node)


def _integer(node, where: str) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        raise ScenarioParseError(f"{where} must be an integer")
    return int(node)


def _parse_script(node, start, where: str) -> TargetScript:
    node = _require_dict(node, where)
    kind = node.get("kind")
    if kind not in _SCRIPT_KEYS:
        raise ScenarioParseError(f"{where}: unknown script kind {kind!r}")
    _check_keys(node, _SCRIPT_KEYS[kind], _SCRIPT_KEYS[kind] - {"phase"}, where)
    try:
        if kind == "stationary":
            return StationaryScript()
        if kind == "linear":
            return LinearScript(node["velocity"])
        if kind == "sinusoidal":
            return SinusoidalScript(
                axis=node["axis"],
                amplitude=_number(node["amplitude"], f"{where}.amplitude"),
                frequency=_number(node["frequency"], f"{where}.frequency"),
                phase=_number(node.get("phase", 0.0), f"{where}.phase"),
            )
        return WaypointScript(
            start=start,
            points=node["points"],
            speed=_number(node["speed"], f"{where}.speed"),
        )
    except (ConfigError, ValueError, TypeError) as exc:
        raise ScenarioParseError(f"{where}: {exc}") from exc


def parse_scenario(doc) -> Scenario:
    """Validate a raw document and build the typed scenario."""
    doc = _require_dict(doc, "scenario")
    _check_keys(doc, _TOP_KEYS, _TOP_KEYS, "scenario")

    world = _require_dict(doc["world"], "world")
    _check_keys(world, _WORLD_KEYS, _WORLD_KEYS, "world")
    try:
        agents = np.array([as_vec3(a, "agent") for a in world["agents"]])
        targets = np.array([as_vec3(t, "target") for t in world["targets"]])
        if agents.shape != (2, 3):
            raise ConfigError("exactly two agents required")
        weights = np.asarray(world["center_weights"], dtype=np.float64)
        center0 = as_vec3(world["initial_center_estimate"], "initial_center_estimate")
        # reuse the world-state invariants for the static fields
        WorldState(k=0, agents=agents, targets=targets, weights=weights)
    except (ConfigError, ValueError, TypeError) as exc:
        raise ScenarioParseError(f"world: {exc}") from exc

    scripts_node = doc["targets"]
    if not isinstance(scripts_node, list) or len(scripts_node) != targets.shape[0]:
        raise ScenarioParseError("targets must list exactly one script per target")
    scripts = tuple(
        _parse_script(node, targets[j], f"targets[{j}]")
        for j, node in enumerate(scripts_node)
    )

    fw = _require_dict(doc["fwnn"], "fwnn")
    _check_keys(fw, _FWNN_KEYS, _FWNN_KEYS - {"wavelet", "excitation_bound"}, "fwnn")
    wavelet = fw.get("wavelet", "paper-default")
    if wavelet == "paper-default":
        scale, shift = 0.001, 0.001
    elif isinstance(wavelet, dict):
        _check_keys(wavelet, {"scale", "shift"}, {"scale", "shift"}, "fwnn.wavelet")
        scale = _number(wavelet["scale"], "fwnn.wavelet.scale")
        shift = _number(wavelet["shift"], "fwnn.wavelet.shift")
    else:
        raise ScenarioParseError(f"fwnn.wavelet must be 'paper-default' or an object, got {wavelet!r}")
    bound = fw.get("excitation_bound")
    try:
        fwnn_cfg = FwnnConfig(
            rules=_integer(fw["rules"], "fwnn.rules"),
            set_size=_integer(fw["set_size"], "fwnn.set_size"),
            spread=_number(fw["spread"], "fwnn.spread"),
            input_offset=_number(fw["input_offset"], "fwnn.input_offset"),
            input_spacing=_number(fw["input_spacing"], "fwnn.input_spacing"),
            learning_rate=_number(fw["learning_rate"], "fwnn.learning_rate"),
            wavelet_scale=scale,
            wavelet_shift=shift,
            excitation_bound=None if bound is None else _number(bound, "fwnn.excitation_bound"),
        )
    except ConfigError as exc:
        raise ScenarioParseError(f"fwnn: {exc}") from exc

    est = _require_dict(doc["estimator"], "estimator")
    _check_keys(est, _ESTIMATOR_KEYS, _ESTIMATOR_KEYS, "estimator")
    try:
        est_cfg = EstimatorConfig(
            forgetting=_number(est["forgetting"], "estimator.forgetting"),
            utilization=_number(est["utilization"], "estimator.utilization"),
            initial_covariance=est["initial_covariance"],
        )
    except (ConfigError, ValueError, TypeError) as exc:
        raise ScenarioParseError(f"estimator: {exc}") from exc

    ctrl = _require_dict(doc["controller"], "controller")
    _check_keys(ctrl, _CONTROLLER_KEYS, _CONTROLLER_KEYS, "controller")
    try:
        ctrl_cfg = ControllerConfig(
            feedback_gain=_number(ctrl["feedback_gain"], "controller.feedback_gain"),
            frequency=_number(ctrl["frequency"], "controller.frequency"),
            margin=_number(ctrl["margin"], "controller.margin"),
            rounding_step=_number(ctrl["rounding_step"], "controller.rounding_step"),
        )
    except ConfigError as exc:
        raise ScenarioParseError(f"controller: {exc}") from exc

    run = _require_dict(doc["run"], "run")
    _check_keys(run, _RUN_KEYS, {"steps", "mode"}, "run")
    steps = _integer(run["steps"], "run.steps")
    if steps < 0:
        raise ScenarioParseError("run.steps must be >= 0")
    mode = run["mode"]
    if mode not in MODES:
        raise ScenarioParseError(f"run.mode must be one of {MODES}, got {mode!r}")
    seed = _integer(run.get("seed", 0), "run.seed")
    noise_node = run.get("noise", {"enabled": False, "distance_std": 0.0, "displacement_std": 0.0})
    noise_node = _require_dict(noise_node, "run.noise")
    _check_keys(noise_node, _NOISE_KEYS, set(), "run.noise")
    if not isinstance(noise_node.get("enabled", False), bool):
        raise ScenarioParseError("run.noise.enabled must be a boolean")
    try:
        noise = NoiseConfig(
            enabled=noise_node.get("enabled", False),
            distance_std=_number(noise_node.get("distance_std", 0.0), "run.noise.distance_std"),
            displacement_std=_number(
                noise_node.get("displacement_std", 0.0), "run.noise.displacement_std"
            ),
        )
    except ConfigError as exc:
        raise ScenarioParseError(f"run.noise: {exc}") from exc
    fraction = _number(run.get("post_transient_fraction", 0.5), "run.post_transient_fraction")
    if not 0.0 < fraction < 1.0:
        raise ScenarioParseError("run.post_transient_fraction must lie in (0, 1)")

    return Scenario(
        agents=agents,
        targets=targets,
        center_weights=weights,
        initial_center_estimate=center0,
        scripts=scripts,
        fwnn=fwnn_cfg,
        estimator=est_cfg,
        controller=ctrl_cfg,
        steps=steps,
        mode=mode,
        seed=seed,
        noise=noise,
        post_transient_fraction=fraction,
    )


def load_scenario(path) -> Scenario:
    """Read and parse a scenario file; 'paper-sim' loads the bundled one."""
    if str(path) == "paper-sim":
        return parse_scenario(paper_sim())
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {p}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(
            f"{p}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_scenario(doc)


def dump_scenario(scenario: Scenario) -> str:
    """Canonical JSON serialization of the normalized document."""
    return json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n"


def _parse_override_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(doc: dict, assignment: str) -> dict:
    """Apply one 'dotted.path=value' assignment to a raw document.

    The value is parsed as JSON when possible, otherwise taken as a bare
    string.  The resulting document still has to pass the schema, so an
    override cannot introduce unknown keys.
    """
    if "=" not in assignment:
        raise ScenarioParseError(f"override {assignment!r} must look like path=value")
    path, raw_value = assignment.split("=", 1)
    parts = [part for part in path.strip().split(".") if part]
    if not parts:
        raise ScenarioParseError(f"override {assignment!r} has an empty path")
    node = doc
    for part in parts[:-1]:
        if part.isdigit() and isinstance(node, list):
            idx = int(part)
            if idx >= len(node):
                raise ScenarioParseError(f"override path {path!r}: index {idx} out of range")
            node = node[idx]
            continue
        if not isinstance(node, dict) or part not in node:
            raise ScenarioParseError(f"override path {path!r}: no section {part!r}")
        node = node[part]
    leaf = parts[-1]
    value = _parse_override_value(raw_value)
    if isinstance(node, list):
        if not leaf.isdigit() or int(leaf) >= len(node):
            raise ScenarioParseError(f"override path {path!r}: bad list index {leaf!r}")
        node[int(leaf)] = value
    elif isinstance(node, dict):
        node[leaf] = value
    else:
        raise ScenarioParseError(f"override path {path!r} does not address a container")
    return doc


def paper_sim() -> dict:
    """Bundled reference scenario: three drifting targets, planar start."""
    return {
        "world": {
            "agents": [[0.0, 3.0, 0.5], [0.0, 6.0, 0.5]],
            "targets": [[1.0, 0.0, 0.5], [2.0, 0.0, 0.5], [3.0, 0.0, 0.5]],
            "center_weights": [1 / 3, 1 / 3, 1 / 3],
            "initial_center_estimate": [0.0, 0.0, 0.5],
        },
        "targets": [
            {
                "kind": "sinusoidal",
                "axis": [0.0, 1.0, 0.0],
                "amplitude": 0.06,
                "frequency": 2 * math.pi / 200,
                "phase": 0.0,
            },
            {"kind": "linear", "velocity": [0.0006, 0.0, 0.0]},
            {
                "kind": "sinusoidal",
                "axis": [1.0, 0.0, 0.0],
                "amplitude": 0.06,
                "frequency": 2 * math.pi / 160,
                "phase": math.pi / 3,
            },
        ],
        "fwnn": {
            "rules": 1,
            "set_size": 5,
            "spread": 128.0,
            "input_offset": 9.0,
            "input_spacing": 3.0,
            "learning_rate": 0.01,
            "wavelet": "paper-default",
            "excitation_bound": 5.8726,
        },
        "estimator": {
            "forgetting": 0.1,
            "utilization": 0.95,
            "initial_covariance": 100.0,
        },
        "controller": {
            "feedback_gain": -0.85,
            "frequency": 1 / 24,
            "margin": 0.8,
            "rounding_step": 1.0,
        },
        "run": {
            "steps": 400,
            "mode": "full-loop",
            "seed": 2024,
            "noise": {"enabled": False, "distance_std": 0.0, "displacement_std": 0.0},
            "post_transient_fraction": 0.5,
        },
    }
