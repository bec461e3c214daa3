"""Closed-loop simulation: sense, estimate, control, actuate, record.

One iteration per step k:
  1. sense ranges and own displacements at the current positions
  2. dead-reckon own positions from accumulated displacements
  3. build the baseline-projection output from ranges
  4. adapt the displacement predictor and produce this step's guess
     (known-displacement mode substitutes the true center displacement)
  5. estimator update
  6. orbit radius, elevation, trajectory point
  7. control commands for both agents
  8. actuate agents, then advance targets
  9. record truth-based diagnostics taken before actuation

Nothing in stages 3-7 reads true target positions; they only see the
measurement frame and the estimates.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .controller import (
    ControllerConfig,
    GainReport,
    control,
    elevation_angle,
    preset_trajectory,
    radius,
    validate_gains,
)
from .errors import (
    AdaptationDivergedError,
    ConfigError,
    CovarianceDegenerateError,
    DegenerateBasisError,
    EncircleError,
    GeometryDegenerateError,
    InvalidControlError,
)
from .estimator import EstimatorState, baseline_projection, center_projection
from .estimator import step as estimator_step
from .fwnn import FwnnState, predict, update_weights
from .scenario import Scenario
from .vec import angle_between_deg, sym_eig3
from .world import sense, step_agent, step_targets, true_center

DIVERGENCE_THRESHOLD = 1e6

_FLOAT64_MAX = float(np.finfo(np.float64).max)
_PLANAR_TOL = 1e-9

CONVERGENCE_THRESHOLDS = {
    "sync_error": 0.5,
    "tracking_error_1": 0.5,
    "tracking_error_2": 0.5,
    "center_error": 0.05,
    "prediction_error": 0.05,
}

_ABORT_FLAGS = {
    DegenerateBasisError: "degenerate-basis",
    AdaptationDivergedError: "adaptation-diverged",
    CovarianceDegenerateError: "covariance-degenerate",
    GeometryDegenerateError: "geometry-degenerate",
    InvalidControlError: "invalid-control",
    ConfigError: "config-violation",
}


@dataclass(frozen=True)
class StepRecord:
    """Everything recorded about one step, truth taken before actuation."""

    k: int
    agents: np.ndarray
    targets: np.ndarray
    center: np.ndarray
    center_estimate: np.ndarray
    prediction: np.ndarray
    radius: float
    trajectory_point: np.ndarray
    control1: np.ndarray
    control2: np.ndarray
    sync_error: np.ndarray
    tracking_error_1: np.ndarray
    tracking_error_2: np.ndarray
    center_error: np.ndarray
    fwnn_residual: float
    covariance_eigs: np.ndarray
    min_target_distance: float
    agent_distance: float
    antipodal_deg: float


@dataclass
class RunResult:
    """Trace plus run-level reports."""

    scenario: Scenario
    records: list
    report: GainReport
    abort: dict | None
    flags: dict
    final_estimator: EstimatorState
    final_fwnn: FwnnState
    debug: list | None = None

    @property
    def aborted(self) -> bool:
        return self.abort is not None


def default_excitation_bound(scenario: Scenario) -> float:
    """Fallback excitation bound when the scenario does not supply one.

    Uses the larger of the initial baseline length and the steady orbit
    diameter scaled by the closed-loop contraction, squared.  Only valid
    when the feedback loop contracts; otherwise the initial baseline is
    the only finite piece of information available.
    """
    world = scenario.initial_world()
    baseline0 = float(np.linalg.norm(world.agents[0] - world.agents[1]))
    meas = sense(world, world.agents)
    r0 = radius(
        meas,
        scenario.initial_center_estimate,
        world.agents[0],
        world.agents[1],
        scenario.controller,
    )
    beta = scenario.controller.feedback_gain
    contraction = abs(1.0 + beta)
    candidate = baseline0
    if contraction < 1.0:
        candidate = max(candidate, 2.0 * abs(beta) * r0 / (1.0 - contraction))
    return candidate * candidate


def gain_report(scenario: Scenario) -> GainReport:
    """Validate the stability gates, deriving the excitation bound if needed."""
    bound = scenario.fwnn.excitation_bound
    if bound is None:
        bound = default_excitation_bound(scenario)
    return validate_gains(scenario.controller, scenario.estimator, scenario.fwnn, bound)


def speed_margin(scenario: Scenario) -> dict:
    """Advisory check that the agents can out-pace the scripted targets.

    The agent side is the worst-case first-step command magnitude
    |beta| * (distance to the initial center estimate + initial orbit
    radius); the target side is the largest scripted per-step speed.
    The bound is conservative, so a shortfall is a warning, never an
    error.
    """
    world = scenario.initial_world()
    meas = sense(world, world.agents)
    r0 = radius(
        meas,
        scenario.initial_center_estimate,
        world.agents[0],
        world.agents[1],
        scenario.controller,
    )
    beta = abs(scenario.controller.feedback_gain)
    separation = max(
        float(np.linalg.norm(world.agents[0] - scenario.initial_center_estimate)),
        float(np.linalg.norm(world.agents[1] - scenario.initial_center_estimate)),
    )
    agent_bound = beta * (separation + r0)
    target_speed = max((s.max_speed for s in scenario.scripts), default=0.0)
    return {
        "agent_step_bound": float(agent_bound),
        "target_max_speed": float(target_speed),
        "ok": bool(agent_bound > target_speed),
    }


def _abort_flag(exc: EncircleError) -> str:
    for klass, flag in _ABORT_FLAGS.items():
        if isinstance(exc, klass):
            return flag
    return "module-error"


def _saturated_eigs(covariance: np.ndarray, flags: Counter) -> np.ndarray:
    eigs = sym_eig3(covariance)
    out = np.empty(3)
    for i, e in enumerate(eigs):
        if e > np.longdouble(_FLOAT64_MAX):
            out[i] = _FLOAT64_MAX
            flags["covariance-eig-saturated"] += 1
        else:
            out[i] = float(e)
    return out


def run(scenario: Scenario, collect_debug: bool = False) -> RunResult:
    """Simulate the scenario; on abort the partial trace is preserved."""
    report = gain_report(scenario)
    world = scenario.initial_world()
    est_state = EstimatorState.initial(scenario.estimator, scenario.initial_center_estimate)
    net_state = FwnnState.initial(scenario.fwnn)
    dead_reckoned = world.agents.copy()
    prev_agents = world.agents.copy()
    prev_projection = 0.0
    prev_baseline = np.zeros(3)
    known_mode = scenario.mode == "known-displacement"

    records: list[StepRecord] = []
    debug: list[dict] | None = [] if collect_debug else None
    flags: Counter = Counter()
    abort: dict | None = None

    for k in range(scenario.steps):
        try:
            meas = sense(world, prev_agents, scenario.noise, scenario.seed)
            dead_reckoned = dead_reckoned + meas.displacements
            prev_agents = world.agents.copy()
            x1, x2 = dead_reckoned[0], dead_reckoned[1]
            baseline = x1 - x2

            projections = [
                baseline_projection(meas.distances[0, j], meas.distances[1, j], x1, x2)
                for j in range(world.num_targets)
            ]
            projection = center_projection(projections, scenario.center_weights)

            residual = 0.0
            if known_mode:
                prediction = np.zeros(3)
                for j, script in enumerate(scenario.scripts):
                    prediction = prediction + scenario.center_weights[j] * script.displacement(
                        world.k
                    )
            elif k >= 1:
                delta_prev = projection - prev_projection
                try:
                    net_state = update_weights(
                        net_state, prev_baseline, delta_prev, scenario.fwnn
                    )
                except AdaptationDivergedError as exc:
                    exc.step = k
                    raise
                residual = net_state.last_residual
                net_state, prediction = predict(net_state, delta_prev, scenario.fwnn)
            else:
                prediction = np.zeros(3)

            cov_prev = np.array(est_state.covariance, copy=True)
            est_state = estimator_step(
                est_state, projection, baseline, prediction, scenario.estimator
            )
            if debug is not None:
                debug.append(
                    {
                        "k": k,
                        "baseline": baseline.copy(),
                        "gain": est_state.last_gain.copy(),
                        "covariance_prev": cov_prev,
                        "covariance": np.array(est_state.covariance, copy=True),
                    }
                )

            step_flags: list[str] = []
            elevation = elevation_angle(x1, est_state.center, step_flags)
            orbit_radius = radius(
                meas, est_state.center, x1, x2, scenario.controller, step_flags
            )
            for name in step_flags:
                flags[name] += 1
            trajectory_point = preset_trajectory(orbit_radius, k, scenario.controller, elevation)
            u1 = control(1, x1, est_state.center, trajectory_point, prediction, scenario.controller)
            u2 = control(2, x2, est_state.center, trajectory_point, prediction, scenario.controller)

            center = true_center(world)
            rel1 = world.agents[0] - center
            rel2 = world.agents[1] - center
            sync_error = rel1 + rel2
            tracking_1 = rel1 + trajectory_point
            tracking_2 = rel2 - trajectory_point
            center_error = center - est_state.center
            diffs = world.agents[:, None, :] - world.targets[None, :, :]
            min_target_distance = float(np.min(np.linalg.norm(diffs, axis=2)))
            records.append(
                StepRecord(
                    k=k,
                    agents=world.agents.copy(),
                    targets=world.targets.copy(),
                    center=center,
                    center_estimate=est_state.center.copy(),
                    prediction=np.asarray(prediction, dtype=np.float64).copy(),
                    radius=float(orbit_radius),
                    trajectory_point=trajectory_point,
                    control1=u1,
                    control2=u2,
                    sync_error=sync_error,
                    tracking_error_1=tracking_1,
                    tracking_error_2=tracking_2,
                    center_error=center_error,
                    fwnn_residual=float(residual),
                    covariance_eigs=_saturated_eigs(est_state.covariance, flags),
                    min_target_distance=min_target_distance,
                    agent_distance=float(meas.baseline_distance),
                    antipodal_deg=angle_between_deg(
                        x1 - est_state.center, x2 - est_state.center
                    ),
                )
            )

            world = step_agent(world, 0, u1)
            world = step_agent(world, 1, u2)
            world, _ = step_targets(world, scenario.scripts)
            prev_projection = projection
            prev_baseline = baseline

            worst = max(
                float(np.max(np.abs(sync_error))),
                float(np.max(np.abs(tracking_1))),
                float(np.max(np.abs(tracking_2))),
                float(np.max(np.abs(center_error))),
            )
            if not np.isfinite(worst) or worst > DIVERGENCE_THRESHOLD:
                abort = {"flag": "divergence", "step": k, "detail": f"error norm {worst:.6g}"}
                break
        except EncircleError as exc:
            abort = {"flag": _abort_flag(exc), "step": k, "detail": str(exc)}
            break

    return RunResult(
        scenario=scenario,
        records=records,
        report=report,
        abort=abort,
        flags=dict(flags),
        final_estimator=est_state,
        final_fwnn=net_state,
        debug=debug,
    )


# ---------------------------------------------------------------------------
# trace serialization

_AXES = ("x", "y", "z")


def trace_columns(num_targets: int) -> list[str]:
    """Fixed column order; target columns scale with the target count."""
    cols = ["k"]
    for i in (1, 2):
        cols += [f"agent{i}_{a}" for a in _AXES]
    for j in range(1, num_targets + 1):
        cols += [f"target{j}_{a}" for a in _AXES]
    for group in ("center", "center_est", "disp_pred"):
        cols += [f"{group}_{a}" for a in _AXES]
    cols.append("radius")
    for group in ("traj", "u1", "u2", "sync_err", "track1_err", "track2_err", "center_err"):
        cols += [f"{group}_{a}" for a in _AXES]
    cols.append("fwnn_residual")
    cols += ["cov_eig_1", "cov_eig_2", "cov_eig_3"]
    cols += ["min_target_dist", "agent_dist", "antipodal_deg"]
    return cols


def _format_value(value: float) -> str:
    return "%.17g" % value


def _record_row(rec: StepRecord) -> list[str]:
    values: list[float] = []
    values += list(rec.agents[0]) + list(rec.agents[1])
    for target in rec.targets:
        values += list(target)
    values += list(rec.center) + list(rec.center_estimate) + list(rec.prediction)
    values.append(rec.radius)
    values += list(rec.trajectory_point) + list(rec.control1) + list(rec.control2)
    values += list(rec.sync_error) + list(rec.tracking_error_1) + list(rec.tracking_error_2)
    values += list(rec.center_error)
    values.append(rec.fwnn_residual)
    values += list(rec.covariance_eigs)
    values += [rec.min_target_distance, rec.agent_distance, rec.antipodal_deg]
    return [str(rec.k)] + [_format_value(v) for v in values]


def write_trace(path, result: RunResult) -> None:
    """UTF-8 CSV with a header row; floats keep 17 significant digits."""
    cols = trace_columns(result.scenario.num_targets)
    lines = [",".join(cols)]
    for rec in result.records:
        row = _record_row(rec)
        if len(row) != len(cols):
            raise ConfigError("record does not match the column layout")
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace(path) -> tuple[list[str], np.ndarray]:
    """Header list and a (steps, columns) float array."""
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not text:
        raise ConfigError(f"trace {path} is empty")
    header = text[0].split(",")
    data = np.array(
        [[float(cell) for cell in line.split(",")] for line in text[1:]], dtype=np.float64
    )
    if data.size == 0:
        data = data.reshape(0, len(header))
    return header, data


def trace_column(header: list[str], data: np.ndarray, name: str) -> np.ndarray:
    if name not in header:
        raise ConfigError(f"trace has no column {name!r}")
    return data[:, header.index(name)]


# ---------------------------------------------------------------------------
# run reports


def _first_settled(norms: np.ndarray, threshold: float) -> int | None:
    """First index from which the series stays below threshold."""
    below = norms < threshold
    if not below.size:
        return None
    # last violation decides
    violations = np.nonzero(~below)[0]
    if violations.size == 0:
        return 0
    settle = int(violations[-1]) + 1
    return settle if settle < norms.size else None


def summarize(records: list, post_transient_fraction: float = 0.5) -> dict:
    """Aggregate error, distance and radius statistics over a trace."""
    n = len(records)
    if n == 0:
        return {"steps_recorded": 0}
    start = min(int(n * post_transient_fraction), n - 1)
    series = {
        "sync_error": np.array([r.sync_error for r in records]),
        "tracking_error_1": np.array([r.tracking_error_1 for r in records]),
        "tracking_error_2": np.array([r.tracking_error_2 for r in records]),
        "center_error": np.array([r.center_error for r in records]),
    }
    centers = np.array([r.center for r in records])
    predictions = np.array([r.prediction for r in records])
    if n >= 2:
        series["prediction_error"] = (centers[1:] - centers[:-1]) - predictions[:-1]
    errors = {}
    for name, values in series.items():
        norms = np.linalg.norm(values, axis=1)
        post = norms[min(start, norms.size - 1):]
        errors[name] = {
            "sup_norm_post": float(np.max(post)),
            "mean_norm_post": float(np.mean(post)),
            "settled_at": _first_settled(norms, CONVERGENCE_THRESHOLDS[name]),
        }
    radii = np.array([r.radius for r in records])
    changes = [int(records[i].k) for i in range(1, n) if radii[i] != radii[i - 1]]
    min_td = np.array([r.min_target_distance for r in records])
    agent_d = np.array([r.agent_distance for r in records])
    anti = np.array([r.antipodal_deg for r in records])
    return {
        "steps_recorded": n,
        "post_transient_start": start,
        "errors": errors,
        "min_target_distance": {
            "overall": float(np.min(min_td)),
            "post": float(np.min(min_td[start:])),
        },
        "agent_distance": {
            "min": float(np.min(agent_d)),
            "max": float(np.max(agent_d)),
        },
        "antipodal_deg": {
            "mean_post": float(np.mean(anti[start:])),
            "min_post": float(np.min(anti[start:])),
        },
        "radius": {
            "initial": float(radii[0]),
            "final": float(radii[-1]),
            "change_steps": changes,
        },
    }


def format_summary(summary: dict, abort: dict | None = None) -> str:
    """Human-readable one-screen digest of a run."""
    lines = []
    if abort is not None:
        lines.append(
            f"ABORTED at step {abort['step']}: {abort['flag']} ({abort['detail']})"
        )
    if summary.get("steps_recorded", 0) == 0:
        lines.append("no steps recorded")
        return "\n".join(lines)
    lines.append(f"steps recorded: {summary['steps_recorded']}")
    lines.append(f"post-transient window starts at step {summary['post_transient_start']}")
    for name, stats in summary["errors"].items():
        settled = stats["settled_at"]
        settled_text = "never" if settled is None else f"step {settled}"
        lines.append(
            f"  {name}: sup|.|={stats['sup_norm_post']:.4g} "
            f"mean|.|={stats['mean_norm_post']:.4g} settled {settled_text}"
        )
    lines.append(
        "min agent-target distance: "
        f"{summary['min_target_distance']['overall']:.4g} overall, "
        f"{summary['min_target_distance']['post']:.4g} post-transient"
    )
    lines.append(
        f"antipodal angle post-transient: mean {summary['antipodal_deg']['mean_post']:.2f} deg, "
        f"min {summary['antipodal_deg']['min_post']:.2f} deg"
    )
    radius_info = summary["radius"]
    lines.append(
        f"radius: {radius_info['initial']:.4g} -> {radius_info['final']:.4g} "
        f"({len(radius_info['change_steps'])} change(s))"
    )
    return "\n".join(lines)


def persistent_excitation(
    baselines: np.ndarray,
    window: int,
    drift_bound: float,
    start: int = 0,
) -> dict:
    """Sliding-window excitation check over a baseline-vector sequence.

    Accumulates sum of outer products over every window of the given
    length and checks positive definiteness on the excited subspace: when
    the whole sequence is planar the z direction carries no information
    and only the horizontal block is required to be well conditioned.
    The analytic upper bound on the window sum uses the supplied per-step
    drift bound; the matching printed lower bound is reported for
    reference but is too loose to gate on.
    """
    p = np.asarray(baselines, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 3:
        raise ConfigError("baselines must have shape (n, 3)")
    if window < 1:
        raise ConfigError("window must be >= 1")
    n = p.shape[0]
    usable = n - start
    if usable < window:
        raise ConfigError(
            f"need at least {window} baselines after start={start}, have {usable}"
        )
    planar = bool(np.all(np.abs(p[:, 2]) < _PLANAR_TOL))
    mu = float(drift_bound)
    windows = []
    all_passed = True
    for s in range(start, n - window + 1):
        block = p[s : s + window]
        gram = block.T @ block
        if planar:
            eigs = np.linalg.eigvalsh(gram[:2, :2])
        else:
            eigs = np.linalg.eigvalsh(gram)
        eig_min = float(eigs[0])
        eig_max = float(eigs[-1])
        length = float(np.linalg.norm(block[0]))
        cross = window * (window - 1) * length * mu
        square = window * (window - 1) * (2 * window - 1) * mu * mu / 6.0
        upper = window * length * length + cross + square
        lower_printed = window * length * length - cross + square
        passed = (
            eig_min > max(1e-12, 1e-6 * eig_max)
            and eig_max <= upper + 1e-9
        )
        windows.append(
            {
                "start": s,
                "eig_min": eig_min,
                "eig_max": eig_max,
                "sum_upper": upper,
                "sum_lower_printed": lower_printed,
                "passed": passed,
            }
        )
        all_passed = all_passed and passed
    worst = min(windows, key=lambda w: w["eig_min"])
    return {
        "window": int(window),
        "drift_bound": mu,
        "effective_dimension": 2 if planar else 3,
        "num_windows": len(windows),
        "all_passed": bool(all_passed),
        "worst_window": worst,
        "windows": windows,
    }


def excitation_report(result: RunResult) -> dict | None:
    """Excitation check over the post-transient part of a finished run.

    The window is one full orbit (two over the frequency); returns None
    when the trace is too short for a single window.
    """
    records = result.records
    if not records:
        return None
    window = int(round(2.0 / result.scenario.controller.frequency))
    n = len(records)
    start = min(int(n * result.scenario.post_transient_fraction), n - 1)
    if n - start < window:
        return None
    baselines = np.array([r.agents[0] - r.agents[1] for r in records])
    radii = np.array([r.radius for r in records])
    beta = abs(result.scenario.controller.feedback_gain)
    drift = beta * (float(np.linalg.norm(baselines[0])) + 2.0 * float(np.max(radii)))
    report = persistent_excitation(baselines, window, drift, start=start)
    report.pop("windows")
    return report


# ---------------------------------------------------------------------------
# output files


def write_meta(path, result: RunResult, summary: dict) -> None:
    """meta.json next to the trace; deterministic, no timestamps."""
    meta = {
        "format_version": 1,
        "scenario": result.scenario.to_dict(),
        "validation": result.report.to_dict(),
        "speed_margin": speed_margin(result.scenario),
        "summary": summary,
        "persistent_excitation": excitation_report(result),
        "abort": result.abort,
        "flags": result.flags,
        "trace_columns": trace_columns(result.scenario.num_targets),
        "final_fwnn": result.final_fwnn.to_dict(),
    }
    Path(path).write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_outputs(result: RunResult, out_dir) -> dict:
    """Write trace.csv and meta.json into out_dir; returns the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = summarize(result.records, result.scenario.post_transient_fraction)
    write_trace(out / "trace.csv", result)
    write_meta(out / "meta.json", result, summary)
    return summary
