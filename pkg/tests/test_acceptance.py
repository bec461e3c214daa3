"""Acceptance gate: one test per shipped guarantee, one printed line each.

Every test prints `A<n> PASS/FAIL: <measured values>` so a plain pytest
run doubles as the sign-off checklist.  Tolerances are part of the
contract; do not loosen them here.
"""

import json
import time

import numpy as np

from encirclesim.estimator import baseline_projection
from encirclesim.fwnn import FwnnConfig, FwnnState, predict, update_weights
from encirclesim.harness import excitation_report, persistent_excitation, run
from encirclesim.scenario import paper_sim, parse_scenario
from encirclesim.controller import ControllerConfig, projected_center_distances, radius
from encirclesim.vec import inv3
from encirclesim.world import WorldState, sense


def _line(cid: str, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"{cid} {status}: {detail}")
    assert passed, f"{cid} {status}: {detail}"


def test_a1_bundled_scenario_reproduction(paper_scenario):
    t0 = time.perf_counter()
    result = run(paper_scenario)
    elapsed = time.perf_counter() - t0
    assert not result.aborted
    recs = result.records
    sync_sup = max(float(np.max(np.abs(r.sync_error))) for r in recs if r.k > 100)
    start = int(len(recs) * paper_scenario.post_transient_fraction)
    anti_min = min(r.antipodal_deg for r in recs[start:])
    passed = sync_sup < 0.5 and anti_min > 170.0 and elapsed < 5.0
    _line(
        "A1",
        passed,
        f"sup |e_s| component for k>100 = {sync_sup:.4g} (< 0.5), "
        f"min antipodal angle post-transient = {anti_min:.2f} deg (> 170), "
        f"runtime = {elapsed:.2f} s (< 5)",
    )


def test_a2_known_displacement_estimator_accuracy(known_run):
    errors = [
        float(np.linalg.norm(r.center_error)) for r in known_run.records if r.k >= 100
    ]
    worst = max(errors)
    _line(
        "A2",
        worst <= 1e-10,
        f"sup ||center error|| for k>=100 = {worst:.3g} (<= 1e-10) over "
        f"{len(errors)} steps",
    )


def test_a3_projection_identity_property():
    rng = np.random.default_rng(31)
    n = 10_000
    worst = 0.0
    for _ in range(n):
        x1 = rng.uniform(-10, 10, 3)
        x2 = rng.uniform(-10, 10, 3)
        s = rng.uniform(-10, 10, 3)
        psi = baseline_projection(
            float(np.linalg.norm(x1 - s)), float(np.linalg.norm(x2 - s)), x1, x2
        )
        worst = max(worst, abs(psi - float((x1 - x2) @ s)))
    _line("A3", worst <= 1e-9, f"max |psi - p12.s| = {worst:.3g} (<= 1e-9) over {n} draws")


def test_a4_gain_covariance_identity(paper_run):
    theta1 = np.longdouble(paper_run.scenario.estimator.forgetting)
    eye = np.eye(3, dtype=np.longdouble)
    worst = 0.0
    for dbg in paper_run.debug:
        left = eye - np.outer(
            np.asarray(dbg["gain"], dtype=np.longdouble),
            np.asarray(dbg["baseline"], dtype=np.longdouble),
        )
        right = theta1 * (dbg["covariance"] @ inv3(dbg["covariance_prev"]))
        norm = float(np.max(np.sum(np.abs(left - right), axis=1)))
        worst = max(worst, norm)
    _line(
        "A4",
        worst <= 1e-8,
        f"max ||(I - K p12^T) - theta1 xi(k) xi(k-1)^-1||_inf = {worst:.3g} "
        f"(<= 1e-8) over {len(paper_run.debug)} steps",
    )


def _residual_sequence(alpha: float, steps: int = 40) -> list[float]:
    cfg = FwnnConfig(learning_rate=alpha)
    state = FwnnState.initial(cfg)
    delta = 1001.0  # wavelet input becomes exactly 1.0
    p12 = np.array([0.0, -3.7, 0.0])
    state, _ = predict(state, delta, cfg)
    residuals = []
    for _ in range(steps):
        state = update_weights(state, p12, delta, cfg)
        residuals.append(abs(state.last_residual))
        state, _ = predict(state, delta, cfg)
    return residuals


def test_a5_adaptation_contraction_inside_gate():
    details = []
    passed = True
    for alpha in (0.01, 0.1, 0.3):
        res = _residual_sequence(alpha)
        increases = [res[m + 1] - res[m] for m in range(5, len(res) - 1)]
        worst = max(increases)
        passed = passed and worst <= 1e-9
        details.append(f"alpha={alpha}: max increase after step 5 = {worst:.3g}")
    counter = _residual_sequence(0.6)
    grew = counter[-1] > counter[5] + 1e-9
    passed = passed and grew
    details.append(
        f"alpha=0.6 counter-case grew {counter[5]:.3g} -> {counter[-1]:.3g}"
    )
    _line("A5", passed, "; ".join(details))


def test_a6_feedback_gain_boundary(paper_run, cli, tmp_path):
    stable = not paper_run.aborted
    proc = cli(
        "run",
        "paper-sim",
        "--override",
        "controller.feedback_gain=0.2",
        "--force",
        "--out",
        tmp_path / "unstable",
    )
    meta = json.loads((tmp_path / "unstable" / "meta.json").read_text(encoding="utf-8"))
    abort = meta["abort"]
    diverged = (
        proc.returncode == 3
        and abort is not None
        and abort["flag"] == "divergence"
        and abort["step"] < 200
    )
    _line(
        "A6",
        stable and diverged,
        f"beta=-0.85 ran all 400 steps; beta=0.2 exited {proc.returncode} "
        f"with divergence at step {None if abort is None else abort['step']} (< 200)",
    )


def test_a7_radius_oracle():
    """Random planar placements with the estimate sitting on the true center.

    Targets and center are kept strictly on one side of the agent chord;
    range-only data cannot tell a point from its mirror image across the
    chord, so the construction is only specified for that half-plane.
    """
    rng = np.random.default_rng(47)
    cfg = ControllerConfig()
    n = 10_000
    worst = 0.0
    min_radius = np.inf
    for _ in range(n):
        chord = rng.uniform(0.5, 8.0)
        local = np.array(
            [
                [0.0, 0.0],
                [chord, 0.0],
                [rng.uniform(-6, 6), rng.uniform(0.1, 6.0)],  # center
                [rng.uniform(-6, 6), rng.uniform(0.1, 6.0)],  # target
            ]
        )
        rot = rng.uniform(0.0, 2 * np.pi)
        frame = np.array([[np.cos(rot), -np.sin(rot)], [np.sin(rot), np.cos(rot)]])
        shift = rng.uniform(-10, 10, 2)
        z = rng.uniform(-2.0, 2.0)
        pts = local @ frame.T + shift
        x1 = np.array([*pts[0], z])
        x2 = np.array([*pts[1], z])
        center = np.array([*pts[2], z])
        target = np.array([*pts[3], z])
        state = WorldState(
            k=0,
            agents=np.array([x1, x2]),
            targets=target[None, :],
            weights=np.array([1.0]),
        )
        meas = sense(state, state.agents)
        dist = projected_center_distances(meas, center, x1, x2)[0]
        truth = float(np.linalg.norm((target - center)[:2]))
        worst = max(worst, abs(dist - truth))
        min_radius = min(min_radius, radius(meas, center, x1, x2, cfg))
    _line(
        "A7",
        worst <= 1e-6 and min_radius >= cfg.margin,
        f"max |law-of-cosines - brute force| = {worst:.3g} (<= 1e-6) over {n} "
        f"placements; min radius = {min_radius:.3g} (>= margin {cfg.margin})",
    )


def test_a8_collision_clearance(paper_run):
    clearance = min(r.min_target_distance for r in paper_run.records if r.k > 100)
    _line(
        "A8",
        clearance > 0.5,
        f"min agent-target distance for k>100 = {clearance:.4g} (> 0.5)",
    )


def test_a9_persistent_excitation(paper_run):
    report = excitation_report(paper_run)
    converged_ok = (
        report is not None and report["window"] == 48 and report["all_passed"]
    )
    stationary = persistent_excitation(
        np.tile(np.array([0.0, -3.0, 0.0]), (148, 1)), window=48, drift_bound=0.0
    )
    _line(
        "A9",
        converged_ok and not stationary["all_passed"],
        f"converged trace: {report['num_windows']} windows of 48 passed "
        f"(min eig {report['worst_window']['eig_min']:.4g}); "
        f"stationary trace fails (min eig {stationary['worst_window']['eig_min']:.3g})",
    )


def test_a10_bitwise_determinism(cli, tmp_path):
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        proc = cli("run", "paper-sim", "--quiet", "--out", out)
        assert proc.returncode == 0, proc.stderr
        outs.append(out)
    trace_same = (outs[0] / "trace.csv").read_bytes() == (outs[1] / "trace.csv").read_bytes()
    meta_same = (outs[0] / "meta.json").read_bytes() == (outs[1] / "meta.json").read_bytes()
    size = (outs[0] / "trace.csv").stat().st_size
    _line(
        "A10",
        trace_same and meta_same,
        f"two identical-seed runs: trace.csv ({size} bytes) and meta.json are "
        f"byte-identical = {trace_same and meta_same}",
    )
