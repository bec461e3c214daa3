import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from encirclesim.errors import AdaptationDivergedError, ConfigError, DegenerateBasisError
from encirclesim.fwnn import (
    FwnnConfig,
    FwnnState,
    fuzzy_basis,
    input_variables,
    membership,
    mother_wavelet,
    predict,
    update_weights,
    weighted_prediction,
)

CFG = FwnnConfig()  # single-rule network with the bundled constants


def test_config_validation():
    with pytest.raises(ConfigError):
        FwnnConfig(rules=0)
    with pytest.raises(ConfigError):
        FwnnConfig(set_size=0)
    with pytest.raises(ConfigError):
        FwnnConfig(spread=0.0)
    with pytest.raises(ConfigError):
        FwnnConfig(learning_rate=0.0)
    with pytest.raises(ConfigError):
        FwnnConfig(learning_rate=1.0)
    with pytest.raises(ConfigError):
        FwnnConfig(wavelet_scale=0.0)
    with pytest.raises(ConfigError):
        FwnnConfig(excitation_bound=-1.0)


# --- input layer -----------------------------------------------------------


def test_input_variables_offset_cancels():
    np.testing.assert_allclose(input_variables(9.0, CFG), [3.0, 6.0, 9.0, 12.0, 15.0])


def test_input_variables_zero_input():
    np.testing.assert_allclose(input_variables(0.0, CFG), [-6.0, -3.0, 0.0, 3.0, 6.0])


def test_input_variables_single_set():
    cfg = FwnnConfig(set_size=1, input_offset=2.0, input_spacing=0.5)
    np.testing.assert_allclose(input_variables(1.0, cfg), [1.0 - 2.0 + 0.5])


def test_membership_peak_and_width():
    assert membership(0.0, CFG) == pytest.approx(1.0)
    assert membership(CFG.spread, CFG) == pytest.approx(np.exp(-0.5))
    grades = membership(np.array([0.0, 10.0, 100.0, 1000.0]), CFG)
    assert np.all(np.diff(grades) < 0)


# --- basis -----------------------------------------------------------------


def test_single_rule_basis_is_one_everywhere():
    for delta in (0.0, 9.0, 1e9, -1e12):
        basis = fuzzy_basis(input_variables(delta, CFG), CFG)
        np.testing.assert_array_equal(basis, [1.0])


def test_two_rule_basis_splits_evenly():
    cfg = FwnnConfig(rules=2)
    basis = fuzzy_basis(input_variables(4.0, cfg), cfg)
    np.testing.assert_allclose(basis, [0.5, 0.5])


def test_basis_matches_product_oracle():
    cfg = FwnnConfig(rules=3, set_size=4, spread=20.0)
    thetas = input_variables(13.0, cfg)
    products = np.array([np.prod(membership(thetas, cfg))] * cfg.rules)
    np.testing.assert_allclose(fuzzy_basis(thetas, cfg), products / products.sum())


def test_basis_underflow_reports_input_magnitude():
    cfg = FwnnConfig(rules=2, spread=1.0)
    thetas = input_variables(1e6, cfg)
    with pytest.raises(DegenerateBasisError) as exc:
        fuzzy_basis(thetas, cfg)
    assert exc.value.max_abs_input >= 1e6 - 20


@settings(max_examples=200)
@given(
    delta=st.floats(-600.0, 600.0),
    rules=st.integers(1, 4),
    set_size=st.integers(1, 5),
    spread=st.floats(40.0, 300.0),
)
def test_basis_always_convex(delta, rules, set_size, spread):
    cfg = FwnnConfig(rules=rules, set_size=set_size, spread=spread)
    basis = fuzzy_basis(input_variables(delta, cfg), cfg)
    assert basis.shape == (rules,)
    assert abs(float(basis.sum()) - 1.0) <= 1e-12
    assert np.all(basis >= 0.0) and np.all(basis <= 1.0)


# --- wavelet ---------------------------------------------------------------


def test_wavelet_root_at_unit_input():
    assert mother_wavelet(1.0, CFG) == 0.0


def test_wavelet_frozen_values():
    assert mother_wavelet(1001.0, CFG) == pytest.approx(-np.exp(-0.5), rel=1e-12)
    assert mother_wavelet(-999.0, CFG) == pytest.approx(np.exp(-0.5), rel=1e-12)


def test_wavelet_large_inputs_finite():
    assert mother_wavelet(1e9, CFG) == pytest.approx(0.0, abs=1e-300)
    assert np.isfinite(mother_wavelet(-1e9, CFG))


# --- forward pass ----------------------------------------------------------


def test_predict_zero_weights_gives_zero():
    state = FwnnState.initial(CFG)
    _, prediction = predict(state, 123.4, CFG)
    np.testing.assert_array_equal(prediction, np.zeros(3))


def test_predict_single_rule_reduces_to_scaled_weight():
    state = FwnnState(weights=np.array([[1.0, 2.0, 3.0]]))
    delta = 42.0
    _, prediction = predict(state, delta, CFG)
    np.testing.assert_allclose(prediction, mother_wavelet(delta, CFG) * np.array([1.0, 2.0, 3.0]))


def test_weighted_prediction_two_rules():
    weights = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    out = weighted_prediction(weights, np.array([0.3, 0.7]), 0.5)
    np.testing.assert_allclose(out, [0.15, 0.35, 0.0])


def test_predict_caches_forward_pass():
    state = FwnnState(weights=np.array([[1.0, 0.0, 0.0]]))
    new_state, prediction = predict(state, 5.0, CFG)
    assert new_state.last_input == 5.0
    assert new_state.last_eta == mother_wavelet(5.0, CFG)
    np.testing.assert_array_equal(new_state.last_prediction, prediction)


# --- adaptation ------------------------------------------------------------


def test_update_hand_value():
    state = FwnnState(
        weights=np.zeros((1, 3)),
        last_eta=0.5,
        last_basis=np.ones(1),
        last_prediction=np.zeros(3),
    )
    updated = update_weights(state, np.array([0.0, -3.0, 0.0]), 2.0, CFG)
    np.testing.assert_allclose(updated.weights, [[0.0, -0.03, 0.0]], atol=1e-15)
    assert updated.last_residual == pytest.approx(2.0)


def test_update_zero_residual_is_noop():
    state = FwnnState(
        weights=np.array([[0.4, 0.0, 0.0]]),
        last_eta=0.5,
        last_basis=np.ones(1),
        last_prediction=np.array([1.0, 0.0, 0.0]),
    )
    updated = update_weights(state, np.array([2.0, 0.0, 0.0]), 2.0, CFG)
    np.testing.assert_array_equal(updated.weights, state.weights)


def test_update_scales_linearly_with_learning_rate():
    def delta_for(lr):
        cfg = FwnnConfig(learning_rate=lr)
        state = FwnnState(
            weights=np.zeros((1, 3)),
            last_eta=0.3,
            last_basis=np.ones(1),
            last_prediction=np.zeros(3),
        )
        return update_weights(state, np.array([1.0, -2.0, 0.5]), 3.0, cfg).weights

    np.testing.assert_allclose(delta_for(0.02), 2.0 * delta_for(0.01), rtol=1e-12)


def test_update_before_any_predict_is_noop():
    state = FwnnState.initial(CFG)
    updated = update_weights(state, np.array([1.0, 1.0, 1.0]), 7.0, CFG)
    np.testing.assert_array_equal(updated.weights, state.weights)


def test_update_nonfinite_input_raises():
    state = FwnnState(
        weights=np.zeros((1, 3)),
        last_eta=0.5,
        last_basis=np.ones(1),
        last_prediction=np.zeros(3),
    )
    with pytest.raises(AdaptationDivergedError):
        update_weights(state, np.array([0.0, -3.0, 0.0]), float("nan"), CFG)


def test_update_matches_finite_difference_gradient():
    """The weight step is -learning_rate times the loss gradient."""
    cfg = FwnnConfig(rules=3, set_size=4, spread=30.0, input_offset=1.0, input_spacing=0.7, learning_rate=0.01)
    rng = np.random.default_rng(5)
    base_weights = rng.normal(size=(3, 3))
    delta = 2.3
    p = np.array([0.4, -1.2, 0.8])

    def loss(weights):
        _, prediction = predict(FwnnState(weights=weights), delta, cfg)
        eps = delta - float(p @ prediction)
        return 0.5 * eps * eps

    state, _ = predict(FwnnState(weights=base_weights), delta, cfg)
    updated = update_weights(state, p, delta, cfg)
    analytic = -(updated.weights - base_weights) / cfg.learning_rate

    h = 1e-6
    for i in range(3):
        for c in range(3):
            bumped = base_weights.copy()
            bumped[i, c] += h
            dipped = base_weights.copy()
            dipped[i, c] -= h
            fd = (loss(bumped) - loss(dipped)) / (2 * h)
            if abs(fd) > 1e-9:
                assert abs(analytic[i, c] - fd) / abs(fd) < 1e-6
            else:
                assert abs(analytic[i, c]) < 1e-9


@settings(max_examples=150, deadline=None)
@given(
    delta=st.floats(-600.0, 600.0),
    alpha=st.floats(0.001, 0.9),
    px=st.floats(-3.0, 3.0),
    py=st.floats(-3.0, 3.0),
    pz=st.floats(-3.0, 3.0),
    rules=st.integers(1, 3),
)
def test_constant_input_residual_contracts_under_gate(delta, alpha, px, py, pz, rules):
    """With a frozen baseline and input, |residual| is non-increasing whenever
    the step size times the excitation factor keeps the loop inside the unit
    contraction band."""
    p = np.array([px, py, pz])
    norm_sq = float(p @ p)
    assume(norm_sq > 0.1)
    cfg = FwnnConfig(rules=rules, learning_rate=alpha)
    eta = mother_wavelet(delta, cfg)
    basis_sq = 1.0 / rules  # uniform basis: sum of squared strengths
    excitation = eta * eta * basis_sq * norm_sq
    gate = alpha * (2.0 * excitation - alpha * excitation * excitation)
    assume(0.0 < gate < 1.0)

    state = FwnnState.initial(cfg)
    residuals = []
    for _ in range(15):
        state, _ = predict(state, delta, cfg)
        state = update_weights(state, p, delta, cfg)
        residuals.append(abs(state.last_residual))
    diffs = np.diff(residuals)
    assert np.all(diffs <= 1e-9)
