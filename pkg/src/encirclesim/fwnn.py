"""Fuzzy wavelet network predicting the center's next displacement.

The network maps the scalar change of the baseline-projection output to a
3-vector displacement guess.  Gaussian memberships over shifted copies of
the input gate a single wavelet activation; adaptation follows the
gradient of the squared projection residual, which is measurable from
ranges alone (no target positions involved).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import AdaptationDivergedError, ConfigError, DegenerateBasisError

PAPER_WAVELET_SCALE = 0.001
PAPER_WAVELET_SHIFT = 0.001


@dataclass(frozen=True)
class FwnnConfig:
    """Network shape and adaptation constants.

    rules: number of wavelet rules (weight rows).
    set_size: number of shifted input variables feeding the memberships.
    spread: Gaussian membership width.
    input_offset / input_spacing: input variables are
        delta - input_offset + input_spacing * i for i = 1..set_size.
    learning_rate: gradient step size, must sit in (0, 1).
    wavelet_scale / wavelet_shift: activation is -(u) * exp(-u^2 / 2)
        with u = wavelet_scale * delta - wavelet_shift.
    excitation_bound: optional supplied bound on the squared baseline
        excitation, used only by gain validation.
    """

    rules: int = 1
    set_size: int = 5
    spread: float = 128.0
    input_offset: float = 9.0
    input_spacing: float = 3.0
    learning_rate: float = 0.01
    wavelet_scale: float = PAPER_WAVELET_SCALE
    wavelet_shift: float = PAPER_WAVELET_SHIFT
    excitation_bound: float | None = None

    def __post_init__(self):
        if self.rules < 1:
            raise ConfigError("rules must be >= 1")
        if self.set_size < 1:
            raise ConfigError("set_size must be >= 1")
        if not self.spread > 0:
            raise ConfigError("spread must be > 0")
        if not 0 < self.learning_rate < 1:
            raise ConfigError("learning_rate must lie in (0, 1)")
        if self.wavelet_scale == 0:
            raise ConfigError("wavelet_scale must be nonzero")
        if self.excitation_bound is not None and not self.excitation_bound > 0:
            raise ConfigError("excitation_bound must be > 0 when supplied")


@dataclass(frozen=True)
class FwnnState:
    """Weights plus the cached forward pass they were last evaluated at.

    update_weights consumes the cache, so a state freshly built with
    `initial` performs a no-op update until predict has run once.
    """

    weights: np.ndarray  # (rules, 3)
    last_input: float = 0.0
    last_eta: float = 0.0
    last_basis: np.ndarray | None = None
    last_prediction: np.ndarray | None = None
    last_residual: float = 0.0

    @classmethod
    def initial(cls, cfg: FwnnConfig) -> "FwnnState":
        return cls(
            weights=np.zeros((cfg.rules, 3)),
            last_basis=np.zeros(cfg.rules),
            last_prediction=np.zeros(3),
        )

    def to_dict(self) -> dict:
        return {
            "weights": [list(row) for row in np.asarray(self.weights)],
            "last_input": float(self.last_input),
            "last_residual": float(self.last_residual),
        }


def input_variables(delta: float, cfg: FwnnConfig) -> np.ndarray:
    """Shifted copies of the input feeding the memberships."""
    idx = np.arange(1, cfg.set_size + 1, dtype=np.float64)
    return delta - cfg.input_offset + cfg.input_spacing * idx


def membership(theta, cfg: FwnnConfig) -> np.ndarray:
    """Gaussian membership, peak 1 at zero, shared width across sets."""
    th = np.asarray(theta, dtype=np.float64)
    return np.exp(-(th * th) / (2.0 * cfg.spread * cfg.spread))


def fuzzy_basis(thetas: np.ndarray, cfg: FwnnConfig) -> np.ndarray:
    """Normalized rule strengths; they sum to one.

    A single rule is always fully active regardless of the inputs.  With
    several rules the strengths are products of the shared memberships,
    so a far-out input can underflow every product; that is reported
    rather than silently renormalized.
    """
    if cfg.rules == 1:
        return np.ones(1)
    grades = membership(thetas, cfg)
    product = float(np.prod(grades))
    products = np.full(cfg.rules, product)
    total = float(products.sum())
    if total == 0.0:
        raise DegenerateBasisError(float(np.max(np.abs(thetas))))
    return products / total


def mother_wavelet(delta: float, cfg: FwnnConfig) -> float:
    """Wavelet activation evaluated at the raw input."""
    u = cfg.wavelet_scale * delta - cfg.wavelet_shift
    with np.errstate(under="ignore"):
        return float(-u * np.exp(-0.5 * u * u))


def weighted_prediction(weights: np.ndarray, basis: np.ndarray, eta: float) -> np.ndarray:
    """Output layer: eta * sum_i basis_i * weights_i."""
    return eta * (np.asarray(basis, dtype=np.float64) @ np.asarray(weights, dtype=np.float64))


def predict(state: FwnnState, delta: float, cfg: FwnnConfig) -> tuple[FwnnState, np.ndarray]:
    """Forward pass: displacement guess for the step the input refers to.

    Returns the state with the forward pass cached, and the prediction
    eta * sum_i weights_i * basis_i.
    """
    thetas = input_variables(delta, cfg)
    basis = fuzzy_basis(thetas, cfg)
    eta = mother_wavelet(delta, cfg)
    prediction = weighted_prediction(state.weights, basis, eta)
    new_state = replace(
        state,
        last_input=float(delta),
        last_eta=eta,
        last_basis=basis,
        last_prediction=prediction,
    )
    return new_state, prediction


def update_weights(state: FwnnState, baseline: np.ndarray, delta: float, cfg: FwnnConfig) -> FwnnState:
    """One gradient step against the measurable projection residual.

    `delta` and the cached prediction must refer to the same step; the
    residual is delta - baseline . prediction, and each rule's weight
    moves along baseline scaled by learning_rate * residual * eta * basis.
    """
    p = np.asarray(baseline, dtype=np.float64)
    prediction = state.last_prediction if state.last_prediction is not None else np.zeros(3)
    residual = float(delta) - float(p @ prediction)
    basis = state.last_basis if state.last_basis is not None else np.zeros(cfg.rules)
    step = cfg.learning_rate * residual * state.last_eta
    new_weights = state.weights + step * np.outer(basis, p)
    if not np.isfinite(residual) or not np.all(np.isfinite(new_weights)):
        raise AdaptationDivergedError(
            f"residual {residual!r} or weights non-finite at input {delta!r}"
        )
    return replace(state, weights=new_weights, last_residual=residual)
