"""Dense feedforward binary classifier trained from scratch with Adam.

Topology is fixed at two ReLU hidden layers of width 2*n_series feeding one
sigmoid output, trained on binary cross-entropy. Also hosts the binomial
chance-accuracy machinery that decides when a test accuracy is significant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .frames import LabeledSplit

PRED_CLAMP = 1e-7  # probability clamp applied before logarithms
EXACT_TAIL_LIMIT = 100_000  # above this n the binomial tail uses the normal approx


@dataclass
class MlpModel:
    """Weights/biases of an [n, 2n, 2n, 1] ReLU-ReLU-sigmoid network."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def parameters(self) -> list[np.ndarray]:
        """Live references in the fixed order W1, b1, W2, b2, W3, b3."""
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out


@dataclass
class AdamState:
    """Adam moment estimates; shapes mirror the parameter list."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray], **kwargs) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **kwargs,
        )


@dataclass
class TrainConfig:
    epochs: int = 60
    batch_size: int = 256
    shuffle_each_epoch: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


def count_params(n_series: int) -> int:
    """Trainable scalar count for the [n, 2n, 2n, 1] topology."""
    if n_series < 1:
        raise ValueError(f"n_series must be >= 1, got {n_series}")
    n = n_series
    return (n * 2 * n + 2 * n) + (2 * n * 2 * n + 2 * n) + (2 * n + 1)


def init_mlp(n_series: int, seed: int = 0) -> MlpModel:
    """Fan-in-scaled Gaussian weights (ReLU gain on hidden layers), zero biases."""
    if n_series < 1:
        raise ValueError(f"n_series must be >= 1, got {n_series}")
    rng = np.random.default_rng(seed)
    dims = [n_series, 2 * n_series, 2 * n_series, 1]
    weights = []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        gain = 2.0 if i < 2 else 1.0
        weights.append(rng.normal(0.0, math.sqrt(gain / fan_in), size=(fan_in, fan_out)))
    biases = [np.zeros(d) for d in dims[1:]]
    return MlpModel(weights=weights, biases=biases)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_full(model: MlpModel, x: np.ndarray):
    """Forward pass keeping pre-activations for backprop."""
    w1, w2, w3 = model.weights
    b1, b2, b3 = model.biases
    z1 = x @ w1 + b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ w2 + b2
    h2 = np.maximum(z2, 0.0)
    z3 = h2 @ w3 + b3
    p = _sigmoid(z3).ravel()
    return p, (x, z1, h1, z2, h2)


def forward(model: MlpModel, x):
    """Network output in (0, 1); scalar for a single row, vector for a batch."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != model.n_inputs:
        raise ValueError(f"expected {model.n_inputs} features, got {arr.shape[1]}")
    p, _ = _forward_full(model, arr)
    return float(p[0]) if single else p


def bce_loss(predicted, actual) -> float:
    """Mean binary cross-entropy with predictions clamped away from {0, 1}."""
    p = np.asarray(predicted, dtype=np.float64)
    y = np.asarray(actual, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    p = np.clip(p, PRED_CLAMP, 1.0 - PRED_CLAMP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def backward(model: MlpModel, batch_x, batch_y) -> list[np.ndarray]:
    """Exact gradients of mean BCE, ordered like ``model.parameters()``.

    Uses the usual sigmoid+BCE cancellation dL/dz = p - y, i.e. the clamp in
    :func:`bce_loss` is treated as inactive (it only guards the logs).
    """
    x = np.atleast_2d(np.asarray(batch_x, dtype=np.float64))
    y = np.asarray(batch_y, dtype=np.float64).ravel()
    if len(x) == 0:
        raise ValueError("batch must be non-empty")
    if len(x) != len(y):
        raise ValueError(f"batch length mismatch: {len(x)} rows vs {len(y)} labels")
    w2, w3 = model.weights[1], model.weights[2]
    p, (x0, z1, h1, z2, h2) = _forward_full(model, x)

    dz3 = ((p - y) / len(y))[:, None]
    gw3 = h2.T @ dz3
    gb3 = dz3.sum(axis=0)
    dz2 = (dz3 @ w3.T) * (z2 > 0)
    gw2 = h1.T @ dz2
    gb2 = dz2.sum(axis=0)
    dz1 = (dz2 @ w2.T) * (z1 > 0)
    gw1 = x0.T @ dz1
    gb1 = dz1.sum(axis=0)
    return [gw1, gb1, gw2, gb2, gw3, gb3]


def adam_step(
    state: AdamState,
    params: list[np.ndarray],
    grads: list[np.ndarray],
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and state shapes must match")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for i, (param, g) in enumerate(zip(params, grads)):
        if param.shape != g.shape:
            raise ValueError(f"gradient {i} shape {g.shape} != param {param.shape}")
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        param -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params, state


def train(
    model: MlpModel,
    split: LabeledSplit,
    config: TrainConfig,
) -> tuple[MlpModel, list[tuple[float, float]]]:
    """Minibatch Adam training; returns the model and per-epoch test stats.

    Each epoch reshuffles the training rows (seeded), steps Adam over
    batches of ``batch_size``, then records (test loss, test accuracy).
    Bit-reproducible for a fixed seed.
    """
    y_train = np.asarray(split.train_y)
    if np.unique(y_train).size < 2:
        raise ValueError("training data must contain both classes")
    x_train = np.asarray(split.train_x, dtype=np.float64)
    x_test = np.asarray(split.test_x, dtype=np.float64)
    y_test = np.asarray(split.test_y, dtype=np.float64)

    rng = np.random.default_rng(config.seed)
    params = model.parameters()
    state = AdamState.for_params(params)
    n = len(y_train)
    history: list[tuple[float, float]] = []
    for _ in range(config.epochs):
        order = rng.permutation(n) if config.shuffle_each_epoch else np.arange(n)
        for lo in range(0, n, config.batch_size):
            batch = order[lo : lo + config.batch_size]
            grads = backward(model, x_train[batch], y_train[batch])
            adam_step(state, params, grads)
        p_test = forward(model, x_test)
        history.append((bce_loss(p_test, y_test), binary_accuracy(p_test, y_test)))
    return model, history


def binary_accuracy(predicted, actual) -> float:
    """Share of samples where (p > 0.5) matches the label."""
    p = np.asarray(predicted, dtype=np.float64)
    y = np.asarray(actual)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    return float(np.mean((p > 0.5) == (y == 1)))


def chance_accuracy(n_referent: int, n_subject: int) -> float:
    """Accuracy of always predicting the majority (referent) class."""
    if n_referent < 1 or n_subject < 1:
        raise ValueError("both window sample counts must be >= 1")
    return n_referent / (n_referent + n_subject)


def _binom_upper_tail(k: int, n: int, p: float) -> float:
    """P(X >= k) for X ~ Binomial(n, p).

    Exact (regularized incomplete beta) up to EXACT_TAIL_LIMIT trials,
    normal approximation with continuity correction beyond.
    """
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    if n <= EXACT_TAIL_LIMIT:
        return float(stats.binom.sf(k - 1, n, p))
    mu = n * p
    sd = math.sqrt(n * p * (1.0 - p))
    return float(stats.norm.sf((k - 0.5 - mu) / sd))


def accuracy_threshold(n_test: int, p: float, alpha: float = 0.01) -> float:
    """Smallest accuracy k/n_test whose chance probability is below alpha.

    Finds the least k with P(X >= k | n_test, p) < alpha for the binomial
    chance model. May return (n_test + 1) / n_test (> 1) when no achievable
    accuracy is significant, in which case nothing can be flagged.
    """
    if n_test < 1:
        raise ValueError(f"n_test must be >= 1, got {n_test}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    lo, hi = 0, n_test + 1  # tail(lo) >= alpha > tail(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _binom_upper_tail(mid, n_test, p) < alpha:
            hi = mid
        else:
            lo = mid
    return hi / n_test


def history_to_csv(history: list[tuple[float, float]], path: str | Path) -> None:
    """Dump per-epoch (loss, accuracy) rows for plotting training curves."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "accuracy"])
        for epoch, (loss, acc) in enumerate(history):
            writer.writerow([epoch, repr(loss), repr(acc)])
