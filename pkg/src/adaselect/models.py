"""Minimal feedforward models with per-sample loss and gradient probes.

Parameters live in one flat vector; each layer's weight matrix and bias are
contiguous views into it, so optimizer updates on the flat vector are seen
by the forward pass without copying. Per-sample gradient norms exploit the
rank-1 structure of a dense layer's per-sample gradient (outer product of
the backpropagated delta and the layer input), whose Frobenius norm factors
into the product of the two vector norms. The values are exact, only the
materialization of per-sample gradients is skipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import MiniBatch
from .rng import RngStream


class LossKind(str, Enum):
    MSE = "mse"
    CROSS_ENTROPY = "cross_entropy"

    @classmethod
    def from_token(cls, token: str) -> "LossKind":
        try:
            return cls(token.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown loss {token!r}; expected one of: {valid}") from None


class GradNormMode(str, Enum):
    EXACT = "exact"
    LAST_LAYER = "last_layer"


@dataclass
class Model:
    """A feedforward network; ``kind`` is linear when there are no hidden layers."""

    layer_sizes: tuple[int, ...]
    activation: str
    params: np.ndarray

    def __post_init__(self) -> None:
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or any(s < 1 for s in self.layer_sizes):
            raise ValueError("layer_sizes needs at least input and output sizes, all positive")
        if self.activation not in ("relu", "tanh"):
            raise ValueError("activation must be 'relu' or 'tanh'")
        self.params = np.asarray(self.params, dtype=np.float64)
        if self.params.shape != (param_count(self.layer_sizes),):
            raise ValueError("parameter count inconsistent with layer_sizes")
        self._spans = _layer_spans(self.layer_sizes)
        # Views stay valid because updates mutate params in place.
        self._layers = [
            (
                self.params[w_start:w_stop].reshape(n_out, n_in),
                self.params[w_stop:b_stop],
            )
            for w_start, w_stop, b_stop, n_out, n_in in self._spans
        ]

    @property
    def kind(self) -> str:
        return "linear" if len(self.layer_sizes) == 2 else "mlp"

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """(weight, bias) views into the flat parameter vector, per layer."""
        return self._layers


def param_count(layer_sizes: tuple[int, ...]) -> int:
    return sum(n_out * n_in + n_out for n_in, n_out in zip(layer_sizes, layer_sizes[1:]))


def _layer_spans(layer_sizes: tuple[int, ...]) -> list[tuple[int, int, int, int, int]]:
    spans = []
    pos = 0
    for n_in, n_out in zip(layer_sizes, layer_sizes[1:]):
        w_stop = pos + n_out * n_in
        b_stop = w_stop + n_out
        spans.append((pos, w_stop, b_stop, n_out, n_in))
        pos = b_stop
    return spans


def init_params(layer_sizes: tuple[int, ...], rng: RngStream) -> np.ndarray:
    """Fan-in-scaled uniform initialization, deterministic per stream."""
    gen = rng.generator()
    parts = []
    for n_in, n_out in zip(layer_sizes, layer_sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        parts.append(gen.uniform(-bound, bound, size=n_out * n_in))
        parts.append(gen.uniform(-bound, bound, size=n_out))
    return np.concatenate(parts)


def make_model(
    layer_sizes: tuple[int, ...], activation: str = "relu", rng: RngStream | None = None
) -> Model:
    rng = rng if rng is not None else RngStream(0)
    return Model(
        layer_sizes=tuple(layer_sizes),
        activation=activation,
        params=init_params(tuple(layer_sizes), rng),
    )


def _forward(model: Model, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Activations per layer (input first) and the final linear output."""
    if x.ndim != 2 or x.shape[1] != model.n_inputs:
        raise ValueError(
            f"dimension mismatch: model expects {model.n_inputs} features, got {x.shape}"
        )
    layers = model.layers()
    acts = [x]
    a = x
    for w, b in layers[:-1]:
        z = a @ w.T + b
        a = np.maximum(z, 0.0) if model.activation == "relu" else np.tanh(z)
        acts.append(a)
    w, b = layers[-1]
    out = a @ w.T + b
    return acts, out


def predict(model: Model, x: np.ndarray) -> np.ndarray:
    """Model outputs; regression values or classification logits."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    _, out = _forward(model, x)
    return out


def _per_sample_losses_from_output(
    out: np.ndarray, targets: np.ndarray, loss: LossKind
) -> np.ndarray:
    if loss is LossKind.MSE:
        y = np.asarray(targets, dtype=np.float64).reshape(out.shape[0], -1)
        if y.shape != out.shape:
            raise ValueError("dimension mismatch: targets do not match model outputs")
        return 0.5 * np.square(out - y).sum(axis=1)
    labels = np.asarray(targets)
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError("cross-entropy requires integer class targets")
    if labels.min() < 0 or labels.max() >= out.shape[1]:
        raise ValueError("class targets outside [0, num_classes)")
    shifted = out - out.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1))
    return logsumexp - shifted[np.arange(out.shape[0]), labels]


def _output_delta(out: np.ndarray, targets: np.ndarray, loss: LossKind) -> np.ndarray:
    """d(per-sample loss)/d(output), one row per sample."""
    if loss is LossKind.MSE:
        y = np.asarray(targets, dtype=np.float64).reshape(out.shape[0], -1)
        return out - y
    labels = np.asarray(targets)
    shifted = out - out.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    probs = exps / exps.sum(axis=1, keepdims=True)
    delta = probs.copy()
    delta[np.arange(out.shape[0]), labels] -= 1.0
    return delta


def _backward_deltas(
    model: Model, acts: list[np.ndarray], out: np.ndarray, targets: np.ndarray, loss: LossKind
) -> list[np.ndarray]:
    """Per-sample deltas for every layer, ordered input-side first."""
    layers = model.layers()
    deltas = [np.empty(0)] * len(layers)
    deltas[-1] = _output_delta(out, targets, loss)
    for i in range(len(layers) - 1, 0, -1):
        w, _ = layers[i]
        back = deltas[i] @ w
        a = acts[i]
        if model.activation == "relu":
            back *= a > 0
        else:
            back *= 1.0 - a * a
        deltas[i - 1] = back
    return deltas


def forward_per_sample_losses(model: Model, batch: MiniBatch, loss: LossKind) -> np.ndarray:
    """Length-b loss vector from one pure forward pass."""
    _, out = _forward(model, batch.features)
    return _per_sample_losses_from_output(out, batch.targets, loss)


def _grad_norms_from_deltas(
    acts: list[np.ndarray], deltas: list[np.ndarray], mode: GradNormMode
) -> np.ndarray:
    # Per-sample gradient of a dense layer is delta outer input, so its
    # squared Frobenius norm is |delta|^2 * |input|^2 (plus |delta|^2 for
    # the bias); the values are exact without materializing gradients.
    if mode is GradNormMode.LAST_LAYER:
        layer_ids = [len(deltas) - 1]
    else:
        layer_ids = list(range(len(deltas)))
    norms_sq = np.zeros(acts[0].shape[0])
    for i in layer_ids:
        delta_sq = np.square(deltas[i]).sum(axis=1)
        act_sq = np.square(acts[i]).sum(axis=1)
        norms_sq += delta_sq * (1.0 + act_sq)
    return np.sqrt(norms_sq)


def per_sample_grad_norms(
    model: Model,
    batch: MiniBatch,
    loss: LossKind,
    mode: GradNormMode = GradNormMode.EXACT,
) -> np.ndarray:
    """Euclidean norm of each sample's parameter gradient.

    Exact mode covers every layer; last-layer mode restricts the norm to the
    final layer's parameters, the usual cheap upper-bound proxy.
    """
    acts, out = _forward(model, batch.features)
    deltas = _backward_deltas(model, acts, out, batch.targets, loss)
    return _grad_norms_from_deltas(acts, deltas, mode)


def probe_batch(
    model: Model,
    batch: MiniBatch,
    loss: LossKind,
    want_grad_norms: bool = False,
    mode: GradNormMode = GradNormMode.EXACT,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Per-sample losses, and grad norms when asked, from one shared forward."""
    acts, out = _forward(model, batch.features)
    losses = _per_sample_losses_from_output(out, batch.targets, loss)
    if not want_grad_norms:
        return losses, None
    deltas = _backward_deltas(model, acts, out, batch.targets, loss)
    return losses, _grad_norms_from_deltas(acts, deltas, mode)


def mean_gradient(
    model: Model, x: np.ndarray, targets: np.ndarray, loss: LossKind
) -> tuple[np.ndarray, float]:
    """Flat mean-over-batch gradient and the mean per-sample loss."""
    acts, out = _forward(model, x)
    losses = _per_sample_losses_from_output(out, targets, loss)
    deltas = _backward_deltas(model, acts, out, targets, loss)
    b = x.shape[0]
    grad = np.empty_like(model.params)
    for (w_start, w_stop, b_stop, n_out, n_in), delta, a in zip(
        model._spans, deltas, acts
    ):
        grad[w_start:w_stop] = (delta.T @ a).ravel() / b
        grad[w_stop:b_stop] = delta.sum(axis=0) / b
    return grad, float(losses.mean())


def evaluate(
    model: Model, x: np.ndarray, targets: np.ndarray, loss: LossKind
) -> tuple[float, float | None]:
    """Mean per-sample loss over a split, plus accuracy for classification."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[0] == 0:
        raise ValueError("empty dataset split")
    _, out = _forward(model, x)
    losses = _per_sample_losses_from_output(out, targets, loss)
    accuracy = None
    if loss is LossKind.CROSS_ENTROPY:
        accuracy = float((out.argmax(axis=1) == np.asarray(targets)).mean())
    return float(losses.mean()), accuracy
