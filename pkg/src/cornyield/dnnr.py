"""Feed-forward neural network regressor trained by backpropagation.

The two production architectures share one shape: an input layer sized to
the encoded feature vector, three ReLU hidden layers of equal width (16 or
64 neurons), and a single linear output neuron; yield is unbounded above,
so the output stays unsquashed. Inputs are expected min-max normalized;
the fitted normalization travels with the model (``norm``) so persistence
and serving can reproduce it, but forward/predict assume it was applied.

Training is plain mini-batch first-order descent on mean absolute error,
either via the adaptive-moment update (default) or the raw gradient step,
fully deterministic under a fixed seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import MinMaxParams
from .errors import LengthMismatchError, NonFiniteLossError, ShapeMismatchError


@dataclass(frozen=True)
class MlpArchitecture:
    input_width: int
    hidden_depth: int = 3
    hidden_width: int = 64
    activation: str = "relu"
    output_width: int = 1

    def __post_init__(self):
        if self.hidden_depth < 1 or self.hidden_width < 1 or self.input_width < 1:
            raise ValueError("all widths/depths must be >= 1")
        if self.activation != "relu":
            raise ValueError("only relu hidden activation is supported")

    def layer_widths(self) -> list[int]:
        return [self.input_width] + [self.hidden_width] * self.hidden_depth + [self.output_width]

    def n_params(self) -> int:
        widths = self.layer_widths()
        return sum(widths[i] * widths[i + 1] + widths[i + 1] for i in range(len(widths) - 1))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    batch_size: int = 100
    learning_rate: float = 0.001
    optimizer: str = "adam"
    seed: int = 0
    loss: str = "mae"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size >= 1 and learning_rate > 0 required")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.loss != "mae":
            raise ValueError("only mae loss is supported")


@dataclass(frozen=True)
class MlpModel:
    layers: tuple          # ((weights in->out, bias), ...) per layer
    architecture: MlpArchitecture
    norm: MinMaxParams | None = None

    def __post_init__(self):
        widths = self.architecture.layer_widths()
        if len(self.layers) != len(widths) - 1:
            raise ValueError("layer count does not match architecture")
        for i, (w, b) in enumerate(self.layers):
            if w.shape != (widths[i], widths[i + 1]) or b.shape != (widths[i + 1],):
                raise ValueError(f"layer {i} shape {w.shape}/{b.shape} breaks the chain")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError("non-finite parameter")


@dataclass
class AdamState:
    """Per-parameter moment accumulators for the adaptive update."""
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_layers(arch: MlpArchitecture, seed: int) -> tuple:
    """Uniform fan-in-scaled start (+-sqrt(6/fan_in)); zero biases.
    ReLU stacks initialized wider than this tend to start half-dead."""
    rng = np.random.Generator(np.random.PCG64(seed))
    widths = arch.layer_widths()
    layers = []
    for i in range(len(widths) - 1):
        bound = np.sqrt(6.0 / widths[i])
        w = rng.uniform(-bound, bound, size=(widths[i], widths[i + 1]))
        layers.append((w, np.zeros(widths[i + 1])))
    return tuple(layers)


def _affine(a: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # einsum's default path contracts each output element in a fixed order
    # regardless of batch size, so a 1-row call is bit-identical to the same
    # row inside a batch (BLAS matmul kernels are shape-dependent and not)
    return np.einsum("bi,io->bo", a, w) + b


def _forward_pass(layers, x: np.ndarray):
    """Returns (output column, pre-activations per layer, activations per layer)."""
    pre = []
    acts = [x]
    a = x
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        z = _affine(a, w, b)
        pre.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return a, pre, acts


def forward(m: MlpModel, x) -> float:
    """Single-row evaluation of the network on a normalized input."""
    xv = np.asarray(x, dtype=np.float64).ravel()
    if xv.size != m.architecture.input_width:
        raise ShapeMismatchError(
            f"input width {xv.size}, expected {m.architecture.input_width}")
    out, _, _ = _forward_pass(m.layers, xv[None, :])
    return float(out[0, 0])


def predict(m: MlpModel, rows) -> np.ndarray:
    """Vectorized forward over a batch of normalized rows."""
    x = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if x.shape[1] != m.architecture.input_width:
        raise ShapeMismatchError(
            f"input width {x.shape[1]}, expected {m.architecture.input_width}")
    out, _, _ = _forward_pass(m.layers, x)
    return out[:, 0]


def loss_mae(pred, target) -> float:
    """Batch training loss: mean absolute deviation."""
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(target, dtype=np.float64).ravel()
    if p.size != t.size:
        raise LengthMismatchError(f"pred {p.size} vs target {t.size}")
    return float(np.mean(np.abs(t - p)))


def backward(m: MlpModel, batch_x, batch_y) -> list:
    """Exact gradients of the batch MAE with respect to every weight and
    bias, by the reverse-mode chain rule.

    Both kinks use the zero subgradient: a zero residual and a zero
    pre-activation contribute nothing. Returns [(dW, db), ...] aligned
    with m.layers.
    """
    x = np.atleast_2d(np.asarray(batch_x, dtype=np.float64))
    y = np.asarray(batch_y, dtype=np.float64).ravel()
    if x.shape[0] == 0:
        raise ShapeMismatchError("empty batch")
    if x.shape[1] != m.architecture.input_width:
        raise ShapeMismatchError(
            f"input width {x.shape[1]}, expected {m.architecture.input_width}")
    out, pre, acts = _forward_pass(m.layers, x)
    b_size = x.shape[0]

    # d(mean|y - yhat|)/d(yhat) = sign(yhat - y) / B, sign(0) = 0
    grad = (np.sign(out[:, 0] - y) / b_size)[:, None]
    grads = [None] * len(m.layers)
    for i in range(len(m.layers) - 1, -1, -1):
        w, _ = m.layers[i]
        grads[i] = (acts[i].T @ grad, grad.sum(axis=0))
        if i > 0:
            grad = (grad @ w.T) * (pre[i - 1] > 0.0)
    return grads


def _apply_sgd(layers, grads, lr):
    return tuple((w - lr * gw, b - lr * gb)
                 for (w, b), (gw, gb) in zip(layers, grads))


def _apply_adam(layers, grads, lr, state: AdamState):
    if not state.m:
        state.m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]
        state.v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]
    state.step_count += 1
    t = state.step_count
    b1, b2, eps = state.beta1, state.beta2, state.epsilon
    new_layers = []
    for i, ((w, b), (gw, gb)) in enumerate(zip(layers, grads)):
        mw = b1 * state.m[i][0] + (1 - b1) * gw
        mb = b1 * state.m[i][1] + (1 - b1) * gb
        vw = b2 * state.v[i][0] + (1 - b2) * gw ** 2
        vb = b2 * state.v[i][1] + (1 - b2) * gb ** 2
        state.m[i] = (mw, mb)
        state.v[i] = (vw, vb)
        mw_hat = mw / (1 - b1 ** t)
        mb_hat = mb / (1 - b1 ** t)
        vw_hat = vw / (1 - b2 ** t)
        vb_hat = vb / (1 - b2 ** t)
        new_layers.append((w - lr * mw_hat / (np.sqrt(vw_hat) + eps),
                           b - lr * mb_hat / (np.sqrt(vb_hat) + eps)))
    return tuple(new_layers)


def train(arch: MlpArchitecture, cfg: TrainConfig, train_set, val_set=None,
          norm: MinMaxParams | None = None):
    """Mini-batch training loop.

    train_set/val_set are (features, targets) pairs of already-normalized
    arrays. Batches are drawn from a fresh seed-driven shuffle each epoch;
    the trailing partial batch is kept. Returns the fitted model and the
    per-epoch loss history [(epoch, train_mae, val_mae), ...] measured by a
    full pass at the end of each epoch (val_mae is NaN without a val set).
    """
    x_train = np.atleast_2d(np.asarray(train_set[0], dtype=np.float64))
    y_train = np.asarray(train_set[1], dtype=np.float64).ravel()
    if x_train.shape[0] != y_train.size:
        raise ShapeMismatchError("feature/target row counts differ")
    if x_train.shape[1] != arch.input_width:
        raise ShapeMismatchError(
            f"training width {x_train.shape[1]}, architecture expects {arch.input_width}")

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    layers = init_layers(arch, cfg.seed)
    adam = AdamState()
    model = MlpModel(layers, arch, norm)
    history = []
    n = x_train.shape[0]

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            grads = backward(model, x_train[idx], y_train[idx])
            if cfg.optimizer == "adam":
                layers = _apply_adam(model.layers, grads, cfg.learning_rate, adam)
            else:
                layers = _apply_sgd(model.layers, grads, cfg.learning_rate)
            model = MlpModel(layers, arch, norm)

        train_mae = loss_mae(predict(model, x_train), y_train)
        if val_set is not None:
            val_mae = loss_mae(predict(model, np.atleast_2d(val_set[0])),
                               np.asarray(val_set[1]).ravel())
        else:
            val_mae = float("nan")
        if not np.isfinite(train_mae):
            raise NonFiniteLossError(f"training diverged at epoch {epoch}")
        history.append((epoch, train_mae, val_mae))

    return model, history
