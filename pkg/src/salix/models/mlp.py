"""Dense feed-forward regressor trained with mini-batch weighted squared error.

Features are used as given (standardise them first).  The target is
centred and scaled internally, and predictions are mapped back to the
original units.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError, DivergenceError
from .base import TrainedModel, as_matrix, check_xyw, register

LEAKY_SLOPE = 0.01


@dataclass(frozen=True)
class MlpParams:
    hidden_layers: tuple = (10, 10)
    activation: str = "relu"
    epochs: int = 50
    batch_size: int = 32
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if not self.hidden_layers:
            raise ConfigError("at least one hidden layer is required")
        if any(h < 1 for h in self.hidden_layers):
            raise ConfigError("hidden layer widths must be >= 1")
        if self.activation not in ("relu", "leaky-relu"):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.optimizer not in ("adam", "sgd-momentum"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if int(self.epochs) < 1 or int(self.batch_size) < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


def _act(z, activation):
    if activation == "relu":
        return np.maximum(z, 0.0)
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def _act_grad(z, activation):
    if activation == "relu":
        return (z > 0).astype(float)
    return np.where(z > 0, 1.0, LEAKY_SLOPE)


def init_layers(sizes, rng):
    """Glorot-uniform weights, zero biases."""
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append((rng.uniform(-lim, lim, size=(fan_in, fan_out)), np.zeros(fan_out)))
    return layers


def forward(layers, X, activation):
    h = X
    for W, b in layers[:-1]:
        h = _act(h @ W + b, activation)
    W, b = layers[-1]
    return (h @ W + b)[:, 0]


def loss_and_grad(layers, X, y, w, activation):
    """Weighted MSE ``sum w (f(x) - y)^2 / sum w`` and its gradient per layer."""
    hs = [X]
    zs = []
    h = X
    for W, b in layers[:-1]:
        z = h @ W + b
        zs.append(z)
        h = _act(z, activation)
        hs.append(h)
    W, b = layers[-1]
    out = (h @ W + b)[:, 0]
    sw = w.sum()
    err = out - y
    loss = float(w @ (err * err) / sw)
    delta = (2.0 * w * err / sw)[:, None]
    grads = [None] * len(layers)
    for li in range(len(layers) - 1, -1, -1):
        W, _ = layers[li]
        grads[li] = (hs[li].T @ delta, delta.sum(axis=0))
        if li > 0:
            delta = (delta @ W.T) * _act_grad(zs[li - 1], activation)
    return loss, grads


class _Adam:
    def __init__(self, layers, lr, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros_like(a) for pair in layers for a in pair]
        self.v = [np.zeros_like(a) for pair in layers for a in pair]
        self.t = 0

    def step(self, layers, grads):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        params = [a for pair in layers for a in pair]
        flat = [g for pair in grads for g in pair]
        new = []
        for i, (p, g) in enumerate(zip(params, flat)):
            self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g * g
            new.append(p - self.lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps))
        return list(zip(new[0::2], new[1::2]))


class _Momentum:
    def __init__(self, layers, lr, momentum):
        self.lr, self.mu = lr, momentum
        self.vel = [(np.zeros_like(W), np.zeros_like(b)) for W, b in layers]

    def step(self, layers, grads):
        out = []
        for i, ((W, b), (gW, gb)) in enumerate(zip(layers, grads)):
            vW = self.mu * self.vel[i][0] - self.lr * gW
            vb = self.mu * self.vel[i][1] - self.lr * gb
            self.vel[i] = (vW, vb)
            out.append((W + vW, b + vb))
        return out


@register("mlp")
class MlpModel(TrainedModel):
    def __init__(self, feature_names, config, layers, y_mean, y_scale, history=()):
        super().__init__(feature_names, config)
        self.layers = tuple((np.asarray(W, dtype=float), np.asarray(b, dtype=float)) for W, b in layers)
        self.y_mean = float(y_mean)
        self.y_scale = float(y_scale)
        self.history = tuple(float(v) for v in history)

    def _predict(self, X):
        return self.y_mean + self.y_scale * forward(self.layers, X, self.config["activation"])

    def _state(self):
        return {"layers": [[W.tolist(), b.tolist()] for W, b in self.layers],
                "y_mean": self.y_mean, "y_scale": self.y_scale, "history": list(self.history)}

    @classmethod
    def _from_state(cls, names, config, state):
        return cls(names, config, [(W, b) for W, b in state["layers"]], state["y_mean"],
                   state["y_scale"], state.get("history", ()))


def fit_mlp(X, y, w=None, params: MlpParams | None = None, feature_names=None) -> MlpModel:
    params = params or MlpParams()
    X, names = as_matrix(X, feature_names)
    y, w = check_xyw(X, y, w)
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ConfigError("fit_mlp needs finite inputs")
    rng = np.random.default_rng(int(params.seed))
    sw = w.sum()
    y_mean = float(w @ y / sw)
    y_scale = float(np.sqrt(w @ (y - y_mean) ** 2 / sw)) or 1.0
    ys = (y - y_mean) / y_scale

    sizes = [X.shape[1], *params.hidden_layers, 1]
    layers = init_layers(sizes, rng)
    if params.optimizer == "adam":
        opt = _Adam(layers, params.learning_rate)
    else:
        opt = _Momentum(layers, params.learning_rate, params.momentum)
    n = X.shape[0]
    bs = min(int(params.batch_size), n)
    history = []
    for epoch in range(1, int(params.epochs) + 1):
        order = np.arange(n) if bs == n else rng.permutation(n)
        for s in range(0, n, bs):
            idx = order[s:s + bs]
            _, grads = loss_and_grad(layers, X[idx], ys[idx], w[idx], params.activation)
            layers = opt.step(layers, grads)
        loss = float(w @ (forward(layers, X, params.activation) - ys) ** 2 / sw)
        if not np.isfinite(loss):
            raise DivergenceError(epoch, loss)
        history.append(loss)
    config = asdict(params)
    config["hidden_layers"] = list(params.hidden_layers)
    return MlpModel(names, config, layers, y_mean, y_scale, history)
