from __future__ import annotations

import numpy as np
from scipy.special import expit, log_expit

from .base import Classifier, TrainingError, check_labels

PARAM_NAMES = ("W1", "b1", "w2", "b2")


def mlp_forward(params: dict, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Returns ``(hidden activations, output margin)``."""
    A = np.maximum(X @ params["W1"] + params["b1"], 0.0)
    return A, A @ params["w2"] + params["b2"]


def mlp_loss_and_grad(params: dict, X: np.ndarray, y: np.ndarray, lam: float):
    """Mean log-loss + ``lam/2`` times the squared weight norms (biases free)."""
    A, z = mlp_forward(params, X)
    n = len(y)
    loss = -(y * log_expit(z) + (1 - y) * log_expit(-z)).mean()
    loss += 0.5 * lam * ((params["W1"] ** 2).sum() + (params["w2"] ** 2).sum())
    dz = (expit(z) - y) / n
    grads = {
        "w2": A.T @ dz + lam * params["w2"],
        "b2": np.array(dz.sum()),
    }
    dA = np.outer(dz, params["w2"]) * (A > 0)
    grads["W1"] = X.T @ dA + lam * params["W1"]
    grads["b1"] = dA.sum(axis=0)
    return float(loss), grads


class MLPClassifier(Classifier):
    """One ReLU hidden layer and a sigmoid output, trained by minibatch Adam.

    The output layer starts at zero, so an untrained network scores 0.5.
    """

    kind = "mlp"

    def __init__(self, hidden_width: int = 32, epochs: int = 200, learning_rate: float = 1e-2,
                 l2_lambda: float = 1e-4, batch_size: int = 256, seed: int = 0):
        if hidden_width < 1 or epochs < 1 or batch_size < 1:
            raise ValueError("hidden_width, epochs and batch_size must be positive")
        if learning_rate <= 0 or l2_lambda < 0:
            raise ValueError("learning_rate > 0 and l2_lambda >= 0 required")
        self.hidden_width = int(hidden_width)
        self.epochs = int(epochs)
        self.learning_rate = float(learning_rate)
        self.l2_lambda = float(l2_lambda)
        self.batch_size = int(batch_size)
        self.seed = int(seed)
        self.params_: dict | None = None
        self.loss_history_: list[float] = []

    def init_params(self, d: int, rng: np.random.Generator) -> dict:
        return {
            "W1": rng.normal(0.0, np.sqrt(2.0 / d), size=(d, self.hidden_width)),
            "b1": np.zeros(self.hidden_width),
            "w2": np.zeros(self.hidden_width),
            "b2": np.array(0.0),
        }

    def fit(self, X, y):
        X = self.check_input(X)
        y = check_labels(y)
        n, d = X.shape
        rng = np.random.default_rng(self.seed)
        params = self.init_params(d, rng)
        m = {k: np.zeros_like(v) for k, v in params.items()}
        v = {k: np.zeros_like(p) for k, p in params.items()}
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        step = 0
        self.loss_history_ = []
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, self.batch_size):
                batch = order[start:start + self.batch_size]
                loss, grads = mlp_loss_and_grad(params, X[batch], y[batch], self.l2_lambda)
                if not np.isfinite(loss):
                    raise TrainingError(
                        f"non-finite MLP loss at epoch {epoch}, batch offset {start}; "
                        f"max |W1| = {np.abs(params['W1']).max():.3g}"
                    )
                total += loss * len(batch)
                step += 1
                for k in PARAM_NAMES:
                    m[k] = beta1 * m[k] + (1 - beta1) * grads[k]
                    v[k] = beta2 * v[k] + (1 - beta2) * grads[k] ** 2
                    mhat = m[k] / (1 - beta1 ** step)
                    vhat = v[k] / (1 - beta2 ** step)
                    params[k] = params[k] - self.learning_rate * mhat / (np.sqrt(vhat) + eps)
            self.loss_history_.append(total / n)
        self.params_ = params
        return self

    def margin(self, X) -> np.ndarray:
        return mlp_forward(self.params_, np.asarray(X, dtype=float))[1]

    def get_params(self) -> dict:
        return {"hidden_width": self.hidden_width, "epochs": self.epochs,
                "learning_rate": self.learning_rate, "l2_lambda": self.l2_lambda,
                "batch_size": self.batch_size, "seed": self.seed}

    def get_state(self) -> dict:
        return {k: np.asarray(self.params_[k]).tolist() for k in PARAM_NAMES}

    def set_state(self, state: dict) -> None:
        self.params_ = {k: np.asarray(state[k], dtype=float) for k in PARAM_NAMES}
