"""Generative adversarial imputation.

Generator and discriminator are single-hidden-layer perceptrons (tanh
hidden, sigmoid output). The generator sees noise-filled data plus the
observedness mask; the discriminator sees the completed data plus a hint
and predicts the mask. Training is plain numpy with hand-written
gradients and Adam updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

NOISE_SCALE = 0.01


class GainTrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class GainConfig:
    hidden_width: int | None = None  # None: block width
    hint_rate: float = 0.9
    alpha: float = 100.0
    batch_size: int = 128
    steps: int = 3000
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.hint_rate <= 1.0:
            raise ValueError("hint_rate must lie in [0, 1]")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.batch_size < 1 or self.steps < 1 or self.learning_rate <= 0:
            raise ValueError("batch_size, steps and learning_rate must be positive")
        if self.hidden_width is not None and self.hidden_width < 1:
            raise ValueError("hidden_width must be positive")


def init_net(n_in: int, hidden: int, n_out: int, rng) -> dict:
    def xavier(a, b):
        return rng.normal(0.0, np.sqrt(2.0 / (a + b)), size=(a, b))

    return {"W1": xavier(n_in, hidden), "b1": np.zeros(hidden),
            "W2": xavier(hidden, n_out), "b2": np.zeros(n_out)}


def net_forward(p: dict, X: np.ndarray):
    A = np.tanh(X @ p["W1"] + p["b1"])
    return A, A @ p["W2"] + p["b2"]


def net_backward(p: dict, X: np.ndarray, A: np.ndarray, dlogit: np.ndarray):
    """Parameter gradients and input gradient given d(loss)/d(output logit)."""
    dA = dlogit @ p["W2"].T
    dZ = dA * (1.0 - A ** 2)
    grads = {"W2": A.T @ dlogit, "b2": dlogit.sum(axis=0),
             "W1": X.T @ dZ, "b1": dZ.sum(axis=0)}
    return grads, dZ @ p["W1"].T


def hint_vector(M: np.ndarray, hint_rate: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Hint ``H`` equal to the mask where revealed and 0.5 elsewhere; also
    returns the reveal indicator ``R``."""
    R = (rng.random(M.shape) < hint_rate).astype(float)
    return R * M + 0.5 * (1.0 - R), R


def discriminator_loss(d: dict, X_hat, H, M, R):
    """Mask log-likelihood loss on unrevealed entries (``R == 0``)."""
    inp = np.hstack([X_hat, H])
    A, z = net_forward(d, inp)
    U = 1.0 - R
    nu = U.sum()
    if nu == 0:
        return 0.0, {k: np.zeros_like(v) for k, v in d.items()}
    loss = -(U * (M * log_expit(z) + (1 - M) * log_expit(-z))).sum() / nu
    dz = U * (expit(z) - M) / nu
    grads, _ = net_backward(d, inp, A, dz)
    return float(loss), grads


def generator_loss(g: dict, d: dict, X_tilde, M, H, R, alpha: float):
    """Adversarial loss on unrevealed imputed entries plus ``alpha`` times the
    mean squared reconstruction error on observed entries."""
    g_in = np.hstack([X_tilde, M])
    Ag, zg = net_forward(g, g_in)
    G = expit(zg)
    X_hat = M * X_tilde + (1 - M) * G
    d_in = np.hstack([X_hat, H])
    Ad, zd = net_forward(d, d_in)
    U = 1.0 - R
    nu = U.sum()
    nm = M.sum()
    w = X_tilde.shape[1]

    adv = 0.0
    dG = np.zeros_like(G)
    if nu > 0:
        adv = -(U * (1 - M) * log_expit(zd)).sum() / nu
        dzd = -U * (1 - M) * (1.0 - expit(zd)) / nu
        _, d_in_grad = net_backward(d, d_in, Ad, dzd)
        dG += (1 - M) * d_in_grad[:, :w]
    rec = 0.0
    if nm > 0:
        rec = (M * (X_tilde - G) ** 2).sum() / nm
        dG += alpha * 2.0 * M * (G - X_tilde) / nm
    grads, _ = net_backward(g, g_in, Ag, dG * G * (1 - G))
    return float(adv + alpha * rec), grads, float(adv), float(rec)


class _Adam:
    def __init__(self, params: dict, lr: float):
        self.lr = lr
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1, b2 = 0.9, 0.999
        for k in params:
            self.m[k] = b1 * self.m[k] + (1 - b1) * grads[k]
            self.v[k] = b2 * self.v[k] + (1 - b2) * grads[k] ** 2
            mhat = self.m[k] / (1 - b1 ** self.t)
            vhat = self.v[k] / (1 - b2 ** self.t)
            params[k] -= self.lr * mhat / (np.sqrt(vhat) + 1e-8)


@dataclass
class GainBlockModel:
    lo: np.ndarray
    span: np.ndarray
    generator: dict
    discriminator: dict
    history: list = field(default_factory=list)

    def scale(self, B):
        return (B - self.lo) / self.span

    def unscale(self, S):
        return S * self.span + self.lo


@dataclass
class GainModel:
    config: GainConfig
    blocks: list  # (column indices, GainBlockModel)


def train_gain_block(B: np.ndarray, cfg: GainConfig, rng) -> GainBlockModel:
    B = np.asarray(B, dtype=float)
    n, w = B.shape
    lo = np.nanmin(np.where(np.isnan(B), np.inf, B), axis=0)
    hi = np.nanmax(np.where(np.isnan(B), -np.inf, B), axis=0)
    lo = np.where(np.isfinite(lo), lo, 0.0)
    hi = np.where(np.isfinite(hi), hi, 1.0)
    span = np.where(hi > lo, hi - lo, 1.0)
    M_all = (~np.isnan(B)).astype(float)
    S = np.where(M_all > 0, (B - lo) / span, 0.0)
    hidden = cfg.hidden_width or w
    g = init_net(2 * w, hidden, w, rng)
    d = init_net(2 * w, hidden, w, rng)
    opt_g, opt_d = _Adam(g, cfg.learning_rate), _Adam(d, cfg.learning_rate)
    model = GainBlockModel(lo, span, g, d)
    bs = min(cfg.batch_size, n)
    for step in range(cfg.steps):
        idx = rng.choice(n, size=bs, replace=False)
        M = M_all[idx]
        Xt = M * S[idx] + (1 - M) * rng.uniform(0.0, NOISE_SCALE, size=(bs, w))
        H, R = hint_vector(M, cfg.hint_rate, rng)

        G = expit(net_forward(g, np.hstack([Xt, M]))[1])
        X_hat = M * Xt + (1 - M) * G
        d_loss, d_grads = discriminator_loss(d, X_hat, H, M, R)
        if not np.isfinite(d_loss):
            raise GainTrainingError(f"non-finite discriminator loss at step {step}: {d_loss}")
        opt_d.step(d, d_grads)
        g_loss, g_grads, adv, rec = generator_loss(g, d, Xt, M, H, R, cfg.alpha)
        if not np.isfinite(g_loss):
            raise GainTrainingError(
                f"non-finite generator loss at step {step}: adversarial {adv}, "
                f"reconstruction {rec}, last discriminator loss {d_loss}"
            )
        opt_g.step(g, g_grads)
        if step % 100 == 0 or step == cfg.steps - 1:
            model.history.append((step, d_loss, adv, rec))
    return model


def impute_gain_block(model: GainBlockModel, B: np.ndarray, rng) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    observed = ~np.isnan(B)
    M = observed.astype(float)
    S = np.where(observed, model.scale(np.where(observed, B, 0.0)), 0.0)
    Xt = M * S + (1 - M) * rng.uniform(0.0, NOISE_SCALE, size=B.shape)
    G = expit(net_forward(model.generator, np.hstack([Xt, M]))[1])
    # observed cells are copied back verbatim, not round-tripped through scaling
    return np.where(observed, B, model.unscale(G))


def train_gain(X: np.ndarray, plan, cfg: GainConfig, aux: np.ndarray | None = None) -> GainModel:
    X = np.asarray(X, dtype=float)
    rng = np.random.default_rng(cfg.seed)
    blocks = []
    for _, cols in plan.blocks:
        cols = list(cols)
        B = X[:, cols] if aux is None else np.hstack([X[:, cols], aux])
        blocks.append((cols, train_gain_block(B, cfg, rng)))
    return GainModel(cfg, blocks)


def impute_gain(model: GainModel, X: np.ndarray, aux: np.ndarray | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    out = X.copy()
    rng = np.random.default_rng([model.config.seed, 1])
    for cols, bm in model.blocks:
        B = X[:, cols] if aux is None else np.hstack([X[:, cols], aux])
        out[:, cols] = impute_gain_block(bm, B, rng)[:, :len(cols)]
    return out
