from __future__ import annotations

import numpy as np
from scipy.special import expit, log_expit

from .base import Classifier, check_labels


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Mean negative log-likelihood plus ``lam/2 * ||w||^2`` (intercept unpenalized)."""
    z = X @ w + b
    nll = -(y * log_expit(z) + (1 - y) * log_expit(-z)).mean()
    return float(nll + 0.5 * lam * w @ w)


def logistic_grad(w, b, X, y, lam) -> tuple[np.ndarray, float]:
    r = expit(X @ w + b) - y
    return X.T @ r / len(y) + lam * w, float(r.mean())


class LogisticRegression(Classifier):
    """L2-penalized logistic regression fitted by damped Newton steps.

    Each step halves until the objective does not increase, so the recorded
    ``loss_history_`` is monotone. Stops when the gradient norm is at most
    ``tol``; otherwise returns the last iterate with ``converged_ = False``.
    """

    kind = "logistic"

    def __init__(self, l2_lambda: float = 1e-3, max_iter: int = 100, tol: float = 1e-8):
        if l2_lambda < 0 or max_iter < 1 or tol <= 0:
            raise ValueError("l2_lambda >= 0, max_iter >= 1 and tol > 0 required")
        self.l2_lambda = float(l2_lambda)
        self.max_iter = int(max_iter)
        self.tol = float(tol)
        self.coef_ = None
        self.intercept_ = 0.0
        self.converged_ = False
        self.n_iter_ = 0
        self.loss_history_: list[float] = []

    def fit(self, X, y):
        X = self.check_input(X)
        y = check_labels(y)
        if len(np.unique(y)) < 2:
            raise ValueError("both classes must be present")
        n, d = X.shape
        lam = self.l2_lambda
        Xa = np.hstack([np.ones((n, 1)), X])
        theta = np.zeros(d + 1)
        penalty = np.full(d + 1, lam)
        penalty[0] = 0.0

        def loss(t):
            return logistic_loss(t[1:], t[0], X, y, lam)

        def grad(t):
            gw, gb = logistic_grad(t[1:], t[0], X, y, lam)
            return np.concatenate([[gb], gw])

        current = loss(theta)
        self.loss_history_ = [current]
        self.converged_ = False
        for it in range(self.max_iter):
            gvec = grad(theta)
            if np.linalg.norm(gvec) <= self.tol:
                self.converged_ = True
                break
            p = expit(Xa @ theta)
            wts = p * (1 - p)
            H = (Xa * wts[:, None]).T @ Xa / n + np.diag(penalty)
            H[np.diag_indices_from(H)] += 1e-12
            try:
                step = np.linalg.solve(H, gvec)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(H, gvec, rcond=None)[0]
            t = 1.0
            for _ in range(50):
                cand = theta - t * step
                new = loss(cand)
                if new <= current:
                    break
                t *= 0.5
            else:
                break
            theta, current = cand, new
            self.loss_history_.append(current)
            self.n_iter_ = it + 1
        else:
            self.converged_ = bool(np.linalg.norm(grad(theta)) <= self.tol)
        self.intercept_ = float(theta[0])
        self.coef_ = theta[1:].copy()
        return self

    def margin(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef_ + self.intercept_

    def get_params(self) -> dict:
        return {"l2_lambda": self.l2_lambda, "max_iter": self.max_iter, "tol": self.tol}

    def get_state(self) -> dict:
        return {"coef": self.coef_.tolist(), "intercept": self.intercept_,
                "converged": self.converged_, "n_iter": self.n_iter_}

    def set_state(self, state: dict) -> None:
        self.coef_ = np.asarray(state["coef"], dtype=float)
        self.intercept_ = float(state["intercept"])
        self.converged_ = bool(state["converged"])
        self.n_iter_ = int(state["n_iter"])
