"""Multinomial logistic regression trained by full-batch gradient descent."""

import numpy as np

from ..errors import TrainingDiverged

HYPERPARAMETERS = {"lr": 0.1, "epochs": 500, "l2": 0.0}


def validate(hp: dict) -> list[str]:
    problems = []
    if not hp["lr"] > 0:
        problems.append("lr must be positive")
    if not (isinstance(hp["epochs"], int) and hp["epochs"] >= 1):
        problems.append("epochs must be an integer >= 1")
    if not hp["l2"] >= 0:
        problems.append("l2 must be non-negative")
    return problems


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss(W, b, X, Y, l2=0.0) -> float:
    P = softmax(X @ W + b)
    ce = -np.mean(np.log(np.clip((P * Y).sum(axis=1), 1e-300, None)))
    return float(ce + 0.5 * l2 * np.sum(W * W))


def fit(X, y, n_classes, hp, rng=None) -> dict:
    """Zero-initialised weights, so the fit does not consume randomness."""
    n, d = X.shape
    Y = np.eye(n_classes)[y]
    W = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    lr, l2 = hp["lr"], hp["l2"]
    history = []
    for _ in range(hp["epochs"]):
        P = softmax(X @ W + b)
        G = (P - Y) / n
        W -= lr * (X.T @ G + l2 * W)
        b -= lr * G.sum(axis=0)
        cur = loss(W, b, X, Y, l2)
        if not np.isfinite(cur):
            raise TrainingDiverged(f"logistic regression loss became {cur} with {hp}")
        history.append(cur)
    return {"W": W, "b": b, "loss_history": history}


def predict_proba(state, X):
    return softmax(X @ np.asarray(state["W"]) + np.asarray(state["b"]))
