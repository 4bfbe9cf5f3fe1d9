"""Single hidden layer ReLU network with softmax output, trained by mini-batch SGD."""

import numpy as np

from ..errors import TrainingDiverged
from .logistic import softmax

HYPERPARAMETERS = {"lr": 0.01, "batch": 16, "epochs": 100, "hidden": 16}


def validate(hp: dict) -> list[str]:
    problems = []
    if not hp["lr"] > 0:
        problems.append("lr must be positive")
    for key in ("batch", "epochs", "hidden"):
        if not (isinstance(hp[key], int) and hp[key] >= 1):
            problems.append(f"{key} must be an integer >= 1")
    return problems


def fit(X, y, n_classes, hp, rng) -> dict:
    n, d = X.shape
    h = hp["hidden"]
    W1 = rng.standard_normal((d, h)) * np.sqrt(2.0 / d)
    b1 = np.zeros(h)
    W2 = rng.standard_normal((h, n_classes)) * np.sqrt(2.0 / h)
    b2 = np.zeros(n_classes)
    Y = np.eye(n_classes)[y]
    lr, bs = hp["lr"], hp["batch"]
    history = []
    for _ in range(hp["epochs"]):
        order = rng.permutation(n)
        for s in range(0, n, bs):
            idx = order[s:s + bs]
            xb, yb = X[idx], Y[idx]
            a = xb @ W1 + b1
            hid = np.maximum(a, 0.0)
            P = softmax(hid @ W2 + b2)
            g2 = (P - yb) / idx.size
            gh = (g2 @ W2.T) * (a > 0)
            W2 -= lr * (hid.T @ g2)
            b2 -= lr * g2.sum(axis=0)
            W1 -= lr * (xb.T @ gh)
            b1 -= lr * gh.sum(axis=0)
        P = softmax(np.maximum(X @ W1 + b1, 0.0) @ W2 + b2)
        cur = float(-np.mean(np.log(np.clip((P * Y).sum(axis=1), 1e-300, None))))
        if not np.isfinite(cur) or not np.all(np.isfinite(W1)):
            raise TrainingDiverged(f"neural network loss became non-finite with {hp}")
        history.append(cur)
    return {"W1": W1, "b1": b1, "W2": W2, "b2": b2, "loss_history": history}


def predict_proba(state, X):
    hid = np.maximum(X @ np.asarray(state["W1"]) + np.asarray(state["b1"]), 0.0)
    return softmax(hid @ np.asarray(state["W2"]) + np.asarray(state["b2"]))
