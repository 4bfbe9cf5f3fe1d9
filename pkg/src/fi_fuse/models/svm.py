"""One-vs-rest soft-margin SVMs with an RBF kernel, solved by SMO.

The binary solver follows the working-set scheme used by LIBSVM: pick the
maximal violating pair under the first-order rule, solve the two-variable
subproblem analytically, and clip to the box ``[0, C_reg]``. Class
probabilities are a softmax over the per-class decision values.
"""

import numpy as np

from ..errors import TrainingDiverged

HYPERPARAMETERS = {"C_reg": 1.0, "gamma": 1.0, "tol": 1e-3, "max_iter": 100_000}

TAU = 1e-12


def validate(hp: dict) -> list[str]:
    problems = []
    if not hp["C_reg"] > 0:
        problems.append("C_reg must be positive")
    if not hp["gamma"] > 0:
        problems.append("gamma must be positive")
    if not hp["tol"] > 0:
        problems.append("tol must be positive")
    if not (isinstance(hp["max_iter"], int) and hp["max_iter"] >= 1):
        problems.append("max_iter must be an integer >= 1")
    return problems


def rbf_kernel(A, B, gamma):
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def smo(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
        max_iter: int = 100_000) -> tuple[np.ndarray, float]:
    """Solve the binary dual for labels ``y`` in {-1, +1}.

    Returns ``(alpha, b)`` with decision function ``sum(alpha*y*K) + b``.
    """
    n = y.size
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    pos = y > 0
    for _ in range(max_iter):
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        score = -y * G
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        if score[i] - score[j] < tol:
            break
        ai, aj = alpha[i], alpha[j]
        Qij = Q[i, j]
        if y[i] != y[j]:
            quad = max(QD[i] + QD[j] + 2.0 * Qij, TAU)
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = max(QD[i] + QD[j] - 2.0 * Qij, TAU)
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total
        G += Q[i] * (ni - ai) + Q[j] * (nj - aj)
        alpha[i], alpha[j] = ni, nj
        if not np.isfinite(G[i]):
            raise TrainingDiverged(f"SMO gradient became non-finite (C_reg={C})")
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yG[free].mean()
    else:
        ub = np.where(np.where(pos, alpha >= C, alpha <= 0), yG, np.inf).min()
        lb = np.where(np.where(pos, alpha <= 0, alpha >= C), yG, -np.inf).max()
        rho = (ub + lb) / 2.0 if np.isfinite(ub) and np.isfinite(lb) else 0.0
    return alpha, float(-rho)


def fit(X, y, n_classes, hp, rng=None) -> dict:
    K = rbf_kernel(X, X, hp["gamma"])
    targets = [1] if n_classes == 2 else range(n_classes)
    coefs, biases = [], []
    for c in targets:
        yb = np.where(y == c, 1.0, -1.0)
        alpha, b = smo(K, yb, hp["C_reg"], hp["tol"], hp["max_iter"])
        coefs.append(alpha * yb)
        biases.append(b)
    coef = np.array(coefs)
    support = np.flatnonzero(np.any(coef != 0, axis=0))
    return {
        "support_vectors": X[support],
        "dual_coef": coef[:, support],
        "bias": np.array(biases),
        "gamma": hp["gamma"],
        "binary": n_classes == 2,
    }


def decision_function(state, X):
    sv = np.asarray(state["support_vectors"], dtype=float).reshape(-1, X.shape[1])
    coef = np.asarray(state["dual_coef"], dtype=float).reshape(-1, sv.shape[0])
    K = rbf_kernel(X, sv, state["gamma"])
    f = K @ coef.T + np.asarray(state["bias"], dtype=float)
    if state["binary"]:
        f = np.hstack([-f, f])
    return f


def predict_proba(state, X):
    f = decision_function(state, X)
    f = f - f.max(axis=1, keepdims=True)
    e = np.exp(f)
    return e / e.sum(axis=1, keepdims=True)
