"""Stratified folds, fold-local standardization and L2 logistic regression."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .metrics import f1_score, roc_auc


def stratified_kfold(labels, k_folds: int = 5, seed: int = 0) -> np.ndarray:
    """Fold index per item.

    Each class is shuffled and dealt round-robin, continuing the dealing
    position across classes, so fold sizes differ by at most one and every
    class is split as evenly as possible.
    """
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    folds = np.empty(y.size, dtype=np.int64)
    start = 0
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.size < k_folds:
            raise ValueError(f"class {cls!r} has {idx.size} members, fewer than {k_folds} folds")
        idx = rng.permutation(idx)
        folds[idx] = (start + np.arange(idx.size)) % k_folds
        start = (start + idx.size) % k_folds
    return folds


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray  # 0 for constant columns

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        sd = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(sd > 0, sd, 0.0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        safe = np.where(self.scale > 0, self.scale, 1.0)
        return np.where(self.scale > 0, (X - self.mean) / safe, 0.0)


@dataclass
class LogisticModel:
    coef: np.ndarray
    intercept: float
    n_iter: int
    converged: bool
    loss: float

    def decision(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef + self.intercept

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision(X))


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def logistic_loss(coef, intercept, X, y, l2: float) -> float:
    """Summed negative log-likelihood plus (l2 / 2) * ||coef||^2; the intercept is not penalised."""
    z = X @ coef + intercept
    nll = np.sum(np.logaddexp(0.0, z) - y * z)
    return float(nll + 0.5 * l2 * np.dot(coef, coef))


def fit_logistic(X, y, l2: float = 1.0, max_iter: int = 1000, tol: float = 1e-8,
                 columns: Optional[Sequence[str]] = None) -> LogisticModel:
    """Newton's method with backtracking on the L2-penalised log-loss.

    Converged when the gradient max-norm drops below ``tol``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X must be (n, p) with one label per row")
    bad = ~np.isfinite(X).all(axis=0)
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        name = columns[j] if columns is not None else f"column {j}"
        raise ValueError(f"non-finite feature values in {name}")
    n, p = X.shape
    A = np.column_stack([X, np.ones(n)])
    theta = np.zeros(p + 1)
    pen = np.full(p + 1, l2)
    pen[-1] = 0.0

    def loss(t):
        return logistic_loss(t[:-1], t[-1], X, y, l2)

    cur = loss(theta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = _sigmoid(A @ theta)
        grad = A.T @ (mu - y) + pen * theta
        if np.max(np.abs(grad)) < tol:
            converged = True
            it -= 1
            break
        w = mu * (1.0 - mu)
        H = (A * w[:, None]).T @ A + np.diag(pen) + 1e-12 * np.eye(p + 1)
        step = np.linalg.solve(H, grad)
        t = 1.0
        while True:
            cand = theta - t * step
            new = loss(cand)
            if new <= cur - 1e-4 * t * float(grad @ step) or t < 1e-10:
                break
            t *= 0.5
        theta, cur = cand, new
    return LogisticModel(theta[:-1].copy(), float(theta[-1]), it, converged, cur)


@dataclass
class CvResult:
    """Fold-level raw values; summaries are recomputed from them."""

    fold_auc: list = field(default_factory=list)
    fold_f1: list = field(default_factory=list)
    fold_sizes: list = field(default_factory=list)
    converged: list = field(default_factory=list)

    @staticmethod
    def _sd(v) -> float:
        return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0

    @property
    def auc_mean(self) -> float:
        return float(np.mean(self.fold_auc))

    @property
    def auc_sd(self) -> float:
        return self._sd(self.fold_auc)

    @property
    def f1_mean(self) -> float:
        return float(np.mean(self.fold_f1))

    @property
    def f1_sd(self) -> float:
        return self._sd(self.fold_f1)


def cross_validate(X, y, k_folds: int = 5, seed: int = 0, l2: float = 1.0,
                   columns: Optional[Sequence[str]] = None, workers: int = 1) -> CvResult:
    """k-fold CV of standardized logistic regression; AUC and F1 per fold."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    folds = stratified_kfold(y, k_folds, seed)

    def one(f):
        train, test = folds != f, folds == f
        std = Standardizer.fit(X[train])
        model = fit_logistic(std.transform(X[train]), y[train], l2=l2, columns=columns)
        prob = model.predict_proba(std.transform(X[test]))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            f1 = f1_score(prob, y[test])
        return roc_auc(prob, y[test]), f1, int(test.sum()), model.converged

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(k_folds)))
    else:
        rows = [one(f) for f in range(k_folds)]
    out = CvResult()
    for auc, f1, size, conv in rows:
        out.fold_auc.append(float(auc))
        out.fold_f1.append(float(f1))
        out.fold_sizes.append(size)
        out.converged.append(bool(conv))
    return out
