"""Linear baselines over TF-IDF vectors.

Two model kinds share one artifact shape:
  multinomial_logistic: softmax regression, cross-entropy + (1/(2C))||W||^2
  linear_svm_ovr:       one-vs-rest squared hinge + (1/(2C))||w||^2
Both are fit by full-batch gradient descent with Armijo backtracking, so the
objective is non-increasing per epoch and training is deterministic. The
regularization strength C is chosen by stratified k-fold cross-validation
maximizing macro F1, ties resolved toward the larger C.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .features import SparseVector
from .labels import ClassLabel
from .metrics import confusion, report

KIND_LOGREG = "multinomial_logistic"
KIND_SVM = "linear_svm_ovr"

ARTIFACT_VERSION = 1
GRAD_TOL = 1e-4
MAX_EPOCHS = 1000
ARMIJO_C = 1e-4
MIN_STEP = 1e-14

LOGREG_C_GRID = (0.1, 1.0, 10.0)
SVM_C_GRID = (0.01, 0.1, 1.0, 10.0)
DEFAULT_FOLDS = 5


class UnsupportedModelOperation(TypeError):
    """Operation not defined for this model kind."""


@dataclass
class FitInfo:
    epochs: int
    converged: bool
    final_grad_norm: float
    loss_history: list[float] = field(default_factory=list)


@dataclass
class LinearClassifier:
    kind: str
    classes: tuple[ClassLabel, ...]
    weights: np.ndarray  # [n_classes, n_features]
    bias: np.ndarray  # [n_classes]
    chosen_C: float
    training_meta: dict

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.shape[0] != len(self.classes) or self.bias.shape[0] != len(self.classes):
            raise ValueError("weight/bias rows must match the class count")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("model parameters must be finite")

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def decision_scores(self, x: SparseVector) -> np.ndarray:
        scores = self.bias.copy()
        for idx, val in x:
            if idx < self.n_features:
                scores += self.weights[:, idx] * val
        return scores

    def predict_proba(self, x: SparseVector) -> np.ndarray:
        """Softmax class probabilities; logistic models only."""
        if self.kind != KIND_LOGREG:
            raise UnsupportedModelOperation(
                f"predict_proba requires {KIND_LOGREG}, got {self.kind}"
            )
        return _softmax(self.decision_scores(x)[None, :])[0]

    def predict(self, x: SparseVector) -> ClassLabel:
        """Argmax of decision scores; ties go to the first class in order."""
        return self.classes[int(np.argmax(self.decision_scores(x)))]

    def to_json(self) -> dict:
        return {
            "version": ARTIFACT_VERSION,
            "kind": self.kind,
            "classes": [c.value for c in self.classes],
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "chosen_C": self.chosen_C,
            "training_meta": self.training_meta,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LinearClassifier":
        if obj.get("version") != ARTIFACT_VERSION:
            raise ValueError(f"unsupported model artifact version: {obj.get('version')}")
        return cls(
            kind=obj["kind"],
            classes=tuple(ClassLabel(c) for c in obj["classes"]),
            weights=np.array(obj["weights"], dtype=np.float64),
            bias=np.array(obj["bias"], dtype=np.float64),
            chosen_C=float(obj["chosen_C"]),
            training_meta=obj["training_meta"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LinearClassifier":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def to_csr(X: Sequence[SparseVector], n_features: int) -> sparse.csr_matrix:
    data, indices, indptr = [], [], [0]
    for vec in X:
        for idx, val in vec:
            indices.append(idx)
            data.append(val)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(X), n_features),
    )


def _infer_n_features(X: Sequence[SparseVector]) -> int:
    top = -1
    for vec in X:
        for idx, _ in vec:
            top = max(top, idx)
    return top + 1


def multinomial_loss_grad(
    W: np.ndarray,
    b: np.ndarray,
    X: sparse.csr_matrix,
    Y: np.ndarray,
    C: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-entropy with (1/(2C))||W||^2; bias excluded from the penalty."""
    Z = X @ W.T + b
    zmax = Z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(Z - zmax).sum(axis=1))
    loss = float(np.sum(lse - Z[np.arange(Z.shape[0]), Y.argmax(axis=1)]))
    loss += float(np.sum(W * W)) / (2.0 * C)
    P = _softmax(Z)
    G = P - Y
    grad_W = (X.T @ G).T + W / C
    grad_b = G.sum(axis=0)
    return loss, grad_W, grad_b


def squared_hinge_loss_grad(
    w: np.ndarray,
    b: float,
    X: sparse.csr_matrix,
    s: np.ndarray,
    C: float,
) -> tuple[float, np.ndarray, float]:
    """Sum of squared hinge terms with (1/(2C))||w||^2."""
    margins = s * (X @ w + b)
    viol = np.maximum(0.0, 1.0 - margins)
    loss = float(np.dot(viol, viol)) + float(np.dot(w, w)) / (2.0 * C)
    coef = -2.0 * viol * s
    grad_w = X.T @ coef + w / C
    grad_b = float(coef.sum())
    return loss, grad_w, grad_b


def _descend(loss_grad, theta0: np.ndarray) -> tuple[np.ndarray, FitInfo]:
    """Full-batch gradient descent with Armijo backtracking.

    loss_grad maps a flat parameter vector to (loss, grad). Stops when the
    gradient infinity norm drops below GRAD_TOL or after MAX_EPOCHS.
    """
    theta = theta0.copy()
    loss, grad = loss_grad(theta)
    history = [loss]
    step = 1.0
    epochs = 0
    while epochs < MAX_EPOCHS and float(np.abs(grad).max()) >= GRAD_TOL:
        gsq = float(np.dot(grad, grad))
        step = min(step * 2.0, 1e6)
        accepted = False
        while step > MIN_STEP:
            cand = theta - step * grad
            cand_loss, cand_grad = loss_grad(cand)
            if cand_loss <= loss - ARMIJO_C * step * gsq:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # no descent step left; numerically at a minimum
        theta, loss, grad = cand, cand_loss, cand_grad
        history.append(loss)
        epochs += 1
    final_gnorm = float(np.abs(grad).max())
    return theta, FitInfo(
        epochs=epochs,
        converged=final_gnorm < GRAD_TOL,
        final_grad_norm=final_gnorm,
        loss_history=history,
    )


def fit_multinomial(
    X: sparse.csr_matrix, y_idx: np.ndarray, n_classes: int, C: float
) -> tuple[np.ndarray, np.ndarray, FitInfo]:
    n, f = X.shape
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y_idx] = 1.0

    def loss_grad(theta: np.ndarray):
        W = theta[: n_classes * f].reshape(n_classes, f)
        b = theta[n_classes * f:]
        loss, gW, gb = multinomial_loss_grad(W, b, X, Y, C)
        return loss, np.concatenate([gW.ravel(), gb])

    theta, info = _descend(loss_grad, np.zeros(n_classes * f + n_classes))
    return theta[: n_classes * f].reshape(n_classes, f), theta[n_classes * f:], info


def fit_binary_squared_hinge(
    X: sparse.csr_matrix, s: np.ndarray, C: float
) -> tuple[np.ndarray, float, FitInfo]:
    n, f = X.shape

    def loss_grad(theta: np.ndarray):
        w, b = theta[:f], theta[f]
        loss, gw, gb = squared_hinge_loss_grad(w, b, X, s, C)
        return loss, np.concatenate([gw, [gb]])

    theta, info = _descend(loss_grad, np.zeros(f + 1))
    return theta[:f], float(theta[f]), info


def stratified_kfold(
    y: Sequence[ClassLabel], folds: int, seed: int
) -> list[tuple[list[int], list[int]]]:
    """Per-class shuffled round-robin assignment into folds.

    Every fold's training part must contain every class; a class that cannot
    satisfy that (fewer than 2 members) is an error.
    """
    if len(y) < folds:
        raise ValueError(f"need at least {folds} samples for {folds}-fold CV, got {len(y)}")
    by_class: dict[ClassLabel, list[int]] = {}
    for i, label in enumerate(y):
        by_class.setdefault(label, []).append(i)
    fold_members: list[list[int]] = [[] for _ in range(folds)]
    for label in sorted(by_class, key=lambda c: c.value):
        members = by_class[label]
        if len(members) < 2:
            raise ValueError(f"class {label} has {len(members)} sample(s); every fold's training part must see it")
        digest = hashlib.sha256(f"{seed}:fold:{label.value}".encode()).digest()
        rng = random.Random(int.from_bytes(digest[:8], "big"))
        rng.shuffle(members)
        for pos, idx in enumerate(members):
            fold_members[pos % folds].append(idx)
    splits = []
    for k in range(folds):
        test_idx = sorted(fold_members[k])
        train_idx = sorted(i for j in range(folds) if j != k for i in fold_members[j])
        train_classes = {y[i] for i in train_idx}
        if train_classes != set(by_class):
            missing = set(by_class) - train_classes
            raise ValueError(f"fold {k} training part is missing classes: {sorted(str(m) for m in missing)}")
        splits.append((train_idx, test_idx))
    return splits


def _macro_f1(y_true: Sequence[ClassLabel], y_pred: Sequence[ClassLabel], classes: Sequence[ClassLabel]) -> float:
    return report(confusion(y_true, y_pred, classes=classes)).macro_f1


def _cross_validate(
    fit_one,
    X: Sequence[SparseVector],
    y: Sequence[ClassLabel],
    classes: tuple[ClassLabel, ...],
    c_grid: Sequence[float],
    folds: int,
    seed: int,
    n_features: int,
) -> tuple[float, dict[float, float]]:
    splits = stratified_kfold(y, folds, seed)
    class_index = {c: i for i, c in enumerate(classes)}
    cv_scores: dict[float, float] = {}
    for C in c_grid:
        scores = []
        for train_idx, test_idx in splits:
            X_tr = to_csr([X[i] for i in train_idx], n_features)
            y_tr = np.array([class_index[y[i]] for i in train_idx])
            W, b = fit_one(X_tr, y_tr, C)
            X_te = to_csr([X[i] for i in test_idx], n_features)
            scores_mat = X_te @ W.T + b
            preds = [classes[int(j)] for j in scores_mat.argmax(axis=1)]
            scores.append(_macro_f1([y[i] for i in test_idx], preds, classes))
        cv_scores[C] = float(np.mean(scores))
    best_c = None
    best_score = -np.inf
    for C in sorted(c_grid):
        if cv_scores[C] >= best_score:
            best_score = cv_scores[C]
            best_c = C
    return float(best_c), cv_scores


def _prepare(X: Sequence[SparseVector], y: Sequence[ClassLabel], folds: int, n_features: Optional[int]):
    if len(X) != len(y):
        raise ValueError("X and y length mismatch")
    if len(X) < folds:
        raise ValueError(f"need at least {folds} samples")
    classes = tuple(sorted(set(y), key=lambda c: c.value))
    nf = n_features if n_features is not None else _infer_n_features(X)
    return classes, nf


def train_logreg(
    X: Sequence[SparseVector],
    y: Sequence[ClassLabel],
    C_grid: Sequence[float] = LOGREG_C_GRID,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
    n_features: Optional[int] = None,
) -> LinearClassifier:
    """Cross-validated multinomial logistic regression."""
    classes, nf = _prepare(X, y, folds, n_features)
    class_index = {c: i for i, c in enumerate(classes)}

    def fit_one(X_tr, y_tr, C):
        W, b, _ = fit_multinomial(X_tr, y_tr, len(classes), C)
        return W, b

    chosen_c, cv_scores = _cross_validate(fit_one, X, y, classes, C_grid, folds, seed, nf)
    X_all = to_csr(list(X), nf)
    y_all = np.array([class_index[label] for label in y])
    W, b, info = fit_multinomial(X_all, y_all, len(classes), chosen_c)
    return LinearClassifier(
        kind=KIND_LOGREG,
        classes=classes,
        weights=W,
        bias=b,
        chosen_C=chosen_c,
        training_meta={
            "seed": seed,
            "folds": folds,
            "c_grid": list(C_grid),
            "cv_macro_f1": {str(c): s for c, s in cv_scores.items()},
            "epochs": info.epochs,
            "converged": info.converged,
            "final_grad_norm": info.final_grad_norm,
            "loss_history": info.loss_history,
        },
    )


def train_svm(
    X: Sequence[SparseVector],
    y: Sequence[ClassLabel],
    C_grid: Sequence[float] = SVM_C_GRID,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
    n_features: Optional[int] = None,
) -> LinearClassifier:
    """Cross-validated one-vs-rest linear SVM with squared hinge loss."""
    classes, nf = _prepare(X, y, folds, n_features)
    class_index = {c: i for i, c in enumerate(classes)}

    def fit_ovr(X_tr: sparse.csr_matrix, y_tr: np.ndarray, C: float):
        W = np.zeros((len(classes), X_tr.shape[1]))
        b = np.zeros(len(classes))
        infos = []
        for k in range(len(classes)):
            s = np.where(y_tr == k, 1.0, -1.0)
            W[k], b[k], info = fit_binary_squared_hinge(X_tr, s, C)
            infos.append(info)
        return W, b, infos

    def fit_one(X_tr, y_tr, C):
        W, b, _ = fit_ovr(X_tr, y_tr, C)
        return W, b

    chosen_c, cv_scores = _cross_validate(fit_one, X, y, classes, C_grid, folds, seed, nf)
    X_all = to_csr(list(X), nf)
    y_all = np.array([class_index[label] for label in y])
    W, b, infos = fit_ovr(X_all, y_all, chosen_c)
    return LinearClassifier(
        kind=KIND_SVM,
        classes=classes,
        weights=W,
        bias=b,
        chosen_C=chosen_c,
        training_meta={
            "seed": seed,
            "folds": folds,
            "c_grid": list(C_grid),
            "cv_macro_f1": {str(c): s for c, s in cv_scores.items()},
            "epochs": max(i.epochs for i in infos),
            "converged": all(i.converged for i in infos),
            "final_grad_norm": max(i.final_grad_norm for i in infos),
            "loss_history": infos[0].loss_history,
        },
    )
