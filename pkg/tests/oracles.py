"""Independent brute-force implementations used to cross-check the package.

Everything here works by direct counting or the textbook formula, never by
calling package code, so agreement is meaningful.
"""

from __future__ import annotations

import math


def oracle_confusion(y_true, y_pred, classes):
    counts = {(t, p): 0 for t in classes for p in classes}
    for t, p in zip(y_true, y_pred):
        counts[(t, p)] += 1
    return counts


def oracle_accuracy(y_true, y_pred):
    return sum(1 for t, p in zip(y_true, y_pred) if t == p) / len(y_true)


def oracle_prf(y_true, y_pred, label):
    tp = sum(1 for t, p in zip(y_true, y_pred) if t == label and p == label)
    fp = sum(1 for t, p in zip(y_true, y_pred) if t != label and p == label)
    fn = sum(1 for t, p in zip(y_true, y_pred) if t == label and p != label)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def oracle_macro_f1(y_true, y_pred, classes):
    return sum(oracle_prf(y_true, y_pred, c)[2] for c in classes) / len(classes)


def oracle_macro_precision(y_true, y_pred, classes):
    return sum(oracle_prf(y_true, y_pred, c)[0] for c in classes) / len(classes)


def oracle_macro_recall(y_true, y_pred, classes):
    return sum(oracle_prf(y_true, y_pred, c)[1] for c in classes) / len(classes)


def oracle_weighted_f1(y_true, y_pred, classes):
    total = len(y_true)
    acc = 0.0
    for c in classes:
        support = sum(1 for t in y_true if t == c)
        acc += support * oracle_prf(y_true, y_pred, c)[2]
    return acc / total


def oracle_average_precision(pairs):
    """Rescan at every distinct threshold; step-sum the PR curve."""
    n_pos = sum(1 for _, positive in pairs if positive)
    thresholds = sorted({score for score, _ in pairs}, reverse=True)
    ap = 0.0
    prev_recall = 0.0
    for thr in thresholds:
        tp = sum(1 for score, positive in pairs if score >= thr and positive)
        predicted_pos = sum(1 for score, _ in pairs if score >= thr)
        precision = tp / predicted_pos
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def oracle_kappa(a, b):
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    cats = set(a) | set(b)
    p_e = sum(
        (sum(1 for x in a if x == k) / n) * (sum(1 for y in b if y == k) / n)
        for k in cats
    )
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1 - p_e)


def oracle_calibration(probs, labels, nbins):
    """(mean predicted, observed frequency, count) per non-empty bin."""
    bins = []
    for k in range(nbins):
        lo = k / nbins
        hi = (k + 1) / nbins
        if k == 0:
            members = [(p, y) for p, y in zip(probs, labels) if lo <= p <= hi]
        else:
            members = [(p, y) for p, y in zip(probs, labels) if lo < p <= hi]
        if members:
            bins.append(
                (
                    sum(p for p, _ in members) / len(members),
                    sum(1 for _, y in members if y) / len(members),
                    len(members),
                )
            )
    return bins


def oracle_pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sx = math.sqrt(sum((a - mx) ** 2 for a in x))
    sy = math.sqrt(sum((b - my) ** 2 for b in y))
    return cov / (sx * sy)


def numeric_gradient(f, theta, eps=1e-6):
    """Central finite differences, one coordinate at a time."""
    grad = [0.0] * len(theta)
    for i in range(len(theta)):
        hi = list(theta)
        lo = list(theta)
        hi[i] += eps
        lo[i] -= eps
        grad[i] = (f(hi) - f(lo)) / (2 * eps)
    return grad
