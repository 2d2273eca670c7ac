"""Recovery and diagnostic metrics.

Estimated attribute columns are only identified up to a permutation, so
all recovery rates are computed after aligning estimated columns to the
truth by optimal assignment on the loading-agreement matrix; the same
permutation is reused for the mastery matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import spearmanr

from .errors import DimensionError, DinafitError
from .model import ItemParams, ResponseMatrix


@dataclass
class RecoveryReport:
    """Entry- and row-wise recovery rates plus parameter RMSEs."""

    q_entry: float
    q_row: float
    a_entry: float
    a_row: float
    rmse_c: float
    rmse_g: float
    permutation: np.ndarray

    def as_dict(self) -> dict:
        return {
            "q_entry": self.q_entry,
            "q_row": self.q_row,
            "a_entry": self.a_entry,
            "a_row": self.a_row,
            "rmse_c": self.rmse_c,
            "rmse_g": self.rmse_g,
            "permutation": [int(p) for p in self.permutation],
        }


def _entries(m) -> np.ndarray:
    return np.asarray(getattr(m, "entries", m))


def align_columns(q_hat, q_true) -> np.ndarray:
    """Permutation p maximizing agreement of q_hat[:, p] with q_true.

    Solved as an optimal assignment on the K x K column-agreement matrix;
    apply the returned index array to estimated columns (of both the
    loading and mastery matrices) before comparing.
    """
    est = _entries(q_hat)
    true = _entries(q_true)
    if est.shape != true.shape:
        raise DimensionError(f"shapes differ: {est.shape} vs {true.shape}")
    n_attrs = est.shape[1]
    agreement = np.empty((n_attrs, n_attrs), dtype=np.int64)
    for a in range(n_attrs):
        agreement[a] = (est[:, a : a + 1] == true).sum(axis=0)
    rows, cols = linear_sum_assignment(agreement, maximize=True)
    perm = np.empty(n_attrs, dtype=np.int64)
    perm[cols] = rows
    return perm


def recovery_rates(
    q_hat,
    q_true,
    a_hat,
    a_true,
    params_hat: ItemParams | None = None,
    params_true: ItemParams | None = None,
) -> RecoveryReport:
    """Alignment-corrected recovery rates (and RMSEs when params given)."""
    perm = align_columns(q_hat, q_true)
    qe = _entries(q_hat)[:, perm]
    qt = _entries(q_true)
    ae = _entries(a_hat)[:, perm]
    at = _entries(a_true)
    if ae.shape != at.shape:
        raise DimensionError(f"mastery shapes differ: {ae.shape} vs {at.shape}")
    if ae.shape[1] != qt.shape[1]:
        raise DimensionError("mastery and loading attribute counts differ")
    q_match = qe == qt
    a_match = ae == at
    rmse_c = rmse_g = float("nan")
    if params_hat is not None and params_true is not None:
        rmse_c, rmse_g = rmse_params(params_hat, params_true)
    return RecoveryReport(
        q_entry=float(q_match.mean()),
        q_row=float(q_match.all(axis=1).mean()),
        a_entry=float(a_match.mean()),
        a_row=float(a_match.all(axis=1).mean()),
        rmse_c=rmse_c,
        rmse_g=rmse_g,
        permutation=perm,
    )


def rmse_params(est: ItemParams, true: ItemParams) -> tuple[float, float]:
    """Root mean squared error of each item-parameter vector."""
    if est.n_items != true.n_items:
        raise DimensionError(
            f"parameter lengths differ: {est.n_items} vs {true.n_items}"
        )
    rmse_c = float(np.sqrt(np.mean((est.c - true.c) ** 2)))
    rmse_g = float(np.sqrt(np.mean((est.g - true.g) ** 2)))
    return rmse_c, rmse_g


def mastery_accuracy_association(
    mastery_prob: np.ndarray, x: ResponseMatrix
) -> tuple[float, np.ndarray, np.ndarray]:
    """Spearman rank correlation between per-model mean mastery and
    per-model observed accuracy, with the two summary vectors.

    Returns NaN for the correlation when either vector is constant (the
    ranking is undefined there).
    """
    probs = np.asarray(mastery_prob, dtype=np.float64)
    if probs.shape[0] != x.n_models:
        raise DimensionError(
            f"{probs.shape[0]} mastery rows for {x.n_models} response rows"
        )
    mastery_mean = probs.mean(axis=1)
    if x.mask is None:
        accuracy = x.values.mean(axis=1)
    else:
        counts = x.mask.sum(axis=1)
        accuracy = np.divide(
            (x.values * x.mask).sum(axis=1),
            counts,
            out=np.zeros(x.n_models),
            where=counts > 0,
        )
    if np.ptp(mastery_mean) == 0 or np.ptp(accuracy) == 0:
        return float("nan"), mastery_mean, accuracy
    rho = spearmanr(mastery_mean, accuracy).statistic
    return float(rho), mastery_mean, accuracy


def group_mastery_profiles(
    mastery_prob: np.ndarray, group_labels
) -> dict[str, np.ndarray]:
    """Mean mastery per attribute within each label group."""
    probs = np.asarray(mastery_prob, dtype=np.float64)
    labels = list(group_labels)
    if len(labels) != probs.shape[0]:
        raise DimensionError(
            f"{len(labels)} labels for {probs.shape[0]} mastery rows"
        )
    if not labels:
        raise DinafitError("no models to group")
    out: dict[str, np.ndarray] = {}
    arr = np.asarray(labels)
    for label in sorted(set(labels)):
        out[label] = probs[arr == label].mean(axis=0)
    return out
