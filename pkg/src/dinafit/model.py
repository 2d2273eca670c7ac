"""Conjunctive (DINA) response model: probability kernel and log-likelihood.

An item is answered correctly with probability c_j when the respondent
masters every attribute the item loads on (ideal response 1) and with
probability g_j otherwise.  Everything heavier in the package -- sampling
sweeps, stochastic-approximation smoothing, the closed-form item-parameter
update -- reduces to the primitives defined here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

# Probabilities are clipped into [PROB_EPS, 1 - PROB_EPS] before any log,
# keeping every likelihood term finite.
PROB_EPS = 1e-6


def _binary_matrix(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    out = arr.astype(np.int8)
    if not np.array_equal(out, arr):
        raise DomainError(f"{name} entries must be integers 0 or 1")
    if out.size and not bool(((out == 0) | (out == 1)).all()):
        raise DomainError(f"{name} entries must be 0 or 1")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ResponseMatrix:
    """N x J binary correctness matrix with an optional observation mask.

    ``mask[i, j]`` is True where the response is observed; masked cells are
    skipped in every sum.  Unmasked entries must be exactly 0 or 1 --
    partial credit is rejected.
    """

    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 2:
            raise DimensionError(f"responses must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError("response matrix needs at least one row and column")
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != arr.shape:
                raise DimensionError(
                    f"mask shape {mask.shape} != responses shape {arr.shape}"
                )
            # Masked cells may hold anything (NaN included); zero them out.
            arr = np.where(mask, arr, 0)
            mask.setflags(write=False)
            object.__setattr__(self, "mask", mask)
        vals = _binary_matrix(arr, "responses")
        object.__setattr__(self, "values", vals)

    @property
    def n_models(self) -> int:
        return self.values.shape[0]

    @property
    def n_items(self) -> int:
        return self.values.shape[1]

    def encoded(self) -> np.ndarray:
        """int8 copy with missing cells encoded as -1 (kernel input format)."""
        enc = self.values.astype(np.int8)
        if self.mask is not None:
            enc[~self.mask] = -1
        return enc

    def observed_count(self) -> int:
        if self.mask is None:
            return self.values.size
        return int(self.mask.sum())


@dataclass(frozen=True)
class QMatrix:
    """J x K binary item-attribute loading matrix."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _binary_matrix(self.entries, "Q entries"))

    @property
    def n_items(self) -> int:
        return self.entries.shape[0]

    @property
    def n_attrs(self) -> int:
        return self.entries.shape[1]

    def all_zero_rows(self) -> list[int]:
        """Items loading on no attribute (permitted, but worth flagging)."""
        return [int(j) for j in np.flatnonzero(self.entries.sum(axis=1) == 0)]


@dataclass(frozen=True)
class AttributeMatrix:
    """N x K binary latent mastery profiles."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "entries", _binary_matrix(self.entries, "attribute entries")
        )

    @property
    def n_models(self) -> int:
        return self.entries.shape[0]

    @property
    def n_attrs(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class ItemParams:
    """Per-item correct-given-mastery (c) and guessing (g) probabilities.

    Values must lie strictly inside (0, 1) and are clipped into
    [PROB_EPS, 1 - PROB_EPS] on construction.
    """

    c: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64)
        g = np.asarray(self.g, dtype=np.float64)
        if c.ndim != 1 or g.ndim != 1 or c.shape != g.shape:
            raise DimensionError("c and g must be equal-length 1-D vectors")
        for name, v in (("c", c), ("g", g)):
            if not np.isfinite(v).all() or (v <= 0).any() or (v >= 1).any():
                raise DomainError(f"{name} values must lie strictly in (0, 1)")
        c = np.clip(c, PROB_EPS, 1.0 - PROB_EPS)
        g = np.clip(g, PROB_EPS, 1.0 - PROB_EPS)
        c.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "g", g)

    @property
    def n_items(self) -> int:
        return self.c.shape[0]

    @classmethod
    def constant(cls, n_items: int, c: float, g: float) -> "ItemParams":
        return cls(np.full(n_items, c), np.full(n_items, g))


def ideal_response(alpha_row, q_row) -> int:
    """1 iff every attribute the item requires is mastered.

    An all-zero q_row returns 1 (empty product convention): the item
    requires nothing, so anyone is in the mastery state.
    """
    a = np.asarray(alpha_row)
    q = np.asarray(q_row)
    if a.shape != q.shape or a.ndim != 1:
        raise DimensionError(
            f"profile length {a.shape} != loading length {q.shape}"
        )
    return int(bool(np.all(a[q == 1] == 1)))


def ideal_response_matrix(alpha: np.ndarray, q: np.ndarray) -> np.ndarray:
    """N x J ideal-response indicators for all (respondent, item) pairs."""
    a = np.asarray(alpha, dtype=np.float64)
    qm = np.asarray(q, dtype=np.float64)
    if a.shape[1] != qm.shape[1]:
        raise DimensionError(
            f"profiles have {a.shape[1]} attributes, loadings have {qm.shape[1]}"
        )
    # number of required-but-unmastered attributes; integer-valued, so the
    # float matmul is exact
    deficits = (1.0 - a) @ qm.T
    return (deficits == 0).astype(np.int8)


def _check_prob(value: float, name: str) -> float:
    v = float(value)
    if not np.isfinite(v) or v <= 0.0 or v >= 1.0:
        raise DomainError(f"{name} must lie strictly in (0, 1), got {value!r}")
    return v


def response_prob(eta: int, c_j: float, g_j: float) -> float:
    """P(correct) = c_j^eta * g_j^(1 - eta)."""
    c = _check_prob(c_j, "c_j")
    g = _check_prob(g_j, "g_j")
    if eta not in (0, 1):
        raise DomainError(f"eta must be 0 or 1, got {eta!r}")
    return c if eta == 1 else g


def response_loglik(x: int, m: int, c_j: float, g_j: float) -> float:
    """x*log(p) + (1-x)*log(1-p) with p = c_j if m == 1 else g_j."""
    p = response_prob(m, c_j, g_j)
    p = min(max(p, PROB_EPS), 1.0 - PROB_EPS)
    if x not in (0, 1):
        raise DomainError(f"response must be 0 or 1, got {x!r}")
    return float(x * np.log(p) + (1 - x) * np.log(1.0 - p))


def joint_loglik(
    x: ResponseMatrix, alpha: AttributeMatrix, q: QMatrix, params: ItemParams
) -> float:
    """Complete-data log-likelihood, summed over unmasked cells."""
    if alpha.n_models != x.n_models:
        raise DimensionError(
            f"{alpha.n_models} profiles for {x.n_models} response rows"
        )
    if q.n_items != x.n_items or params.n_items != x.n_items:
        raise DimensionError("item counts of responses, Q, and params differ")
    if q.n_attrs != alpha.n_attrs:
        raise DimensionError("attribute counts of Q and profiles differ")
    eta = ideal_response_matrix(alpha.entries, q.entries)
    p = np.where(eta == 1, params.c[None, :], params.g[None, :])
    xv = x.values.astype(np.float64)
    terms = xv * np.log(p) + (1.0 - xv) * np.log(1.0 - p)
    if x.mask is not None:
        terms = np.where(x.mask, terms, 0.0)
    return float(terms.sum())


def logistic(x):
    """Numerically stable logistic function, 1 / (1 + exp(-x)).

    Branches on the sign of x so neither exponential overflows; accepts
    scalars or arrays.
    """
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out
