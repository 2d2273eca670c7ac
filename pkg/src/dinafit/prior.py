"""Reference Q-matrix and the entry-wise prior it induces.

Each Q entry gets prior inclusion probability r_jk = p* when the reference
agrees (reference entry 1) and 1 - p* when it disagrees.  The sampling step
only ever needs the log-odds log(r / (1 - r)), which never change during a
fit, so they are precomputed once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .model import _binary_matrix


@dataclass(frozen=True)
class ReferenceQ:
    """J x K binary reference loading matrix, optionally with attribute labels."""

    entries: np.ndarray
    attribute_labels: list[str] | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "entries", _binary_matrix(self.entries, "reference Q entries")
        )
        if self.attribute_labels is not None:
            if len(self.attribute_labels) != self.entries.shape[1]:
                raise DimensionError(
                    f"{len(self.attribute_labels)} labels for "
                    f"{self.entries.shape[1]} attributes"
                )

    @property
    def n_items(self) -> int:
        return self.entries.shape[0]

    @property
    def n_attrs(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class PriorSpec:
    """Prior agreement probability: a scalar p* or a J x K matrix of p*_jk.

    All values must lie strictly inside (0, 1); p* = 0.5 makes the prior
    uninformative (zero log-odds everywhere).
    """

    agreement: float | np.ndarray

    def __post_init__(self):
        a = self.agreement
        if np.isscalar(a) or np.ndim(a) == 0:
            v = float(a)
            if not np.isfinite(v) or v <= 0.0 or v >= 1.0:
                raise DomainError(f"p* must lie strictly in (0, 1), got {a!r}")
            object.__setattr__(self, "agreement", v)
        else:
            arr = np.asarray(a, dtype=np.float64)
            if arr.ndim != 2:
                raise DimensionError("entry-wise p* must be a 2-D matrix")
            if not np.isfinite(arr).all() or (arr <= 0).any() or (arr >= 1).any():
                raise DomainError("entry-wise p* values must lie strictly in (0, 1)")
            arr.setflags(write=False)
            object.__setattr__(self, "agreement", arr)

    def is_scalar(self) -> bool:
        return np.isscalar(self.agreement)

    def matrix(self, n_items: int, n_attrs: int) -> np.ndarray:
        """p*_jk as a full J x K array."""
        if self.is_scalar():
            return np.full((n_items, n_attrs), self.agreement)
        arr = np.asarray(self.agreement)
        if arr.shape != (n_items, n_attrs):
            raise DimensionError(
                f"entry-wise p* shape {arr.shape} != ({n_items}, {n_attrs})"
            )
        return arr.copy()


def prior_prob(j: int, k: int, ref: ReferenceQ, spec: PriorSpec) -> float:
    """r_jk: p*_jk where the reference loads the entry, else 1 - p*_jk."""
    if not (0 <= j < ref.n_items and 0 <= k < ref.n_attrs):
        raise IndexError(f"entry ({j}, {k}) outside {ref.n_items} x {ref.n_attrs}")
    p = spec.agreement if spec.is_scalar() else float(np.asarray(spec.agreement)[j, k])
    return p if ref.entries[j, k] == 1 else 1.0 - p


def prior_log_odds(j: int, k: int, ref: ReferenceQ, spec: PriorSpec) -> float:
    """log(r_jk / (1 - r_jk)); exactly 0 when r_jk = 0.5."""
    r = prior_prob(j, k, ref, spec)
    return float(np.log(r / (1.0 - r)))


def prior_log_odds_matrix(ref: ReferenceQ, spec: PriorSpec) -> np.ndarray:
    """J x K prior log-odds, computed once per fit."""
    r = prior_prob_matrix(ref, spec)
    return np.log(r / (1.0 - r))


def prior_prob_matrix(ref: ReferenceQ, spec: PriorSpec) -> np.ndarray:
    p = spec.matrix(ref.n_items, ref.n_attrs)
    return np.where(ref.entries == 1, p, 1.0 - p)
