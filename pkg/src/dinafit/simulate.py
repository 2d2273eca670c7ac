"""Synthetic-data generation for recovery experiments.

The true loading matrix is block-structured: stacked identity blocks
(single-attribute items), two-attribute blocks, and three-attribute blocks
in 2:1:1 proportion.  Latent profiles default to iid fair coin flips,
responses follow the conjunctive model, and the reference matrix handed to
the fitter is the truth with a fraction of entries redrawn at random.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .model import AttributeMatrix, ItemParams, QMatrix, ResponseMatrix, ideal_response_matrix
from .prior import ReferenceQ

BLOCK_PROPORTIONS = (0.5, 0.25, 0.25)  # identity, two-attribute, three-attribute


@dataclass
class SimDesign:
    """Settings for one synthetic dataset."""

    n_models: int
    n_items: int
    n_attrs: int
    c_true: float | np.ndarray = 0.8
    g_true: float | np.ndarray = 0.2
    perturb_fraction: float = 0.10
    profile_scheme: str = "iid"
    profile_table: np.ndarray | None = None
    profile_counts: np.ndarray | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.n_models < 1 or self.n_items < 1 or self.n_attrs < 1:
            raise ConfigError("n_models, n_items, n_attrs must be positive")
        if self.n_items < self.n_attrs:
            raise ConfigError("need at least as many items as attributes")
        if not 0.0 <= self.perturb_fraction <= 1.0:
            raise ConfigError("perturb_fraction must lie in [0, 1]")
        if self.profile_scheme not in ("iid", "table"):
            raise ConfigError("profile_scheme must be 'iid' or 'table'")
        if self.profile_scheme == "table":
            if self.profile_table is None or self.profile_counts is None:
                raise ConfigError("table scheme needs profile_table and profile_counts")

    def params(self) -> ItemParams:
        c = np.broadcast_to(np.asarray(self.c_true, dtype=np.float64), (self.n_items,))
        g = np.broadcast_to(np.asarray(self.g_true, dtype=np.float64), (self.n_items,))
        return ItemParams(c.copy(), g.copy())


def _two_attr_block(k: int) -> np.ndarray:
    block = np.eye(k, dtype=np.int8)
    for row in range(k - 1):
        block[row, row + 1] = 1
    block[k - 1, 0] = 1
    return block


def _three_attr_block(k: int) -> np.ndarray:
    block = _two_attr_block(k)
    for row in range(k - 2):
        block[row, row + 2] = 1
    block[k - 2, 0] = 1
    block[k - 1, 1] = 1
    return block


def build_block_q(n_items: int, n_attrs: int) -> QMatrix:
    """Deterministic block-structured loading matrix.

    floor(J/K) full K x K blocks are typed identity / two-attribute /
    three-attribute at target proportions (0.5, 0.25, 0.25) via largest
    remainder (ties favor the simpler block type), stacked in that order;
    the leftover J mod K rows come from the top of the identity block.
    """
    if n_attrs < 3:
        raise ConfigError("three-attribute block pattern needs K >= 3")
    if n_items < n_attrs:
        raise DimensionError("need J >= K")
    n_blocks = n_items // n_attrs
    quotas = [p * n_blocks for p in BLOCK_PROPORTIONS]
    counts = [int(np.floor(q)) for q in quotas]
    remainders = [q - c for q, c in zip(quotas, counts)]
    for _ in range(n_blocks - sum(counts)):
        best = max(range(3), key=lambda idx: (remainders[idx], -idx))
        counts[best] += 1
        remainders[best] = -1.0
    blocks = (
        [np.eye(n_attrs, dtype=np.int8)] * counts[0]
        + [_two_attr_block(n_attrs)] * counts[1]
        + [_three_attr_block(n_attrs)] * counts[2]
    )
    leftover = n_items - n_blocks * n_attrs
    if leftover:
        blocks.append(np.eye(n_attrs, dtype=np.int8)[:leftover])
    return QMatrix(np.vstack(blocks))


def gen_attributes(
    n_models: int,
    n_attrs: int,
    scheme: str = "iid",
    rng: np.random.Generator | None = None,
    profile_table: np.ndarray | None = None,
    profile_counts: np.ndarray | None = None,
) -> AttributeMatrix:
    """Latent mastery profiles: iid Bernoulli(0.5) or a replicated table."""
    if scheme == "iid":
        if rng is None:
            raise ConfigError("iid scheme needs an rng")
        return AttributeMatrix((rng.random((n_models, n_attrs)) < 0.5).astype(np.int8))
    if scheme == "table":
        profiles = np.asarray(profile_table)
        counts = np.asarray(profile_counts, dtype=np.int64)
        if profiles.ndim != 2 or profiles.shape[1] != n_attrs:
            raise DimensionError("profile table must be M x K")
        if counts.shape != (profiles.shape[0],) or (counts < 0).any():
            raise DomainError("profile_counts must be nonnegative, one per profile")
        if int(counts.sum()) != n_models:
            raise ConfigError(
                f"profile counts sum to {int(counts.sum())}, need {n_models}"
            )
        return AttributeMatrix(np.repeat(profiles, counts, axis=0))
    raise ConfigError(f"unknown profile scheme {scheme!r}")


def gen_responses(
    alpha: AttributeMatrix,
    q: QMatrix,
    params: ItemParams,
    rng: np.random.Generator,
    mask: np.ndarray | None = None,
) -> ResponseMatrix:
    """Bernoulli responses from the conjunctive model, cell-independent."""
    if alpha.n_attrs != q.n_attrs or params.n_items != q.n_items:
        raise DimensionError("profiles, loadings, and params do not conform")
    eta = ideal_response_matrix(alpha.entries, q.entries)
    p = np.where(eta == 1, params.c[None, :], params.g[None, :])
    values = (rng.random(p.shape) < p).astype(np.int8)
    return ResponseMatrix(values, mask=mask)


def perturb_q(
    q_true: QMatrix, fraction: float, rng: np.random.Generator
) -> ReferenceQ:
    """Reference matrix: round(fraction*J*K) distinct entries, chosen
    uniformly without replacement, are replaced by fresh Bernoulli(0.5)
    draws (so about half the selected entries actually change)."""
    if not 0.0 <= fraction <= 1.0:
        raise DomainError(f"fraction must lie in [0, 1], got {fraction}")
    entries = np.array(q_true.entries, dtype=np.int8)
    n_cells = entries.size
    n_pick = int(round(fraction * n_cells))
    if n_pick:
        flat = rng.choice(n_cells, size=n_pick, replace=False)
        entries.flat[flat] = (rng.random(n_pick) < 0.5).astype(np.int8)
    return ReferenceQ(entries)


def simulate(design: SimDesign):
    """Full draw: returns (responses, q_true, a_true, q_ref, params_true)."""
    design.validate()
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([int(design.seed), 0]))
    )
    q_true = build_block_q(design.n_items, design.n_attrs)
    a_true = gen_attributes(
        design.n_models,
        design.n_attrs,
        scheme=design.profile_scheme,
        rng=rng,
        profile_table=design.profile_table,
        profile_counts=design.profile_counts,
    )
    params = design.params()
    x = gen_responses(a_true, q_true, params, rng)
    q_ref = perturb_q(q_true, design.perturb_fraction, rng)
    return x, q_true, a_true, q_ref, params
