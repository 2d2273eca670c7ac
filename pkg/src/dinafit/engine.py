"""MAP fitting of the DINA model by stochastic-approximation EM.

Each iteration runs four steps: a Gibbs sweep resampling every mastery
entry from its conditional posterior, a Gibbs sweep resampling every
loading entry (likelihood log-odds plus reference-prior log-odds), a
Robbins-Monro blend of the complete-data counts from the sampled state
into the running sufficient statistics, and the closed-form item-parameter
update from those statistics.  Point estimates and posterior inclusion /
mastery probabilities come from averaging the sampled matrices over a
trailing window.

Sampling avoids the 2^K profile enumeration entirely: single-entry
conditionals only touch items (or respondents) whose ideal response the
flip can change, so per-iteration cost is linear in N, J, and K.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError, DomainError
from .model import (
    PROB_EPS,
    AttributeMatrix,
    ItemParams,
    QMatrix,
    ResponseMatrix,
    logistic,
)
from .prior import PriorSpec, ReferenceQ, prior_log_odds_matrix, prior_prob_matrix

INIT_C = 0.7
INIT_G = 0.2

# Substream tags: uniforms for iteration t come from
# SeedSequence([seed, t, tag]); row i of the sweep consumes row i of the
# resulting array, so scheduling cannot change the draws.
_TAG_INIT_ALPHA = 0
_TAG_MASTERY = 1
_TAG_LOADING = 2
_TAG_INIT_Q = 3


def _stream(seed: int, iteration: int, tag: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([seed, iteration, tag]))
    )


@dataclass
class SaemConfig:
    """Run configuration for :func:`fit`.

    ``p_star`` is the prior agreement probability (scalar or J x K array);
    ``None`` drops the prior term entirely (likelihood-only mode).
    ``step_exponent`` must lie in (0.5, 1] so the post-burn-in step sizes
    sum to infinity while their squares stay summable.
    """

    total_iterations: int = 800
    burn_in: int = 300
    averaging_window: int = 300
    step_exponent: float = 0.6
    seed: int = 0
    p_star: float | np.ndarray | None = 0.9
    init_scheme: str = "random"
    init_alpha: np.ndarray | None = None
    init_q: np.ndarray | None = None
    parallel_rows: bool = True
    n_attrs: int | None = None

    def validate(self) -> None:
        if self.total_iterations < 1:
            raise ConfigError("total_iterations must be >= 1")
        if self.burn_in < 0 or self.averaging_window < 1:
            raise ConfigError("burn_in must be >= 0 and averaging_window >= 1")
        if self.burn_in + self.averaging_window > self.total_iterations:
            raise ConfigError(
                "burn_in + averaging_window must not exceed total_iterations"
            )
        if not 0.5 < self.step_exponent <= 1.0:
            raise ConfigError("step_exponent must lie in (0.5, 1]")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if self.init_scheme not in ("random", "warm"):
            raise ConfigError("init_scheme must be 'random' or 'warm'")
        if self.init_scheme == "warm" and (self.init_alpha is None or self.init_q is None):
            raise ConfigError("warm init needs both init_alpha and init_q")


@dataclass
class SufficientStats:
    """Per-item counts by ideal-response state.

    Column m of each array corresponds to state m: ``n_count[j, m]`` is the
    (smoothed) number of respondents in state m on item j and
    ``c_count[j, m]`` the (smoothed) number of those answering correctly.
    """

    n_count: np.ndarray
    c_count: np.ndarray

    @classmethod
    def zeros(cls, n_items: int) -> "SufficientStats":
        return cls(np.zeros((n_items, 2)), np.zeros((n_items, 2)))

    def check_bounds(self, n_models: int) -> None:
        ok = (
            (self.c_count >= -1e-9).all()
            and (self.c_count <= self.n_count + 1e-9).all()
            and (self.n_count <= n_models + 1e-9).all()
        )
        if not ok:
            raise DomainError("sufficient statistics violate 0 <= C <= N <= N_total")


@dataclass
class FitResult:
    """Point estimates, posterior probabilities, traces, and diagnostics."""

    q_hat: QMatrix
    a_hat: AttributeMatrix
    params_hat: ItemParams
    q_incl_prob: np.ndarray
    mastery_prob: np.ndarray
    loglik_trace: np.ndarray
    log_prior_trace: np.ndarray
    step_sizes: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _entries(m) -> np.ndarray:
    return np.asarray(getattr(m, "entries", m))


def step_size(t: int, config: SaemConfig) -> float:
    """gamma_t: 1 through burn-in, then (t - burn_in)^(-step_exponent)."""
    if t < 1:
        raise ConfigError(f"iterations are 1-based, got t={t}")
    if t <= config.burn_in:
        return 1.0
    return float(t - config.burn_in) ** -config.step_exponent


def sa_update(
    stats: SufficientStats, fresh: SufficientStats, gamma_t: float
) -> SufficientStats:
    """Convex blend (1 - gamma) * old + gamma * fresh, elementwise."""
    if not 0.0 < gamma_t <= 1.0:
        raise DomainError(f"step size must lie in (0, 1], got {gamma_t}")
    keep = 1.0 - gamma_t
    return SufficientStats(
        keep * stats.n_count + gamma_t * fresh.n_count,
        keep * stats.c_count + gamma_t * fresh.c_count,
    )


def m_step(stats: SufficientStats, previous: ItemParams) -> ItemParams:
    """Closed-form maximizer c_j = C1/N1, g_j = C0/N0 of the complete-data
    log-likelihood; a state with no respondents keeps the previous value."""
    c_new = np.array(previous.c)
    g_new = np.array(previous.g)
    n1, n0 = stats.n_count[:, 1], stats.n_count[:, 0]
    np.divide(stats.c_count[:, 1], n1, out=c_new, where=n1 > 0)
    np.divide(stats.c_count[:, 0], n0, out=g_new, where=n0 > 0)
    c_new = np.clip(c_new, PROB_EPS, 1.0 - PROB_EPS)
    g_new = np.clip(g_new, PROB_EPS, 1.0 - PROB_EPS)
    return ItemParams(c_new, g_new)


def mastery_log_odds(
    i: int, k: int, x: ResponseMatrix, alpha, q, params: ItemParams
) -> float:
    """Exact log conditional odds of mastery entry (i, k) being 1 vs 0,
    holding the rest of the profile fixed.

    Only items loading on k contribute, and among those only the ones whose
    other required attributes are all mastered; the summand is the
    log-likelihood gap between the mastery and non-mastery states.
    """
    a = _entries(alpha)
    qm = _entries(q)
    total = 0.0
    for j in np.flatnonzero(qm[:, k]):
        if x.mask is not None and not x.mask[i, j]:
            continue
        others = [kk for kk in np.flatnonzero(qm[j]) if kk != k]
        if all(a[i, kk] == 1 for kk in others):
            if x.values[i, j] == 1:
                total += np.log(params.c[j] / params.g[j])
            else:
                total += np.log((1.0 - params.c[j]) / (1.0 - params.g[j]))
    return float(total)


def loading_log_odds(
    j: int,
    k: int,
    x: ResponseMatrix,
    alpha,
    q,
    params: ItemParams,
    prior_log_odds: np.ndarray | None = None,
) -> float:
    """Exact log conditional posterior odds of loading entry (j, k) being
    1 vs 0: likelihood contribution plus the precomputed prior log-odds."""
    a = _entries(alpha)
    qm = _entries(q)
    others = [kk for kk in np.flatnonzero(qm[j]) if kk != k]
    total = 0.0
    for i in range(x.n_models):
        if x.mask is not None and not x.mask[i, j]:
            continue
        if a[i, k] == 1:
            continue
        if all(a[i, kk] == 1 for kk in others):
            if x.values[i, j] == 1:
                total -= np.log(params.c[j] / params.g[j])
            else:
                total -= np.log((1.0 - params.c[j]) / (1.0 - params.g[j]))
    if prior_log_odds is not None:
        total += float(np.asarray(prior_log_odds)[j, k])
    return float(total)


def _log_ratios(params: ItemParams) -> tuple[np.ndarray, np.ndarray]:
    d1 = np.log(params.c / params.g)
    d0 = np.log((1.0 - params.c) / (1.0 - params.g))
    return d1, d0


def sample_mastery_sweep(
    x: ResponseMatrix,
    alpha: AttributeMatrix,
    q: QMatrix,
    params: ItemParams,
    rng: np.random.Generator,
    *,
    n_threads: int = 1,
    backend: str | None = None,
) -> AttributeMatrix:
    """One full conditional resampling pass over the mastery matrix."""
    mod = kernels.get_backend(backend)
    ws = mod.prepare(x.encoded())
    work = np.ascontiguousarray(alpha.entries, dtype=np.int8).copy()
    d1, d0 = _log_ratios(params)
    u = rng.random((x.n_models, q.n_attrs))
    mod.mastery_sweep(ws, work, np.asarray(q.entries), d1, d0, u, n_threads)
    return AttributeMatrix(work)


def sample_loading_sweep(
    x: ResponseMatrix,
    alpha: AttributeMatrix,
    q: QMatrix,
    params: ItemParams,
    prior_log_odds: np.ndarray | None,
    rng: np.random.Generator,
    *,
    n_threads: int = 1,
    backend: str | None = None,
) -> QMatrix:
    """One full conditional resampling pass over the loading matrix."""
    mod = kernels.get_backend(backend)
    ws = mod.prepare(x.encoded())
    work = np.ascontiguousarray(q.entries, dtype=np.int8).copy()
    d1, d0 = _log_ratios(params)
    plo = (
        np.zeros((q.n_items, q.n_attrs))
        if prior_log_odds is None
        else np.ascontiguousarray(prior_log_odds, dtype=np.float64)
    )
    u = rng.random((q.n_items, q.n_attrs))
    mod.loading_sweep(
        ws, np.ascontiguousarray(alpha.entries, dtype=np.int8), work, d1, d0, plo, u, n_threads
    )
    return QMatrix(work)


def finalize(
    a_samples: np.ndarray,
    q_samples: np.ndarray,
    params: ItemParams,
    stats: SufficientStats,
    loglik_trace: np.ndarray,
    log_prior_trace: np.ndarray,
    step_sizes: np.ndarray,
) -> FitResult:
    """Averages, 0.5-thresholds (ties round to 1), and diagnostics."""
    a_arr = np.asarray(a_samples)
    q_arr = np.asarray(q_samples)
    if a_arr.ndim != 3 or a_arr.shape[0] == 0 or q_arr.shape[0] != a_arr.shape[0]:
        raise ConfigError("averaging window must contain at least one sample")
    mastery_prob = a_arr.mean(axis=0)
    q_incl_prob = q_arr.mean(axis=0)
    a_hat = (mastery_prob >= 0.5).astype(np.int8)
    q_hat = (q_incl_prob >= 0.5).astype(np.int8)
    diagnostics = {
        "all_zero_q_rows": [int(v) for v in np.flatnonzero(q_hat.sum(axis=1) == 0)],
        "c_le_g_items": [int(v) for v in np.flatnonzero(params.c <= params.g)],
        "empty_state_items": [
            int(v) for v in np.flatnonzero((stats.n_count == 0).any(axis=1))
        ],
    }
    return FitResult(
        q_hat=QMatrix(q_hat),
        a_hat=AttributeMatrix(a_hat),
        params_hat=params,
        q_incl_prob=q_incl_prob,
        mastery_prob=mastery_prob,
        loglik_trace=np.asarray(loglik_trace),
        log_prior_trace=np.asarray(log_prior_trace),
        step_sizes=np.asarray(step_sizes),
        diagnostics=diagnostics,
    )


def fit(
    x: ResponseMatrix,
    ref: ReferenceQ | None,
    config: SaemConfig,
    *,
    n_threads: int | None = None,
    backend: str | None = None,
) -> FitResult:
    """Run the full estimator and return point estimates plus traces.

    With a reference matrix, the loading matrix starts there and the prior
    log-odds push each entry toward agreement.  Without one (or with
    ``p_star=None``), the prior term is identically zero and the estimator
    is likelihood-only; starting values are then drawn from the seed.
    """
    config.validate()
    n_models, n_items = x.n_models, x.n_items
    seed = int(config.seed)

    if ref is not None:
        if ref.n_items != n_items:
            raise DimensionError(
                f"reference has {ref.n_items} items, responses have {n_items}"
            )
        n_attrs = ref.n_attrs
        if config.n_attrs is not None and config.n_attrs != n_attrs:
            raise ConfigError(
                f"config.n_attrs={config.n_attrs} conflicts with reference K={n_attrs}"
            )
    else:
        if config.n_attrs is None:
            raise ConfigError("n_attrs is required when no reference Q is given")
        n_attrs = int(config.n_attrs)

    if config.p_star is not None and ref is not None:
        spec = PriorSpec(config.p_star)
        prior_lo = np.ascontiguousarray(prior_log_odds_matrix(ref, spec))
        r = prior_prob_matrix(ref, spec)
        log_r, log_1mr = np.log(r), np.log(1.0 - r)
    elif config.p_star is not None and not (
        np.isscalar(config.p_star) and float(config.p_star) == 0.5
    ):
        raise ConfigError("an informative p_star needs a reference Q")
    else:
        prior_lo = np.zeros((n_items, n_attrs))
        log_r = log_1mr = None

    # Initial state: loadings warm-start at the reference when available.
    if config.init_scheme == "warm":
        alpha = np.ascontiguousarray(config.init_alpha, dtype=np.int8).copy()
        q = np.ascontiguousarray(config.init_q, dtype=np.int8).copy()
        if alpha.shape != (n_models, n_attrs) or q.shape != (n_items, n_attrs):
            raise DimensionError("warm-start matrices have wrong shapes")
    else:
        alpha = (
            _stream(seed, 0, _TAG_INIT_ALPHA).random((n_models, n_attrs)) < 0.5
        ).astype(np.int8)
        if ref is not None:
            q = np.ascontiguousarray(ref.entries, dtype=np.int8).copy()
        else:
            q = (
                _stream(seed, 0, _TAG_INIT_Q).random((n_items, n_attrs)) < 0.5
            ).astype(np.int8)
    params = ItemParams.constant(n_items, INIT_C, INIT_G)

    threads = kernels.resolve_threads(n_threads) if config.parallel_rows else 1
    mod = kernels.get_backend(backend)
    ws = mod.prepare(x.encoded())

    total = config.total_iterations
    window = config.averaging_window
    stats = SufficientStats.zeros(n_items)
    loglik_trace = np.empty(total)
    log_prior_trace = np.empty(total)
    step_sizes = np.empty(total)
    a_samples = np.empty((window, n_models, n_attrs), dtype=np.int8)
    q_samples = np.empty((window, n_items, n_attrs), dtype=np.int8)

    for t in range(1, total + 1):
        d1, d0 = _log_ratios(params)
        u_a = _stream(seed, t, _TAG_MASTERY).random((n_models, n_attrs))
        u_q = _stream(seed, t, _TAG_LOADING).random((n_items, n_attrs))
        mod.mastery_sweep(ws, alpha, q, d1, d0, u_a, threads)
        n0, n1, c0, c1 = mod.loading_sweep(ws, alpha, q, d1, d0, prior_lo, u_q, threads)

        # complete-data log-likelihood of the sampled state at the current
        # parameters, plus the loading-prior term
        loglik_trace[t - 1] = float(
            c1 @ np.log(params.c)
            + (n1 - c1) @ np.log(1.0 - params.c)
            + c0 @ np.log(params.g)
            + (n0 - c0) @ np.log(1.0 - params.g)
        )
        if log_r is not None:
            log_prior_trace[t - 1] = float(
                np.where(q == 1, log_r, log_1mr).sum()
            )
        else:
            log_prior_trace[t - 1] = 0.0

        fresh = SufficientStats(
            np.stack([n0, n1], axis=1), np.stack([c0, c1], axis=1)
        )
        gamma = step_size(t, config)
        step_sizes[t - 1] = gamma
        stats = sa_update(stats, fresh, gamma)
        params = m_step(stats, params)

        w_idx = t - (total - window) - 1
        if w_idx >= 0:
            a_samples[w_idx] = alpha
            q_samples[w_idx] = q

    return finalize(
        a_samples, q_samples, params, stats,
        loglik_trace, log_prior_trace, step_sizes,
    )
