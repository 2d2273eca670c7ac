"""Pure-numpy sweep kernels (fallback backend).

Same contracts as the compiled backend in ``_sweeps``: one full Gibbs pass
over the mastery matrix (rows independent, attributes updated sequentially
within a row) and one over the loading matrix (items independent,
attributes sequential within an item).  Uniform variates are pregenerated
by the caller, so output never depends on scheduling; the ``n_threads``
argument is accepted for API parity and ignored, numpy vectorization
already covers the independent axis.

The state tracked per (respondent, item) cell is the number of required
attributes the respondent currently lacks; the ideal response is 1 exactly
when that deficit is 0, and a single-entry flip changes the log-likelihood
only through cells whose deficit sits at the relevant boundary.
"""

import numpy as np

NAME = "python"


def prepare(x_enc):
    """Precompute per-response lookups reused across iterations."""
    x = np.ascontiguousarray(x_enc, dtype=np.int8)
    return {
        "x": x,
        "obs": x >= 0,
        "correct": x == 1,
    }


def _sigmoid(v):
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _cell_weights(ws, d1, d0):
    # w_ij = d1_j where x_ij = 1, d0_j where x_ij = 0, 0 where missing
    w = np.where(ws["correct"], d1[None, :], d0[None, :])
    w[~ws["obs"]] = 0.0
    return w


def _deficits(alpha, q):
    # required-but-unmastered counts; float matmul of small ints is exact
    return ((1.0 - alpha) @ q.T.astype(np.float64)).astype(np.int16)


def mastery_sweep(ws, alpha, q, d1, d0, u, n_threads=1):
    """Resample every mastery entry once, in place."""
    n_models, n_attrs = alpha.shape
    w = _cell_weights(ws, d1, d0)
    deficits = _deficits(alpha, q)
    for k in range(n_attrs):
        cols = np.flatnonzero(q[:, k])
        a_cur = alpha[:, k].astype(np.int16)
        if cols.size:
            rest_ok = deficits[:, cols] == (1 - a_cur)[:, None]
            delta = (w[:, cols] * rest_ok).sum(axis=1)
        else:
            delta = np.zeros(n_models)
        a_new = (u[:, k] < _sigmoid(delta)).astype(np.int8)
        if cols.size:
            change = a_cur - a_new
            if change.any():
                deficits[:, cols] += change[:, None]
        alpha[:, k] = a_new


def loading_sweep(ws, alpha, q, d1, d0, prior_lo, u, n_threads=1):
    """Resample every loading entry once, in place; return fresh counts.

    Returns (n0, n1, c0, c1): per-item respondent counts and correct counts
    in the non-mastery / mastery ideal-response states, evaluated at the
    sampled (alpha, q) over observed cells only.
    """
    n_attrs = q.shape[1]
    w = _cell_weights(ws, d1, d0)
    deficits = _deficits(alpha, q)
    lacking = alpha == 0
    for k in range(n_attrs):
        q_cur = q[:, k].astype(np.int16)
        lack_k = lacking[:, k]
        # cells that flip ideal response when q_jk flips: respondent lacks k
        # and masters every other required attribute
        pivotal = lack_k[:, None] & (deficits == q_cur[None, :])
        delta = -(w * pivotal).sum(axis=0) + prior_lo[:, k]
        q_new = (u[:, k] < _sigmoid(delta)).astype(np.int8)
        change = (q_new - q_cur).astype(np.int16)
        flipped = np.flatnonzero(change)
        if flipped.size:
            deficits[:, flipped] += lack_k[:, None].astype(np.int16) * change[flipped][None, :]
        q[:, k] = q_new

    mastered = (deficits == 0) & ws["obs"]
    unmastered = (deficits != 0) & ws["obs"]
    correct = ws["correct"]
    n1 = mastered.sum(axis=0, dtype=np.float64)
    c1 = (mastered & correct).sum(axis=0, dtype=np.float64)
    n0 = unmastered.sum(axis=0, dtype=np.float64)
    c0 = (unmastered & correct).sum(axis=0, dtype=np.float64)
    return n0, n1, c0, c1
