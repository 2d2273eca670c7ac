# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sweep kernels (hot path of the fitting engine).

One Gibbs pass over mastery rows and one over loading rows per iteration.
Rows of the independent axis may run under OpenMP; every row consumes its
own slice of pregenerated uniforms, so results are bit-identical for any
thread count.

Per (respondent, item) cell the kernels track the number of required
attributes the respondent lacks.  The ideal response is 1 exactly when the
deficit is 0, and single-entry flips touch the log-likelihood only through
cells whose deficit sits at the relevant boundary, which keeps each sweep
linear in the matrix sizes.
"""

from cython.parallel cimport prange, threadid

from libc.math cimport exp

import numpy as np

NAME = "cython"


cdef inline double _sigmoid(double v) noexcept nogil:
    cdef double e
    if v >= 0.0:
        return 1.0 / (1.0 + exp(-v))
    e = exp(v)
    return e / (1.0 + e)


def prepare(x_enc):
    """Precompute row- and column-major response layouts."""
    x = np.ascontiguousarray(x_enc, dtype=np.int8)
    return {"x": x, "xT": np.ascontiguousarray(x.T)}


cdef void _mastery_row(
    const signed char[:, ::1] x,
    signed char[:, ::1] alpha,
    const long long[::1] col_ptr,
    const long long[::1] col_idx,
    const double[::1] d1,
    const double[::1] d0,
    const double[:, ::1] u,
    int[:, ::1] deficit,
    Py_ssize_t tid,
    Py_ssize_t i,
) noexcept nogil:
    cdef Py_ssize_t n_attrs = alpha.shape[1]
    cdef Py_ssize_t n_items = x.shape[1]
    cdef Py_ssize_t k, j
    cdef long long t
    cdef double delta, p
    cdef signed char a_cur, a_new, xv
    cdef int dm

    for j in range(n_items):
        deficit[tid, j] = 0
    for k in range(n_attrs):
        if alpha[i, k] == 0:
            for t in range(col_ptr[k], col_ptr[k + 1]):
                deficit[tid, col_idx[t]] += 1

    for k in range(n_attrs):
        a_cur = alpha[i, k]
        delta = 0.0
        for t in range(col_ptr[k], col_ptr[k + 1]):
            j = col_idx[t]
            xv = x[i, j]
            if xv >= 0 and deficit[tid, j] == 1 - a_cur:
                delta = delta + (d1[j] if xv == 1 else d0[j])
        p = _sigmoid(delta)
        a_new = 1 if u[i, k] < p else 0
        if a_new != a_cur:
            alpha[i, k] = a_new
            dm = a_cur - a_new
            for t in range(col_ptr[k], col_ptr[k + 1]):
                deficit[tid, col_idx[t]] += dm


def mastery_sweep(ws, alpha, q, d1, d0, u, n_threads=1):
    """Resample every mastery entry once, in place."""
    cdef const signed char[:, ::1] xv = ws["x"]
    cdef signed char[:, ::1] av = alpha
    cdef const double[::1] d1v = d1
    cdef const double[::1] d0v = d0
    cdef const double[:, ::1] uv = u

    qa = np.asarray(q)
    n_attrs = qa.shape[1]
    ks, js = np.nonzero(qa.T)
    col_ptr_np = np.zeros(n_attrs + 1, dtype=np.int64)
    np.cumsum(np.bincount(ks, minlength=n_attrs), out=col_ptr_np[1:])
    col_idx_np = np.ascontiguousarray(js, dtype=np.int64)
    cdef const long long[::1] col_ptr = col_ptr_np
    cdef const long long[::1] col_idx = col_idx_np

    cdef int nt = max(int(n_threads), 1)
    scratch_np = np.zeros((nt, ws["x"].shape[1]), dtype=np.int32)
    cdef int[:, ::1] scratch = scratch_np

    cdef Py_ssize_t i, n = alpha.shape[0]
    for i in prange(n, nogil=True, num_threads=nt, schedule="static"):
        _mastery_row(xv, av, col_ptr, col_idx, d1v, d0v, uv, scratch, threadid(), i)


cdef void _loading_item(
    const signed char[:, ::1] xT,
    const signed char[:, ::1] alphaT,
    signed char[:, ::1] q,
    const double[::1] d1,
    const double[::1] d0,
    const double[:, ::1] prior_lo,
    const double[:, ::1] u,
    const long long[::1] zero_ptr,
    const long long[::1] zero_idx,
    int[:, ::1] deficit,
    Py_ssize_t tid,
    double[::1] n0,
    double[::1] n1,
    double[::1] c0,
    double[::1] c1,
    Py_ssize_t j,
) noexcept nogil:
    cdef Py_ssize_t n_models = xT.shape[1]
    cdef Py_ssize_t n_attrs = q.shape[1]
    cdef Py_ssize_t k, i
    cdef long long t
    cdef double delta, p, tn0, tn1, tc0, tc1
    cdef signed char q_cur, q_new, xv
    cdef int dq

    for i in range(n_models):
        deficit[tid, i] = 0
    for k in range(n_attrs):
        if q[j, k] == 1:
            for i in range(n_models):
                deficit[tid, i] += 1 - alphaT[k, i]

    for k in range(n_attrs):
        q_cur = q[j, k]
        delta = 0.0
        # only respondents lacking attribute k can change ideal response
        for t in range(zero_ptr[k], zero_ptr[k + 1]):
            i = zero_idx[t]
            xv = xT[j, i]
            if xv >= 0 and deficit[tid, i] == q_cur:
                delta = delta - (d1[j] if xv == 1 else d0[j])
        p = _sigmoid(delta + prior_lo[j, k])
        q_new = 1 if u[j, k] < p else 0
        if q_new != q_cur:
            q[j, k] = q_new
            dq = q_new - q_cur
            for t in range(zero_ptr[k], zero_ptr[k + 1]):
                deficit[tid, zero_idx[t]] += dq

    tn0 = 0.0
    tn1 = 0.0
    tc0 = 0.0
    tc1 = 0.0
    for i in range(n_models):
        xv = xT[j, i]
        if xv >= 0:
            if deficit[tid, i] == 0:
                tn1 += 1.0
                tc1 += xv
            else:
                tn0 += 1.0
                tc0 += xv
    n0[j] = tn0
    n1[j] = tn1
    c0[j] = tc0
    c1[j] = tc1


def loading_sweep(ws, alpha, q, d1, d0, prior_lo, u, n_threads=1):
    """Resample every loading entry once, in place; return fresh counts.

    Returns (n0, n1, c0, c1): per-item respondent and correct counts in the
    non-mastery / mastery ideal-response states at the sampled (alpha, q),
    over observed cells only.
    """
    cdef const signed char[:, ::1] xT = ws["xT"]
    cdef signed char[:, ::1] qv = q
    cdef const double[::1] d1v = d1
    cdef const double[::1] d0v = d0
    cdef const double[:, ::1] plo = prior_lo
    cdef const double[:, ::1] uv = u

    alphaT_np = np.ascontiguousarray(np.asarray(alpha).T)
    cdef const signed char[:, ::1] alphaT = alphaT_np

    n_attrs = alphaT_np.shape[0]
    ks, iz = np.nonzero(alphaT_np == 0)
    zero_ptr_np = np.zeros(n_attrs + 1, dtype=np.int64)
    np.cumsum(np.bincount(ks, minlength=n_attrs), out=zero_ptr_np[1:])
    zero_idx_np = np.ascontiguousarray(iz, dtype=np.int64)
    cdef const long long[::1] zero_ptr = zero_ptr_np
    cdef const long long[::1] zero_idx = zero_idx_np

    cdef int nt = max(int(n_threads), 1)
    scratch_np = np.zeros((nt, alphaT_np.shape[1]), dtype=np.int32)
    cdef int[:, ::1] scratch = scratch_np

    cdef Py_ssize_t n_items = q.shape[0]
    n0_np = np.empty(n_items)
    n1_np = np.empty(n_items)
    c0_np = np.empty(n_items)
    c1_np = np.empty(n_items)
    cdef double[::1] n0 = n0_np
    cdef double[::1] n1 = n1_np
    cdef double[::1] c0 = c0_np
    cdef double[::1] c1 = c1_np

    cdef Py_ssize_t j
    for j in prange(n_items, nogil=True, num_threads=nt, schedule="static"):
        _loading_item(
            xT, alphaT, qv, d1v, d0v, plo, uv, zero_ptr, zero_idx,
            scratch, threadid(), n0, n1, c0, c1, j,
        )
    return n0_np, n1_np, c0_np, c1_np
