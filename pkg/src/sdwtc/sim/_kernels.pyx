# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled simulator hot loops: likelihood-encoder log-weights and
letter-typicality checks over all codebook cells."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def cell_log_weights(
    cnp.float64_t[::1] logq,
    cnp.int64_t[:, ::1] uv_idx,
    cnp.int64_t[::1] s_seq,
    cnp.int64_t card_s,
):
    cdef Py_ssize_t cells = uv_idx.shape[0]
    cdef Py_ssize_t n = uv_idx.shape[1]
    out = np.empty(cells, dtype=np.float64)
    cdef cnp.float64_t[::1] o = out
    cdef Py_ssize_t c, t
    cdef double acc
    for c in range(cells):
        acc = 0.0
        for t in range(n):
            acc += logq[uv_idx[c, t] * card_s + s_seq[t]]
        o[c] = acc
    return out


def typical_cells(
    cnp.int64_t[:, ::1] puv,
    cnp.int64_t[::1] y_seq,
    cnp.int64_t card_y,
    cnp.float64_t[::1] q_flat,
    double eps,
):
    cdef Py_ssize_t cells = puv.shape[0]
    cdef Py_ssize_t n = puv.shape[1]
    cdef Py_ssize_t t_size = q_flat.shape[0]
    counts = np.zeros(t_size, dtype=np.int64)
    mask = np.zeros(cells, dtype=np.uint8)
    cdef cnp.int64_t[::1] cnt = counts
    cdef cnp.uint8_t[::1] mk = mask
    cdef Py_ssize_t c, t
    cdef double nu, q
    cdef bint ok
    for c in range(cells):
        for t in range(t_size):
            cnt[t] = 0
        for t in range(n):
            cnt[puv[c, t] * card_y + y_seq[t]] += 1
        ok = True
        for t in range(t_size):
            q = q_flat[t]
            nu = cnt[t] / (<double> n)
            if nu - q > eps * q or q - nu > eps * q:
                ok = False
                break
        mk[c] = 1 if ok else 0
    return mask
