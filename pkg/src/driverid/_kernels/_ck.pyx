# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the tree-induction hot loop.

Contract and floating-point operation order match ``_py`` exactly; see its
module docstring.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log2

cnp.import_array()

GAIN_EPS = 1e-12

cdef double _GAIN_EPS = 1e-12


def split_sweep(cnp.float64_t[::1] x, cnp.int32_t[::1] y, cnp.float64_t[::1] w,
                int n_classes, double min_branch_weight):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, c
    cdef cnp.float64_t[::1] acc = np.zeros(n_classes, dtype=np.float64)
    cdef cnp.float64_t[::1] tot = np.zeros(n_classes, dtype=np.float64)
    cdef double total_w = 0.0
    cdef double h_total = 0.0
    cdef double wl, wr, hl, hr, pl, pr, fl, fr, cond, gain, split_info, ratio, p
    cdef double best_ratio = -1.0
    cdef double best_gain = 0.0
    cdef double best_si = 0.0
    cdef Py_ssize_t best_pos = -1

    for i in range(n):
        tot[y[i]] += w[i]
        total_w += w[i]

    for c in range(n_classes):
        p = tot[c] / total_w
        if p > 0.0:
            h_total -= p * log2(p)

    wl = 0.0
    for i in range(n - 1):
        acc[y[i]] += w[i]
        wl += w[i]
        if x[i] == x[i + 1]:
            continue
        wr = total_w - wl
        hl = 0.0
        hr = 0.0
        for c in range(n_classes):
            pl = acc[c] / wl
            if pl > 0.0:
                hl -= pl * log2(pl)
            pr = (tot[c] - acc[c]) / wr
            if pr > 0.0:
                hr -= pr * log2(pr)
        fl = wl / total_w
        fr = wr / total_w
        cond = fl * hl + fr * hr
        gain = h_total - cond
        if gain <= _GAIN_EPS:
            continue
        if wl < min_branch_weight or wr < min_branch_weight:
            continue
        split_info = -(fl * log2(fl)) - (fr * log2(fr))
        ratio = gain / split_info
        if ratio > best_ratio:
            best_ratio = ratio
            best_gain = gain
            best_si = split_info
            best_pos = i + 1

    if best_pos < 0:
        return -1, 0.0, 0.0
    return best_pos, best_gain, best_si


def group_tally(cnp.int32_t[::1] codes, cnp.int32_t[::1] y, cnp.float64_t[::1] w,
                int n_groups, int n_classes):
    cdef Py_ssize_t n = codes.shape[0]
    cdef Py_ssize_t i
    m_arr = np.zeros((n_groups, n_classes), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] m = m_arr
    for i in range(n):
        m[codes[i], y[i]] += w[i]
    return m_arr
