# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from cython cimport floating
from libc.math cimport exp, expf, floor

cnp.import_array()


def encode_bins(acts, durs, offsets, long step):
    cdef const cnp.int64_t[:] a = np.ascontiguousarray(acts, dtype=np.int64)
    cdef const cnp.int64_t[:] d = np.ascontiguousarray(durs, dtype=np.int64)
    cdef const cnp.int64_t[:] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t n = off.shape[0] - 1
    cdef long n_bins = 1440 // step
    out_arr = np.zeros((max(n, 0), n_bins), dtype=np.int64)
    cdef cnp.int64_t[:, :] out = out_arr
    best_arr = np.zeros(n_bins, dtype=np.int64)
    cdef cnp.int64_t[:] best = best_arr
    cdef Py_ssize_t k, j, b
    cdef long start, end, lo, hi, ov
    for k in range(n):
        best[:] = 0
        start = 0
        for j in range(off[k], off[k + 1]):
            end = start + d[j]
            if d[j] > 0:
                for b in range(start // step, (end - 1) // step + 1):
                    lo = start if start > b * step else b * step
                    hi = end if end < (b + 1) * step else (b + 1) * step
                    ov = hi - lo
                    # strict comparison keeps the earliest entry on ties
                    if ov > best[b]:
                        best[b] = ov
                        out[k, b] = a[j]
            start = end
    return out_arr


def run_lengths(tokens):
    cdef const cnp.int64_t[:, :] t = np.ascontiguousarray(tokens, dtype=np.int64)
    cdef Py_ssize_t n = t.shape[0], length = t.shape[1]
    acts_arr = np.empty(n * length, dtype=np.int64)
    lens_arr = np.empty(n * length, dtype=np.int64)
    off_arr = np.zeros(n + 1, dtype=np.int64)
    cdef cnp.int64_t[:] acts = acts_arr, lens = lens_arr, off = off_arr
    cdef Py_ssize_t k, j, m = 0
    for k in range(n):
        for j in range(length):
            if j == 0 or t[k, j] != t[k, j - 1]:
                acts[m] = t[k, j]
                lens[m] = 1
                m += 1
            else:
                lens[m - 1] += 1
        off[k + 1] = m
    return acts_arr[:m].copy(), lens_arr[:m].copy(), off_arr


def largest_remainder_batch(fracs, offsets, long total):
    cdef const double[:] w = np.ascontiguousarray(fracs, dtype=np.float64)
    cdef const cnp.int64_t[:] off = np.ascontiguousarray(offsets, dtype=np.int64)
    out_arr = np.zeros(w.shape[0], dtype=np.int64)
    cdef cnp.int64_t[:] out = out_arr
    rem_arr = np.zeros(w.shape[0], dtype=np.float64)
    cdef double[:] rem = rem_arr
    cdef Py_ssize_t k, j, pick
    cdef double s, exact, top
    cdef long assigned, short
    for k in range(off.shape[0] - 1):
        s = 0.0
        for j in range(off[k], off[k + 1]):
            s += w[j]
        if s <= 0.0:
            continue
        assigned = 0
        for j in range(off[k], off[k + 1]):
            exact = w[j] / s * total
            out[j] = <long>floor(exact)
            rem[j] = exact - out[j]
            assigned += out[j]
        short = total - assigned
        while short > 0:
            pick = off[k]
            top = -1.0
            for j in range(off[k], off[k + 1]):
                if rem[j] > top:
                    top = rem[j]
                    pick = j
            out[pick] += 1
            rem[pick] = -2.0
            short -= 1
    return out_arr


cdef inline floating _exp(floating x) noexcept nogil:
    if floating is float:
        return expf(x)
    else:
        return exp(x)


cdef inline floating _sig(floating x) noexcept nogil:
    # exp(-x) may overflow to inf for very negative x, giving exactly 0
    cdef floating one = 1
    return one / (one + _exp(-x))


cdef inline floating _tanh(floating x) noexcept nogil:
    cdef floating two = 2
    return two * _sig(two * x) - <floating>1


def _lstm_fwd(floating[:, ::1] pre, floating[:, ::1] c_prev, floating[:, ::1] h,
              floating[:, ::1] c, floating[:, ::1] gates, floating[:, ::1] tc):
    # flat passes over contiguous rows so the compiler can vectorise exp
    cdef Py_ssize_t B = c_prev.shape[0], H = c_prev.shape[1], b, j
    cdef floating *p
    cdef floating *q
    cdef floating *cp
    cdef floating *cc
    cdef floating *tt
    cdef floating *hh
    with nogil:
        for b in range(B):
            p = &pre[b, 0]
            q = &gates[b, 0]
            for j in range(4 * H):
                q[j] = _sig(p[j])
            for j in range(2 * H, 3 * H):
                q[j] = _tanh(p[j])
            cp = &c_prev[b, 0]
            cc = &c[b, 0]
            tt = &tc[b, 0]
            hh = &h[b, 0]
            for j in range(H):
                cc[j] = q[H + j] * cp[j] + q[j] * q[2 * H + j]
            for j in range(H):
                tt[j] = _tanh(cc[j])
            for j in range(H):
                hh[j] = q[3 * H + j] * tt[j]


def lstm_cell_forward(pre, c_prev):
    pre = np.ascontiguousarray(pre)
    c_prev = np.ascontiguousarray(c_prev, dtype=pre.dtype)
    h = np.empty_like(c_prev)
    c = np.empty_like(c_prev)
    tc = np.empty_like(c_prev)
    gates = np.empty_like(pre)
    _lstm_fwd(pre, c_prev, h, c, gates, tc)
    return h, c, gates, tc


def _lstm_bwd(floating[:, ::1] dh, floating[:, ::1] dc, floating[:, ::1] gates,
              floating[:, ::1] c_prev, floating[:, ::1] tc,
              floating[:, ::1] dpre, floating[:, ::1] dc_prev):
    cdef Py_ssize_t B = c_prev.shape[0], H = c_prev.shape[1], b, j
    cdef floating i, f, g, o, t, dct
    with nogil:
        for b in range(B):
            for j in range(H):
                i = gates[b, j]
                f = gates[b, H + j]
                g = gates[b, 2 * H + j]
                o = gates[b, 3 * H + j]
                t = tc[b, j]
                dct = dc[b, j] + dh[b, j] * o * (1.0 - t * t)
                dpre[b, j] = dct * g * i * (1.0 - i)
                dpre[b, H + j] = dct * c_prev[b, j] * f * (1.0 - f)
                dpre[b, 2 * H + j] = dct * i * (1.0 - g * g)
                dpre[b, 3 * H + j] = dh[b, j] * t * o * (1.0 - o)
                dc_prev[b, j] = dct * f


def lstm_cell_backward(dh, dc, gates, c_prev, tanh_c):
    dt = gates.dtype
    dh = np.ascontiguousarray(dh, dtype=dt)
    dc = np.ascontiguousarray(dc, dtype=dt)
    gates = np.ascontiguousarray(gates)
    c_prev = np.ascontiguousarray(c_prev, dtype=dt)
    tanh_c = np.ascontiguousarray(tanh_c, dtype=dt)
    dpre = np.empty_like(gates)
    dc_prev = np.empty_like(c_prev)
    _lstm_bwd(dh, dc, gates, c_prev, tanh_c, dpre, dc_prev)
    return dpre, dc_prev
