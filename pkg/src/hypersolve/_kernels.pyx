# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-axis sweep kernels.

Same contract as ``_kernels_py`` (see its module docstring); single fused
pass over each pencil instead of numpy temporaries.  Arithmetic must stay
bit-identical to the fallback, hence the explicit operation grouping and
the -ffp-contract=off compile flag set in setup.py.
"""
import numpy as np

cimport numpy as cnp


def axis_sweep_convex(double[:, :, ::1] v, double[::1] a, cnp.int64_t[::1] sgn,
                      v_low, v_high, bint wrap):
    cdef Py_ssize_t P = v.shape[0], N = v.shape[1], n = v.shape[2]
    out_arr = np.empty((P, N, n), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] lo = _face_view(v_low, P, n)
    cdef double[:, ::1] hi = _face_view(v_high, P, n)
    cdef Py_ssize_t p, i, c
    cdef cnp.int64_t s
    cdef double ac, up
    with nogil:
        for p in range(P):
            for i in range(N):
                for c in range(n):
                    s = sgn[c]
                    if s > 0:
                        if i > 0:
                            up = v[p, i - 1, c]
                        elif wrap:
                            up = v[p, N - 1, c]
                        else:
                            up = lo[p, c]
                    elif s < 0:
                        if i < N - 1:
                            up = v[p, i + 1, c]
                        elif wrap:
                            up = v[p, 0, c]
                        else:
                            up = hi[p, c]
                    else:
                        up = v[p, i, c]
                    ac = a[c]
                    out[p, i, c] = (v[p, i, c] - ac * v[p, i, c]) + ac * up
    return out_arr


def axis_sweep_delta(double[:, :, ::1] v, double[::1] a, cnp.int64_t[::1] sgn,
                     v_low, v_high, bint wrap):
    cdef Py_ssize_t P = v.shape[0], N = v.shape[1], n = v.shape[2]
    out_arr = np.empty((P, N, n), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] lo = _face_view(v_low, P, n)
    cdef double[:, ::1] hi = _face_view(v_high, P, n)
    cdef Py_ssize_t p, i, c
    cdef cnp.int64_t s
    cdef double up
    with nogil:
        for p in range(P):
            for i in range(N):
                for c in range(n):
                    s = sgn[c]
                    if s > 0:
                        if i > 0:
                            up = v[p, i - 1, c]
                        elif wrap:
                            up = v[p, N - 1, c]
                        else:
                            up = lo[p, c]
                    elif s < 0:
                        if i < N - 1:
                            up = v[p, i + 1, c]
                        elif wrap:
                            up = v[p, 0, c]
                        else:
                            up = hi[p, c]
                    else:
                        up = v[p, i, c]
                    out[p, i, c] = a[c] * (v[p, i, c] - up)
    return out_arr


cdef double[:, ::1] _face_view(obj, Py_ssize_t P, Py_ssize_t n):
    # Wrap-mode callers pass None; give the loops a valid (never read) view.
    if obj is None:
        return np.zeros((P, n), dtype=np.float64)
    return obj
