# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for batched blade-coefficient algebra.

Same contracts as _kernels_py; plain C loops over the frozen COO tables.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def wedge_batch(t, cnp.ndarray[cnp.complex128_t, ndim=2] a,
                cnp.ndarray[cnp.complex128_t, ndim=2] b):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] wi = t.wedge_i
    cdef cnp.ndarray[cnp.int64_t, ndim=1] wj = t.wedge_j
    cdef cnp.ndarray[cnp.int64_t, ndim=1] wk = t.wedge_k
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ws = t.wedge_s
    cdef Py_ssize_t nb = a.shape[0], nt = wi.shape[0], p, q
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.zeros_like(a)
    for p in range(nb):
        for q in range(nt):
            out[p, wk[q]] = out[p, wk[q]] + ws[q] * a[p, wi[q]] * b[p, wj[q]]
    return out


def interior_batch(t, cnp.ndarray[cnp.complex128_t, ndim=2] v,
                   cnp.ndarray[cnp.complex128_t, ndim=2] a):
    cdef cnp.ndarray[cnp.int64_t, ndim=2] lo = t.axis_lo
    cdef cnp.ndarray[cnp.int64_t, ndim=2] hi = t.axis_hi
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sg = t.axis_s
    cdef Py_ssize_t nb = a.shape[0], dim = lo.shape[0], half = lo.shape[1]
    cdef Py_ssize_t p, mu, q
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.zeros_like(a)
    cdef double complex c
    for p in range(nb):
        for mu in range(dim):
            c = v[p, mu]
            if c == 0:
                continue
            for q in range(half):
                out[p, lo[mu, q]] = out[p, lo[mu, q]] + c * sg[mu, q] * a[p, hi[mu, q]]
    return out


def wedge1_batch(t, cnp.ndarray[cnp.complex128_t, ndim=2] xi,
                 cnp.ndarray[cnp.complex128_t, ndim=2] a):
    cdef cnp.ndarray[cnp.int64_t, ndim=2] lo = t.axis_lo
    cdef cnp.ndarray[cnp.int64_t, ndim=2] hi = t.axis_hi
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sg = t.axis_s
    cdef Py_ssize_t nb = a.shape[0], dim = lo.shape[0], half = lo.shape[1]
    cdef Py_ssize_t p, mu, q
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.zeros_like(a)
    cdef double complex c
    for p in range(nb):
        for mu in range(dim):
            c = xi[p, mu]
            if c == 0:
                continue
            for q in range(half):
                out[p, hi[mu, q]] = out[p, hi[mu, q]] + c * sg[mu, q] * a[p, lo[mu, q]]
    return out


def clifford_batch(t, cnp.ndarray[cnp.complex128_t, ndim=2] v,
                   cnp.ndarray[cnp.complex128_t, ndim=2] xi,
                   cnp.ndarray[cnp.complex128_t, ndim=2] a):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = interior_batch(t, v, a)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] w = wedge1_batch(t, xi, a)
    return out + w


def mukai_batch(t, cnp.ndarray[cnp.complex128_t, ndim=2] a,
                cnp.ndarray[cnp.complex128_t, ndim=2] b):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] comp = t.mukai_comp
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ms = t.mukai_s
    cdef Py_ssize_t nb = a.shape[0], size = a.shape[1], p, q
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(nb, dtype=np.complex128)
    cdef double complex acc
    for p in range(nb):
        acc = 0
        for q in range(size):
            acc = acc + ms[q] * a[p, q] * b[p, comp[q]]
        out[p] = acc
    return out
