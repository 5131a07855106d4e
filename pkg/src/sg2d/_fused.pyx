# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: lattice Green sums and fused per-mode SDE steps.

Numerical contract: the step kernels evaluate the same expressions with the
same association order as ``_kernels_py``, componentwise on real and
imaginary parts exactly as numpy's real-by-complex arithmetic does (and the
extension is built with FP contraction disabled), so trajectories agree bit
for bit across backends.
"""

import numpy as np

cimport cython
from libc.math cimport cos

BACKEND = "compiled"


def lattice_cos_sum(double[::1] x1, double[::1] x2,
                    double[::1] n1, double[::1] n2, double[::1] w):
    """out[i] = sum_k w[k] * cos(n1[k] * x1[i] + n2[k] * x2[i])."""
    cdef Py_ssize_t npts = x1.shape[0]
    cdef Py_ssize_t nmodes = n1.shape[0]
    out_arr = np.empty(npts)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef double acc, p1, p2
    with nogil:
        for i in range(npts):
            acc = 0.0
            p1 = x1[i]
            p2 = x2[i]
            for k in range(nmodes):
                acc += w[k] * cos(n1[k] * p1 + n2[k] * p2)
            out[i] = acc
    return out_arr


def wave_step(double complex[:, ::1] u, double complex[:, ::1] v,
              double[:, ::1] a11, double[:, ::1] a12,
              double[:, ::1] a21, double[:, ::1] a22,
              double[:, ::1] w1, double complex[:, ::1] f,
              double complex[:, ::1] nu, double complex[:, ::1] nv,
              double complex[:, ::1] out_u, double complex[:, ::1] out_v):
    """One exact-linear step of the damped-wave pair with drift and noise.

    out_u = (a11*u + a12*v) + (w1*f + nu)
    out_v = (a21*u + a22*v) + (a12*f + nv)
    """
    cdef Py_ssize_t rows = u.shape[0]
    cdef Py_ssize_t cols = u.shape[1]
    cdef Py_ssize_t i, j
    cdef double ur, ui, vr, vi, fr, fi, b11, b12, b21, b22, c1
    with nogil:
        for i in range(rows):
            for j in range(cols):
                ur = u[i, j].real
                ui = u[i, j].imag
                vr = v[i, j].real
                vi = v[i, j].imag
                fr = f[i, j].real
                fi = f[i, j].imag
                b11 = a11[i, j]
                b12 = a12[i, j]
                b21 = a21[i, j]
                b22 = a22[i, j]
                c1 = w1[i, j]
                out_u[i, j].real = (b11 * ur + b12 * vr) + (c1 * fr + nu[i, j].real)
                out_u[i, j].imag = (b11 * ui + b12 * vi) + (c1 * fi + nu[i, j].imag)
                out_v[i, j].real = (b21 * ur + b22 * vr) + (b12 * fr + nv[i, j].real)
                out_v[i, j].imag = (b21 * ui + b22 * vi) + (b12 * fi + nv[i, j].imag)


def heat_step(double complex[:, ::1] u, double[:, ::1] a, double[:, ::1] w,
              double complex[:, ::1] f, double complex[:, ::1] nu,
              double complex[:, ::1] out_u):
    """out_u = a*u + (w*f + nu)."""
    cdef Py_ssize_t rows = u.shape[0]
    cdef Py_ssize_t cols = u.shape[1]
    cdef Py_ssize_t i, j
    cdef double av, wv
    with nogil:
        for i in range(rows):
            for j in range(cols):
                av = a[i, j]
                wv = w[i, j]
                out_u[i, j].real = av * u[i, j].real + (wv * f[i, j].real + nu[i, j].real)
                out_u[i, j].imag = av * u[i, j].imag + (wv * f[i, j].imag + nu[i, j].imag)
