# cython: boundscheck=False, wraparound=False, cdivision=True
"""BLAS-backed mode-contraction kernel (compiled backend).

Same contract as the numpy fallback in ``_modes.py``: contract the leading
tensor axis with one zgemm per mode, writing the result directly in the
rolled (axis-cycled) layout so no separate transpose pass is needed.
"""

import numpy as np

from scipy.linalg.cython_blas cimport zgemm


cdef void _mode_step(double complex* a, double complex* x, double complex* out,
                     int m, int r) noexcept nogil:
    # C-order buffers: x is an (m, r) matrix, out an (r, m) matrix holding
    # (A @ X)^T.  In Fortran terms: OUT_F (m x r) = A * X, with the C buffers
    # read as their transposes, hence both operands are passed with 'T'.
    cdef double complex one = 1.0
    cdef double complex zero = 0.0
    cdef char t = b'T'
    zgemm(&t, &t, &m, &r, &m, &one, a, &m, x, &r, &zero, out, &m)


def apply_modes(mats, x):
    """Apply the Kronecker product of ``mats`` to the flat vector ``x``."""
    cdef Py_ssize_t total = x.shape[0]
    buf_a = np.array(x, dtype=np.complex128, order="C", copy=True)
    buf_b = np.empty(total, dtype=np.complex128)

    cdef double complex[::1] va = buf_a
    cdef double complex[::1] vb = buf_b
    cdef double complex[:, ::1] vm
    cdef int m, r
    cdef bint a_is_src = True

    for mat in mats:
        vm = np.ascontiguousarray(mat, dtype=np.complex128)
        m = vm.shape[0]
        r = <int> (total // m)
        if a_is_src:
            with nogil:
                _mode_step(&vm[0, 0], &va[0], &vb[0], m, r)
        else:
            with nogil:
                _mode_step(&vm[0, 0], &vb[0], &va[0], m, r)
        a_is_src = not a_is_src

    return buf_a if a_is_src else buf_b
