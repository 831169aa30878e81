# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: periodic convolution, semi-Lagrangian row shift,
and the batched tridiagonal solve used by the velocity-space scheme.

Mirrors fpalign._core_np; both must agree to roundoff.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def convolve_circ(cnp.float64_t[::1] g, cnp.float64_t[::1] phi, double dx):
    """Periodic convolution (phi * g)(x_i) = sum_k phi[i-k] g[k] dx."""
    cdef Py_ssize_t n = phi.shape[0]
    if g.shape[0] != n:
        raise ValueError("size mismatch")
    out_arr = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t i, k, d
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(n):
                d = i - k
                if d < 0:
                    d += n
                acc += phi[d] * g[k]
            out[i] = acc * dx
    return out_arr


def advect_rows(cnp.float64_t[:, ::1] f, cnp.int64_t[::1] k, cnp.float64_t[::1] nu):
    """Advect each v-column by k[j] + nu[j] cells: circular shift plus a
    flux-form fractional step with parabolic reconstruction and a
    positivity-preserving donor-cell flux clamp."""
    cdef Py_ssize_t nx = f.shape[0]
    cdef Py_ssize_t nv = f.shape[1]
    out_arr = np.empty((nx, nv), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef cnp.float64_t[::1] g = np.empty(nx, dtype=np.float64)
    cdef cnp.float64_t[::1] fr = np.empty(nx, dtype=np.float64)
    cdef cnp.float64_t[::1] flux = np.empty(nx, dtype=np.float64)
    cdef Py_ssize_t i, j, i0, im1, ip1, ip2
    cdef long kj
    cdef double nuj, fl_i, fr_i, dfi, p6i, fx
    with nogil:
        for j in range(nv):
            kj = k[j] % nx
            if kj < 0:
                kj += nx
            nuj = nu[j]
            for i in range(nx):
                i0 = i - kj
                if i0 < 0:
                    i0 += nx
                g[i] = f[i0, j]
            for i in range(nx):
                im1 = i - 1
                if im1 < 0:
                    im1 += nx
                ip1 = i + 1
                if ip1 >= nx:
                    ip1 -= nx
                ip2 = i + 2
                if ip2 >= nx:
                    ip2 -= nx
                fr[i] = (-g[im1] + 7.0 * g[i] + 7.0 * g[ip1] - g[ip2]) / 12.0
            for i in range(nx):
                im1 = i - 1
                if im1 < 0:
                    im1 += nx
                fl_i = fr[im1]
                fr_i = fr[i]
                dfi = fr_i - fl_i
                p6i = 6.0 * g[i] - 3.0 * (fl_i + fr_i)
                fx = nuj * (fl_i + dfi * (1.0 - 0.5 * nuj)) \
                    + p6i * nuj * nuj * (0.5 - nuj / 3.0)
                if fx < 0.0:
                    fx = 0.0
                elif fx > g[i]:
                    fx = g[i]
                flux[i] = fx
            for i in range(nx):
                im1 = i - 1
                if im1 < 0:
                    im1 += nx
                out[i, j] = g[i] - (flux[i] - flux[im1])
    return out_arr


def thomas_columns(cnp.float64_t[:, ::1] sub, cnp.float64_t[:, ::1] diag,
                   cnp.float64_t[:, ::1] sup, cnp.float64_t[:, ::1] rhs):
    """Solve, for each x-row i, the tridiagonal system along the v-axis."""
    cdef Py_ssize_t nx = rhs.shape[0]
    cdef Py_ssize_t nv = rhs.shape[1]
    x_arr = np.empty((nx, nv), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] x = x_arr
    cdef cnp.float64_t[:, ::1] cp = np.empty((nx, nv), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] dp = np.empty((nx, nv), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double m
    with nogil:
        for i in range(nx):
            cp[i, 0] = sup[i, 0] / diag[i, 0]
            dp[i, 0] = rhs[i, 0] / diag[i, 0]
            for j in range(1, nv):
                m = diag[i, j] - sub[i, j] * cp[i, j - 1]
                cp[i, j] = sup[i, j] / m
                dp[i, j] = (rhs[i, j] - sub[i, j] * dp[i, j - 1]) / m
            x[i, nv - 1] = dp[i, nv - 1]
            for j in range(nv - 2, -1, -1):
                x[i, j] = dp[i, j] - cp[i, j] * x[i, j + 1]
    return x_arr
