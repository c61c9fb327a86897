# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Signatures mirror :mod:`rydsuperhet._pykernels`."""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, fabs, sqrt

cnp.import_array()

ctypedef double complex cplx


cdef inline double cabs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double cabs(cplx z) noexcept nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef inline cplx cconj(cplx z) noexcept nogil:
    return z.real - 1j * z.imag


def doppler_first_order(const cplx[::1] g12, const cplx[::1] g13, const cplx[::1] g14,
                        const double[::1] delta_s, double oc2, double ol2,
                        cplx omega_p, cplx num_plus, cplx num_minus,
                        cplx slope12, cplx slope13,
                        const double[::1] v, const double[::1] w):
    cdef Py_ssize_t m = g12.shape[0]
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t i, j
    cdef cplx a, b, c, ids, inner, G0, Gp, Gm, s0, sp, sm
    cdef double scale, worst = 1e300, ratio
    # with no signal field the sideband sums vanish; skip them
    cdef bint sidebands = num_plus != 0 or num_minus != 0
    rho0 = np.empty(m, dtype=np.complex128)
    plus = np.empty(m, dtype=np.complex128)
    minus = np.empty(m, dtype=np.complex128)
    cdef cplx[::1] r0 = rho0
    cdef cplx[::1] rp = plus
    cdef cplx[::1] rm = minus
    with nogil:
        for i in range(m):
            s0 = 0
            sp = 0
            sm = 0
            ids = 1j * delta_s[i]
            for j in range(n):
                a = g12[i] + slope12 * v[j]
                b = g13[i] + slope13 * v[j]
                c = g14[i] + slope13 * v[j]
                inner = 4 * b * c + ol2
                G0 = c * oc2 + a * inner
                scale = cabs(c) * oc2 + cabs(a) * (4 * cabs(b * c) + ol2) + 1e-300
                ratio = cabs(G0) / scale
                if ratio < worst:
                    worst = ratio
                if sidebands:
                    Gp = (c + ids) * oc2 + (a + ids) * (4 * (b + ids) * (c + ids) + ol2)
                    Gm = (c - ids) * oc2 + (a - ids) * (4 * (b - ids) * (c - ids) + ol2)
                    ratio = cabs(Gp) / scale
                    if ratio < worst:
                        worst = ratio
                    ratio = cabs(Gm) / scale
                    if ratio < worst:
                        worst = ratio
                if worst <= 1e-300:
                    break
                s0 = s0 + w[j] * (0.5j * omega_p * inner / G0)
                if sidebands:
                    sp = sp + w[j] * (0.5j * c * num_plus / (G0 * Gp))
                    sm = sm + w[j] * (0.5j * (c - ids) * num_minus / (G0 * Gm))
            r0[i] = s0
            rp[i] = sp
            rm[i] = sm
            if worst <= 1e-300:
                break
    return rho0, plus, minus, worst


cdef int solve3(cplx[:, ::1] M, cplx[:, ::1] B, int ncols, double tol) noexcept nogil:
    """In-place Gaussian elimination with partial pivoting; solution left in B."""
    cdef int col, row, piv, k, q
    cdef double best, mag, norm = 0
    cdef cplx f, t
    for row in range(3):
        for col in range(3):
            mag = cabs(M[row, col])
            if mag > norm:
                norm = mag
    if norm == 0:
        return 1
    for col in range(3):
        piv = col
        best = cabs(M[col, col])
        for row in range(col + 1, 3):
            mag = cabs(M[row, col])
            if mag > best:
                best = mag
                piv = row
        if best <= tol * norm:
            return 1
        if piv != col:
            for k in range(3):
                t = M[col, k]; M[col, k] = M[piv, k]; M[piv, k] = t
            for q in range(ncols):
                t = B[col, q]; B[col, q] = B[piv, q]; B[piv, q] = t
        for row in range(col + 1, 3):
            f = M[row, col] / M[col, col]
            if f != 0:
                for k in range(col, 3):
                    M[row, k] = M[row, k] - f * M[col, k]
                for q in range(ncols):
                    B[row, q] = B[row, q] - f * B[col, q]
    for q in range(ncols):
        for row in range(2, -1, -1):
            t = B[row, q]
            for k in range(row + 1, 3):
                t = t - M[row, k] * B[k, q]
            B[row, q] = t / M[row, row]
    return 0


def block_tridiag_solve(diag, lower, upper, rhs, double tol=1e-12):
    """Solve the block-tridiagonal system with 3x3 blocks.

    Row k reads ``lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1] = rhs[k]``.
    Returns ``(x, ok)``; ``ok`` is False if a pivot block was singular.
    """
    cdef cplx[:, :, ::1] D = np.ascontiguousarray(diag, dtype=np.complex128)
    cdef cplx[:, :, ::1] L = np.ascontiguousarray(lower, dtype=np.complex128)
    cdef cplx[:, :, ::1] U = np.ascontiguousarray(upper, dtype=np.complex128)
    cdef cplx[:, ::1] b = np.ascontiguousarray(rhs, dtype=np.complex128)
    cdef Py_ssize_t m = D.shape[0]
    cdef Py_ssize_t k, r, c, q
    # work[k] holds [D'^-1 U | D'^-1 y] for block k (3 x 4)
    work_arr = np.zeros((m, 3, 4), dtype=np.complex128)
    cdef cplx[:, :, ::1] work = work_arr
    cdef cplx[:, ::1] M = np.empty((3, 3), dtype=np.complex128)
    x_arr = np.zeros((m, 3), dtype=np.complex128)
    cdef cplx[:, ::1] x = x_arr
    cdef cplx acc
    cdef int status = 0
    with nogil:
        for k in range(m):
            for r in range(3):
                for c in range(3):
                    acc = D[k, r, c]
                    if k > 0:
                        for q in range(3):
                            acc = acc - L[k, r, q] * work[k - 1, q, c]
                    M[r, c] = acc
                for c in range(3):
                    work[k, r, c] = U[k, r, c] if k < m - 1 else 0
                acc = b[k, r]
                if k > 0:
                    for q in range(3):
                        acc = acc - L[k, r, q] * work[k - 1, q, 3]
                work[k, r, 3] = acc
            status = solve3(M, work[k], 4, tol)
            if status != 0:
                break
        if status == 0:
            for r in range(3):
                x[m - 1, r] = work[m - 1, r, 3]
            for k in range(m - 2, -1, -1):
                for r in range(3):
                    acc = work[k, r, 3]
                    for q in range(3):
                        acc = acc - work[k, r, q] * x[k + 1, q]
                    x[k, r] = acc
    return x_arr, status == 0


cdef inline void deriv(cplx[:, ::1] A, cplx[:, ::1] Bp, cplx[:, ::1] Bm,
                       cplx[::1] C, cplx e, cplx* X, cplx* out) noexcept nogil:
    cdef int r, c
    cdef cplx acc, ec = cconj(e)
    for r in range(3):
        acc = C[r]
        for c in range(3):
            acc = acc + (A[r, c] + Bp[r, c] * e + Bm[r, c] * ec) * X[c]
        out[r] = acc


def rk4_harmonics(A, Bp, Bm, C, double delta_s, int steps_per_cycle, int cycles, int max_order):
    """Integrate dX/dt = (A + Bp e^{i ds t} + Bm e^{-i ds t}) X + C from X(0) = 0.

    Classical RK4 with ``steps_per_cycle`` fixed steps per beat period. The
    harmonics X_n, |n| <= max_order, are projected over each of the last two
    periods and returned as ``(last, previous)`` arrays of shape
    ``(2 max_order + 1, 3)``.
    """
    cdef cplx[:, ::1] a = np.ascontiguousarray(A, dtype=np.complex128)
    cdef cplx[:, ::1] bp = np.ascontiguousarray(Bp, dtype=np.complex128)
    cdef cplx[:, ::1] bm = np.ascontiguousarray(Bm, dtype=np.complex128)
    cdef cplx[::1] cc = np.ascontiguousarray(C, dtype=np.complex128)
    cdef int S = steps_per_cycle
    cdef int K = max_order
    cdef double period = 2 * 3.141592653589793 / delta_s
    cdef double h = period / S
    phase_arr = np.exp(1j * delta_s * (h / 2) * np.arange(2 * S))
    cdef cplx[::1] ph = phase_arr
    last_arr = np.zeros((2 * K + 1, 3), dtype=np.complex128)
    prev_arr = np.zeros((2 * K + 1, 3), dtype=np.complex128)
    cdef cplx[:, ::1] last = last_arr
    cdef cplx[:, ::1] prev = prev_arr
    cdef cplx X[3]
    cdef cplx k1[3]
    cdef cplx k2[3]
    cdef cplx k3[3]
    cdef cplx k4[3]
    cdef cplx tmp[3]
    cdef cplx e0, e1, e2, base, pw
    cdef int cyc, j, r, n, i0, i1, i2
    cdef cplx[:, ::1] acc
    for r in range(3):
        X[r] = 0
    with nogil:
        for cyc in range(cycles):
            for j in range(S):
                i0 = 2 * j
                i1 = i0 + 1
                i2 = (i0 + 2) % (2 * S)
                if cyc >= cycles - 2:
                    acc = last if cyc == cycles - 1 else prev
                    base = cconj(ph[i0])
                    # n = 0 .. K via powers of e^{-i ds t}; negative n by conjugate phase
                    pw = 1
                    for n in range(K + 1):
                        for r in range(3):
                            acc[K + n, r] = acc[K + n, r] + X[r] * pw
                            if n > 0:
                                acc[K - n, r] = acc[K - n, r] + X[r] * cconj(pw)
                        pw = pw * base
                e0 = ph[i0]
                e1 = ph[i1]
                e2 = ph[i2]
                deriv(a, bp, bm, cc, e0, X, k1)
                for r in range(3):
                    tmp[r] = X[r] + 0.5 * h * k1[r]
                deriv(a, bp, bm, cc, e1, tmp, k2)
                for r in range(3):
                    tmp[r] = X[r] + 0.5 * h * k2[r]
                deriv(a, bp, bm, cc, e1, tmp, k3)
                for r in range(3):
                    tmp[r] = X[r] + h * k3[r]
                deriv(a, bp, bm, cc, e2, tmp, k4)
                for r in range(3):
                    X[r] = X[r] + h / 6.0 * (k1[r] + 2 * k2[r] + 2 * k3[r] + k4[r])
    last_arr /= S
    prev_arr /= S
    return last_arr, prev_arr
