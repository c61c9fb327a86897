"""Pure-Python versions of the compiled kernels in ``_ckernels.pyx``.

Same signatures and return conventions; used when the extension is not
built, and as the reference side of the kernel parity tests.
"""
import cmath
import math

import numpy as np


def doppler_first_order(g12, g13, g14, delta_s, oc2, ol2, omega_p, num_plus, num_minus,
                        slope12, slope13, v, w):
    m = len(g12)
    rho0 = np.empty(m, dtype=complex)
    plus = np.empty(m, dtype=complex)
    minus = np.empty(m, dtype=complex)
    worst = 1e300
    for i in range(m):
        a = g12[i] + slope12 * v
        b = g13[i] + slope13 * v
        c = g14[i] + slope13 * v
        ids = 1j * delta_s[i]
        inner = 4 * b * c + ol2
        G0 = c * oc2 + a * inner
        Gp = (c + ids) * oc2 + (a + ids) * (4 * (b + ids) * (c + ids) + ol2)
        Gm = (c - ids) * oc2 + (a - ids) * (4 * (b - ids) * (c - ids) + ol2)
        scale = np.abs(c) * oc2 + np.abs(a) * (4 * np.abs(b * c) + ol2) + 1e-300
        worst = min(worst, float(np.min(np.abs(G0) / scale)),
                    float(np.min(np.abs(Gp) / scale)), float(np.min(np.abs(Gm) / scale)))
        if worst <= 1e-300:
            break
        rho0[i] = np.dot(w, 0.5j * omega_p * inner / G0)
        plus[i] = np.dot(w, 0.5j * c * num_plus / (G0 * Gp))
        minus[i] = np.dot(w, 0.5j * (c - ids) * num_minus / (G0 * Gm))
    return rho0, plus, minus, worst


def _solve3(M, B, tol):
    """Gaussian elimination with partial pivoting on a 3x3 list-of-lists."""
    norm = max(abs(x) for row in M for x in row)
    if norm == 0:
        return None
    ncols = len(B[0])
    for col in range(3):
        piv = max(range(col, 3), key=lambda r: abs(M[r][col]))
        if abs(M[piv][col]) <= tol * norm:
            return None
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            B[col], B[piv] = B[piv], B[col]
        for row in range(col + 1, 3):
            f = M[row][col] / M[col][col]
            if f != 0:
                for k in range(col, 3):
                    M[row][k] -= f * M[col][k]
                for q in range(ncols):
                    B[row][q] -= f * B[col][q]
    for q in range(ncols):
        for row in (2, 1, 0):
            t = B[row][q]
            for k in range(row + 1, 3):
                t -= M[row][k] * B[k][q]
            B[row][q] = t / M[row][row]
    return B


def block_tridiag_solve(diag, lower, upper, rhs, tol=1e-12):
    D = np.asarray(diag, dtype=complex).tolist()
    L = np.asarray(lower, dtype=complex).tolist()
    U = np.asarray(upper, dtype=complex).tolist()
    b = np.asarray(rhs, dtype=complex).tolist()
    m = len(D)
    work = []
    for k in range(m):
        M = [row[:] for row in D[k]]
        y = b[k][:]
        if k > 0:
            W = work[k - 1]
            for r in range(3):
                for c in range(3):
                    M[r][c] -= sum(L[k][r][q] * W[q][c] for q in range(3))
                y[r] -= sum(L[k][r][q] * W[q][3] for q in range(3))
        rhs_k = [[(U[k][r][c] if k < m - 1 else 0j) for c in range(3)] + [y[r]] for r in range(3)]
        solved = _solve3(M, rhs_k, tol)
        if solved is None:
            return np.zeros((m, 3), dtype=complex), False
        work.append(solved)
    x = np.zeros((m, 3), dtype=complex)
    x[m - 1] = [work[m - 1][r][3] for r in range(3)]
    for k in range(m - 2, -1, -1):
        W = work[k]
        for r in range(3):
            x[k, r] = W[r][3] - sum(W[r][q] * x[k + 1, q] for q in range(3))
    return x, True


def rk4_harmonics(A, Bp, Bm, C, delta_s, steps_per_cycle, cycles, max_order):
    a = np.asarray(A, dtype=complex).tolist()
    bp = np.asarray(Bp, dtype=complex).tolist()
    bm = np.asarray(Bm, dtype=complex).tolist()
    cc = [complex(x) for x in C]
    S = int(steps_per_cycle)
    K = int(max_order)
    h = 2 * math.pi / delta_s / S
    ph = [cmath.exp(1j * delta_s * (h / 2) * i) for i in range(2 * S)]
    # matrices at every half step of one period, reused each cycle
    mats = []
    for e in ph:
        ec = e.conjugate()
        mats.append([[a[r][c] + bp[r][c] * e + bm[r][c] * ec for c in range(3)] for r in range(3)])

    def f(M, X):
        return [cc[r] + M[r][0] * X[0] + M[r][1] * X[1] + M[r][2] * X[2] for r in range(3)]

    X = [0j, 0j, 0j]
    last = np.zeros((2 * K + 1, 3), dtype=complex)
    prev = np.zeros((2 * K + 1, 3), dtype=complex)
    for cyc in range(cycles):
        record = cyc >= cycles - 2
        acc = last if cyc == cycles - 1 else prev
        for j in range(S):
            i0 = 2 * j
            if record:
                base = ph[i0].conjugate()
                pw = 1 + 0j
                for n in range(K + 1):
                    for r in range(3):
                        acc[K + n, r] += X[r] * pw
                        if n > 0:
                            acc[K - n, r] += X[r] * pw.conjugate()
                    pw *= base
            M0, M1, M2 = mats[i0], mats[i0 + 1], mats[(i0 + 2) % (2 * S)]
            k1 = f(M0, X)
            k2 = f(M1, [X[r] + 0.5 * h * k1[r] for r in range(3)])
            k3 = f(M1, [X[r] + 0.5 * h * k2[r] for r in range(3)])
            k4 = f(M2, [X[r] + h * k3[r] for r in range(3)])
            X = [X[r] + h / 6.0 * (k1[r] + 2 * k2[r] + 2 * k3[r] + k4[r]) for r in range(3)]
    return last / S, prev / S
