# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled CAVI sweep and shared-prefix ML-GA search.

Same contracts as :mod:`rcsm._pykernels`; see that module for the maths.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, exp

cnp.import_array()

DEF SINGULAR_TOL = 1e-12


cdef inline void matvec(double complex[:, ::1] A, double complex[:, ::1] H, Py_ssize_t col,
                        double complex* u, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double re, im, ar, ai, hr, hi
    for i in range(n):
        re = 0.0
        im = 0.0
        for j in range(n):
            ar = A[i, j].real
            ai = A[i, j].imag
            hr = H[j, col].real
            hi = H[j, col].imag
            re += ar * hr - ai * hi
            im += ar * hi + ai * hr
        u[i] = re + 1j * im


cdef inline double hdot_real(double complex[:, ::1] H, Py_ssize_t col,
                             double complex* u, Py_ssize_t n) noexcept nogil:
    # Re(h^H u)
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(n):
        s += H[i, col].real * u[i].real + H[i, col].imag * u[i].imag
    return s


cdef inline void project_obs(double complex[:, ::1] Y, double complex* u, double* bsq,
                             Py_ssize_t m_count, Py_ssize_t n) noexcept nogil:
    # bsq[m] = |u^H y_m|^2
    cdef Py_ssize_t m, i
    cdef double re, im, ur, ui, yr, yi
    for m in range(m_count):
        re = 0.0
        im = 0.0
        for i in range(n):
            ur = u[i].real
            ui = u[i].imag
            yr = Y[m, i].real
            yi = Y[m, i].imag
            re += ur * yr + ui * yi
            im += ur * yi - ui * yr
        bsq[m] = re * re + im * im


cdef inline void hermitian_downdate(double complex[:, ::1] src, double complex[:, ::1] dst,
                                    double complex* u, double coef, Py_ssize_t n) noexcept nogil:
    # dst = src - coef * u u^H, written on the upper triangle and mirrored
    cdef Py_ssize_t i, j
    cdef double re, im, ur, ui, vr, vi
    for i in range(n):
        ur = u[i].real
        ui = u[i].imag
        dst[i, i] = (src[i, i].real - coef * (ur * ur + ui * ui)) + 0j
        for j in range(i + 1, n):
            vr = u[j].real
            vi = u[j].imag
            re = 0.5 * (src[i, j].real + src[j, i].real) - coef * (ur * vr + ui * vi)
            im = 0.5 * (src[i, j].imag - src[j, i].imag) - coef * (ui * vr - ur * vi)
            dst[i, j] = re + 1j * im
            dst[j, i] = re - 1j * im


def cavi_sweep(double complex[:, ::1] inv, double[::1] quads, double log_det,
               double complex[:, ::1] H, double complex[:, ::1] Y,
               double[::1] q, double mu):
    """One ascending coordinate sweep, updating ``inv``, ``quads`` and ``q`` in place.

    Returns ``(log_det, failed_index)``; ``failed_index`` is -1 on success.
    """
    cdef Py_ssize_t n = H.shape[0]
    cdef Py_ssize_t L = H.shape[1]
    cdef Py_ssize_t M = Y.shape[0]
    cdef Py_ssize_t l, m
    cdef double a, c0, c1, den0, den1, s0, s1, lg0, lg1, chi, q_new, c, den, coef, sumb
    cdef double complex[::1] u_buf = np.empty(n, dtype=np.complex128)
    cdef double[::1] b_buf = np.empty(M, dtype=np.float64)
    cdef double complex* u = &u_buf[0]
    cdef double* bsq = &b_buf[0]
    cdef Py_ssize_t failed = -1
    with nogil:
        for l in range(L):
            matvec(inv, H, l, u, n)
            a = hdot_real(H, l, u, n)
            project_obs(Y, u, bsq, M, n)
            sumb = 0.0
            s0 = 0.0
            for m in range(M):
                sumb += bsq[m]
                s0 += quads[m]
            c0 = -q[l]
            c1 = 1.0 - q[l]
            den0 = 1.0 + c0 * a
            den1 = 1.0 + c1 * a
            if den0 <= SINGULAR_TOL or den1 <= SINGULAR_TOL:
                failed = l
                break
            lg0 = -(s0 - c0 / den0 * sumb) - M * (log_det + log(den0))
            lg1 = -(s0 - c1 / den1 * sumb) - M * (log_det + log(den1))
            if lg0 > lg1:
                s1 = exp(lg1 - lg0)
                chi = s1 / (1.0 + s1)
            else:
                chi = 1.0 / (1.0 + exp(lg0 - lg1))
            q_new = (1.0 - mu) * q[l] + mu * chi
            c = q_new - q[l]
            if c != 0.0:
                den = 1.0 + c * a
                if den <= SINGULAR_TOL:
                    failed = l
                    break
                coef = c / den
                hermitian_downdate(inv, inv, u, coef, n)
                for m in range(M):
                    quads[m] -= coef * bsq[m]
                log_det += log(den)
            q[l] = q_new
    return log_det, failed


cdef void _gram_node(double complex[:, :, ::1] G, double complex[:, :, ::1] P,
                     double[:, ::1] Q, double* logdets, Py_ssize_t depth, Py_ssize_t start,
                     Py_ssize_t K, Py_ssize_t* path, Py_ssize_t* best_path,
                     long long* rank, long long* best_rank, double* best_metric,
                     double[::1] table, bint keep_table) noexcept nogil:
    # G[d] = H^H A_d^{-1} H, P[d] = H^H A_d^{-1} Y^T, Q[d, m] = y_m^H A_d^{-1} y_m
    cdef Py_ssize_t L = G.shape[1]
    cdef Py_ssize_t M = P.shape[2]
    cdef Py_ssize_t col, m, t, i, j
    cdef double a, coef, qsum, bsum, metric, gr, gi, hr, hi, pr, pi
    for col in range(start, L - (K - depth) + 1):
        a = G[depth, col, col].real
        coef = 1.0 / (1.0 + a)
        path[depth] = col
        if depth == K - 1:
            qsum = 0.0
            bsum = 0.0
            for m in range(M):
                qsum += Q[depth, m]
                pr = P[depth, col, m].real
                pi = P[depth, col, m].imag
                bsum += pr * pr + pi * pi
            metric = qsum - coef * bsum + M * (logdets[depth] + log1p(a))
            if keep_table:
                table[rank[0]] = metric
            if metric < best_metric[0]:
                best_metric[0] = metric
                best_rank[0] = rank[0]
                for t in range(K):
                    best_path[t] = path[t]
            rank[0] += 1
        else:
            # only columns after col are visited below this node; leaves read
            # just the diagonal of G, so the last internal level skips the rest
            for i in range(col + 1, L):
                gr = G[depth, i, col].real
                gi = G[depth, i, col].imag
                if depth == K - 2:
                    G[depth + 1, i, i] = G[depth, i, i].real - coef * (gr * gr + gi * gi)
                else:
                    for j in range(i, L):
                        hr = G[depth, j, col].real
                        hi = G[depth, j, col].imag
                        G[depth + 1, i, j] = G[depth, i, j] - coef * ((gr * hr + gi * hi) + 1j * (gi * hr - gr * hi))
                        G[depth + 1, j, i] = G[depth + 1, i, j].conjugate()
                for m in range(M):
                    pr = P[depth, col, m].real
                    pi = P[depth, col, m].imag
                    P[depth + 1, i, m] = P[depth, i, m] - coef * ((gr * pr - gi * pi) + 1j * (gr * pi + gi * pr))
            for m in range(M):
                pr = P[depth, col, m].real
                pi = P[depth, col, m].imag
                Q[depth + 1, m] = Q[depth, m] - coef * (pr * pr + pi * pi)
            logdets[depth + 1] = logdets[depth] + log1p(a)
            _gram_node(G, P, Q, logdets, depth + 1, col + 1, K, path, best_path,
                       rank, best_rank, best_metric, table, keep_table)


def mlga_search_gram(double complex[:, ::1] H, double complex[:, ::1] Y, double noise_var,
                     Py_ssize_t K, double[::1] table=None):
    """Exhaustive search carried out on ``G = H^H A^{-1} H`` and ``P = H^H A^{-1} Y^T``.

    Returns ``(best_rank, best_support, best_metric)``; ``table`` (length
    C(L, K)) receives every candidate metric in lexicographic order.
    """
    cdef Py_ssize_t L = H.shape[1]
    cdef Py_ssize_t M = Y.shape[0]
    cdef Py_ssize_t i
    cdef double gamma = 1.0 / noise_var
    Hn = np.asarray(H)
    Yn = np.asarray(Y)
    cdef double complex[:, :, ::1] G = np.zeros((K, L, L), dtype=np.complex128)
    cdef double complex[:, :, ::1] P = np.zeros((K, L, M), dtype=np.complex128)
    cdef double[:, ::1] Q = np.zeros((K, M), dtype=np.float64)
    cdef double[::1] logdets = np.zeros(K, dtype=np.float64)
    cdef Py_ssize_t[::1] path = np.zeros(K, dtype=np.intp)
    cdef Py_ssize_t[::1] best_path = np.zeros(K, dtype=np.intp)
    cdef long long rank = 0
    cdef long long best_rank = -1
    cdef double best_metric = np.inf
    cdef bint keep_table = table is not None
    np.asarray(G)[0] = gamma * (Hn.conj().T @ Hn)
    np.asarray(P)[0] = gamma * (Hn.conj().T @ Yn.T)
    np.asarray(Q)[0] = gamma * np.sum(np.abs(Yn) ** 2, axis=1)
    logdets[0] = H.shape[0] * log(noise_var)
    with nogil:
        _gram_node(G, P, Q, &logdets[0], 0, 0, K, &path[0], &best_path[0],
                   &rank, &best_rank, &best_metric, table, keep_table)
    return best_rank, tuple(int(best_path[i]) for i in range(K)), best_metric


cdef void _cov_node(double complex[:, :, ::1] invs, double[:, ::1] quads, double* logdets,
                    double complex[:, ::1] H, double complex[:, ::1] Y,
                    Py_ssize_t depth, Py_ssize_t start, Py_ssize_t K,
                    double complex* u, double* bsq, Py_ssize_t* path, Py_ssize_t* best_path,
                    long long* rank, long long* best_rank, double* best_metric,
                    double[::1] table, bint keep_table) noexcept nogil:
    cdef Py_ssize_t n = H.shape[0]
    cdef Py_ssize_t L = H.shape[1]
    cdef Py_ssize_t M = Y.shape[0]
    cdef Py_ssize_t col, m, t
    cdef double a, qsum, bsum, metric, coef
    for col in range(start, L - (K - depth) + 1):
        matvec(invs[depth], H, col, u, n)
        a = hdot_real(H, col, u, n)
        project_obs(Y, u, bsq, M, n)
        coef = 1.0 / (1.0 + a)
        path[depth] = col
        if depth == K - 1:
            qsum = 0.0
            bsum = 0.0
            for m in range(M):
                qsum += quads[depth, m]
                bsum += bsq[m]
            metric = qsum - coef * bsum + M * (logdets[depth] + log1p(a))
            if keep_table:
                table[rank[0]] = metric
            if metric < best_metric[0]:
                best_metric[0] = metric
                best_rank[0] = rank[0]
                for t in range(K):
                    best_path[t] = path[t]
            rank[0] += 1
        else:
            hermitian_downdate(invs[depth], invs[depth + 1], u, coef, n)
            for m in range(M):
                quads[depth + 1, m] = quads[depth, m] - coef * bsq[m]
            logdets[depth + 1] = logdets[depth] + log1p(a)
            _cov_node(invs, quads, logdets, H, Y, depth + 1, col + 1, K, u, bsq,
                      path, best_path, rank, best_rank, best_metric, table, keep_table)


def mlga_search(double complex[:, ::1] H, double complex[:, ::1] Y, double noise_var,
                Py_ssize_t K, double[::1] table=None):
    """Exhaustive Gaussian-approximation search over all K-subsets.

    Each candidate costs one ``A^{-1} h`` product on top of its shared prefix.
    Returns ``(best_rank, best_support, best_metric)``; ``table`` (length
    C(L, K)) receives every candidate metric in lexicographic order.
    """
    cdef Py_ssize_t n = H.shape[0]
    cdef Py_ssize_t M = Y.shape[0]
    cdef Py_ssize_t i, m
    cdef double complex[:, :, ::1] invs = np.zeros((K, n, n), dtype=np.complex128)
    cdef double[:, ::1] quads = np.zeros((K, M), dtype=np.float64)
    cdef double[::1] logdets = np.zeros(K, dtype=np.float64)
    cdef double complex[::1] u_buf = np.empty(n, dtype=np.complex128)
    cdef double[::1] b_buf = np.empty(M, dtype=np.float64)
    cdef Py_ssize_t[::1] path = np.zeros(K, dtype=np.intp)
    cdef Py_ssize_t[::1] best_path = np.zeros(K, dtype=np.intp)
    cdef long long rank = 0
    cdef long long best_rank = -1
    cdef double best_metric = np.inf
    cdef double gamma = 1.0 / noise_var
    cdef bint keep_table = table is not None
    cdef double s
    for i in range(n):
        invs[0, i, i] = gamma
    for m in range(M):
        s = 0.0
        for i in range(n):
            s += Y[m, i].real * Y[m, i].real + Y[m, i].imag * Y[m, i].imag
        quads[0, m] = gamma * s
    logdets[0] = n * log(noise_var)
    with nogil:
        _cov_node(invs, quads, &logdets[0], H, Y, 0, 0, K, &u_buf[0], &b_buf[0],
                  &path[0], &best_path[0], &rank, &best_rank, &best_metric,
                  table, keep_table)
    return best_rank, tuple(int(best_path[i]) for i in range(K)), best_metric
