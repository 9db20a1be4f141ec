"""Pure numpy versions of the hot kernels.

Both kernels work on ``A = H diag(w) H^H + N0 I`` through its inverse,
its log-determinant and the per-observation quadratic forms
``Q_m = y_m^H A^{-1} y_m``.  Moving one weight ``w_l`` by ``c`` is a
rank-1 step: with ``u = A^{-1} h_l``, ``a = h_l^H u``, ``b_m = u^H y_m``

    A^{-1}  <- A^{-1} - c / (1 + c a) u u^H
    Q_m     <- Q_m - c / (1 + c a) |b_m|^2
    ln det  <- ln det + ln(1 + c a)

so one coordinate costs O(N^2 + M N) and never touches the other weights.
"""
from __future__ import annotations

import math

import numpy as np

SINGULAR_TOL = 1e-12


def cavi_sweep(inv, quads, log_det, H, Y, q, mu):
    """One ascending coordinate sweep, updating ``inv``, ``quads`` and ``q`` in place.

    Returns ``(log_det, failed_index)``; ``failed_index`` is -1 on success.
    """
    L = H.shape[1]
    M = Y.shape[0]
    Yc = Y.conj()
    for l in range(L):
        h = H[:, l]
        u = inv @ h
        a = float(np.vdot(h, u).real)
        bsq = np.abs(Yc @ u) ** 2
        sumb = float(bsq.sum())
        s0 = float(quads.sum())
        c0 = -q[l]
        c1 = 1.0 - q[l]
        den0 = 1.0 + c0 * a
        den1 = 1.0 + c1 * a
        if den0 <= SINGULAR_TOL or den1 <= SINGULAR_TOL:
            return log_det, l
        lg0 = -(s0 - c0 / den0 * sumb) - M * (log_det + math.log(den0))
        lg1 = -(s0 - c1 / den1 * sumb) - M * (log_det + math.log(den1))
        if lg0 > lg1:
            e = math.exp(lg1 - lg0)
            chi = e / (1.0 + e)
        else:
            chi = 1.0 / (1.0 + math.exp(lg0 - lg1))
        q_new = (1.0 - mu) * q[l] + mu * chi
        c = q_new - q[l]
        if c != 0.0:
            den = 1.0 + c * a
            if den <= SINGULAR_TOL:
                return log_det, l
            coef = c / den
            inv -= coef * np.outer(u, u.conj())
            inv[...] = 0.5 * (inv + inv.conj().T)
            quads -= coef * bsq
            log_det += math.log(den)
        q[l] = q_new
    return log_det, -1


def mlga_search_gram(H, Y, noise_var, K, table=None):
    """Exhaustive search over all K-subsets on projected quantities.

    Same enumeration as :func:`mlga_search`, but the search runs on the projected quantities
    ``G = H^H A^{-1} H`` and ``P = H^H A^{-1} Y^T``: switching column ``c``
    on moves them by ``-g g^H / (1 + G_cc)`` and ``-g P_c / (1 + G_cc)``
    with ``g = G[:, c]``, and a leaf's metric needs only ``G_cc`` and
    ``P_c``.  Returns ``(best_rank, best_support, best_metric)``.
    """
    n, L = H.shape
    M = Y.shape[0]
    gamma = 1.0 / noise_var
    G0 = gamma * (H.conj().T @ H)
    P0 = gamma * (H.conj().T @ Y.T)
    Q0 = gamma * np.sum(np.abs(Y) ** 2, axis=1)
    best = [np.inf, -1, ()]
    counter = [0]

    def leaves(diag, P, Q, log_det, start, path):
        a = diag[start:].real
        bsq = np.sum(np.abs(P[start:]) ** 2, axis=1)
        metrics = Q.sum() - bsq / (1.0 + a) + M * (log_det + np.log1p(a))
        r0 = counter[0]
        if table is not None:
            table[r0:r0 + len(metrics)] = metrics
        i = int(np.argmin(metrics))
        if metrics[i] < best[0]:
            best[0] = float(metrics[i])
            best[1] = r0 + i
            best[2] = path + (start + i,)
        counter[0] += len(metrics)

    def node(G, P, Q, log_det, depth, start, path):
        for col in range(start, L - (K - depth) + 1):
            a = float(G[col, col].real)
            coef = 1.0 / (1.0 + a)
            g = G[:, col]
            p = P[col]
            args = (P - coef * np.outer(g, p), Q - coef * np.abs(p) ** 2,
                    log_det + math.log1p(a))
            if depth == K - 2:
                # leaves only read the diagonal
                leaves(np.diagonal(G).real - coef * np.abs(g) ** 2, *args, col + 1,
                       path + (col,))
            else:
                node(G - coef * np.outer(g, g.conj()), *args, depth + 1, col + 1,
                     path + (col,))

    logdet0 = n * math.log(noise_var)
    if K == 1:
        leaves(np.diagonal(G0).real, P0, Q0, logdet0, 0, ())
    else:
        node(G0, P0, Q0, logdet0, 0, 0, ())
    return best[1], best[2], best[0]


def mlga_search(H, Y, noise_var, K, table=None):
    """Exhaustive Gaussian-approximation search over all K-subsets.

    Depth-first in lexicographic order, so every shared prefix pays its
    rank-1 step once; the last column is evaluated for all remaining
    candidates in one matrix product.  Returns
    ``(best_rank, best_support, best_metric)``.
    """
    n, L = H.shape
    M = Y.shape[0]
    gamma = 1.0 / noise_var
    Yt = Y.T
    best = [np.inf, -1, ()]
    counter = [0]

    def node(inv, quads, log_det, depth, start, path):
        stop = L - (K - depth) + 1
        if depth == K - 1:
            Hc = H[:, start:stop]
            U = inv @ Hc
            a = np.sum(Hc.conj() * U, axis=0).real
            bsq = np.abs(U.conj().T @ Yt) ** 2
            metrics = quads.sum() - bsq.sum(axis=1) / (1.0 + a) + M * (log_det + np.log1p(a))
            r0 = counter[0]
            if table is not None:
                table[r0:r0 + len(metrics)] = metrics
            i = int(np.argmin(metrics))
            if metrics[i] < best[0]:
                best[0] = float(metrics[i])
                best[1] = r0 + i
                best[2] = path + (start + i,)
            counter[0] += len(metrics)
            return
        for col in range(start, stop):
            h = H[:, col]
            u = inv @ h
            a = float(np.vdot(h, u).real)
            bsq = np.abs(Y.conj() @ u) ** 2
            coef = 1.0 / (1.0 + a)
            inv_next = inv - coef * np.outer(u, u.conj())
            inv_next = 0.5 * (inv_next + inv_next.conj().T)
            node(inv_next, quads - coef * bsq, log_det + math.log1p(a),
                 depth + 1, col + 1, path + (col,))

    node(np.eye(n, dtype=complex) * gamma, gamma * np.sum(np.abs(Y) ** 2, axis=1),
         n * math.log(noise_var), 0, 0, ())
    return best[1], best[2], best[0]
