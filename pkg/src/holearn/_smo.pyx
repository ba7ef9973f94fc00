# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loop for the pairwise dual-ascent (SMO) solver.

Mirrors ``_smo_py.smo_core``; kept in lockstep by the test suite and the
solver benchmark.
"""

from libc.math cimport INFINITY


def smo_core(const double[:, ::1] gram,
             const int[::1] var_sample,
             const double[::1] var_sign,
             const Py_ssize_t[::1] block_start,
             double lam, double tol, Py_ssize_t max_iter,
             double[::1] alpha, double[::1] h):
    """Run pairwise coordinate updates in place; return (iterations, converged)."""
    cdef Py_ssize_t n_blocks = block_start.shape[0] - 1
    cdef Py_ssize_t n = gram.shape[0]
    cdef Py_ssize_t iterations = 0
    cdef bint progressed
    cdef Py_ssize_t b, s, e, a, ai, bi, ia, ib, j
    cdef double neg_err, m, M, za, zb, kappa, step, cap_a, cap_b, cap, violation

    while iterations < max_iter:
        progressed = False
        for b in range(n_blocks):
            s = block_start[b]
            e = block_start[b + 1]
            if e - s < 2:
                continue
            m = -INFINITY
            M = INFINITY
            ai = -1
            bi = -1
            for a in range(s, e):
                neg_err = var_sign[a] - h[var_sample[a]]
                if (var_sign[a] > 0.0 and alpha[a] < lam) or \
                        (var_sign[a] < 0.0 and alpha[a] > 0.0):
                    if neg_err > m:
                        m = neg_err
                        ai = a
                if (var_sign[a] > 0.0 and alpha[a] > 0.0) or \
                        (var_sign[a] < 0.0 and alpha[a] < lam):
                    if neg_err < M:
                        M = neg_err
                        bi = a
            if ai < 0 or bi < 0:
                continue
            violation = m - M
            if violation <= tol:
                continue
            za = var_sign[ai]
            zb = var_sign[bi]
            ia = var_sample[ai]
            ib = var_sample[bi]
            kappa = gram[ia, ia] + gram[ib, ib] - 2.0 * gram[ia, ib]
            if kappa > 1e-12:
                step = violation / kappa
            else:
                step = INFINITY
            cap_a = (lam - alpha[ai]) if za > 0.0 else alpha[ai]
            cap_b = alpha[bi] if zb > 0.0 else (lam - alpha[bi])
            cap = cap_a if cap_a < cap_b else cap_b
            if step >= cap:
                step = cap
                if step <= 0.0:
                    continue
                # pin the binding variable exactly to its bound
                if cap_a <= cap_b:
                    alpha[ai] = lam if za > 0.0 else 0.0
                    alpha[bi] -= zb * step
                else:
                    alpha[bi] = 0.0 if zb > 0.0 else lam
                    alpha[ai] += za * step
            else:
                alpha[ai] += za * step
                alpha[bi] -= zb * step
            for j in range(n):
                h[j] += step * (gram[ia, j] - gram[ib, j])
            iterations += 1
            progressed = True
            if iterations >= max_iter:
                return iterations, False
        if not progressed:
            return iterations, True
    return iterations, False
