"""Pure-numpy fallback for the pairwise dual-ascent inner loop.

Same contract as the compiled core in ``_smo.pyx``; see ``_core.py`` for
how the implementation is chosen at import time.
"""

from __future__ import annotations

import numpy as np


def smo_core(gram, var_sample, var_sign, block_start, lam, tol, max_iter, alpha, h):
    """Run pairwise coordinate updates in place; return (iterations, converged).

    One iteration updates the most KKT-violating feasible pair inside one
    threshold block; blocks are visited round-robin and the loop stops
    after a full sweep with no violation above ``tol``.
    """
    n_blocks = len(block_start) - 1
    spans = [
        (int(block_start[b]), int(block_start[b + 1])) for b in range(n_blocks)
    ]
    iterations = 0
    while iterations < max_iter:
        progressed = False
        for s, e in spans:
            if e - s < 2:
                continue
            z = var_sign[s:e]
            a_blk = alpha[s:e]
            neg_err = z - h[var_sample[s:e]]
            can_up = ((z > 0) & (a_blk < lam)) | ((z < 0) & (a_blk > 0))
            can_down = ((z > 0) & (a_blk > 0)) | ((z < 0) & (a_blk < lam))
            if not can_up.any() or not can_down.any():
                continue
            up_rel = int(np.argmax(np.where(can_up, neg_err, -np.inf)))
            low_rel = int(np.argmax(np.where(can_down, -neg_err, -np.inf)))
            violation = neg_err[up_rel] - neg_err[low_rel]
            if violation <= tol:
                continue
            ai = s + up_rel
            bi = s + low_rel
            za, zb = var_sign[ai], var_sign[bi]
            ia, ib = int(var_sample[ai]), int(var_sample[bi])
            kappa = gram[ia, ia] + gram[ib, ib] - 2.0 * gram[ia, ib]
            step = violation / kappa if kappa > 1e-12 else np.inf
            cap_a = (lam - alpha[ai]) if za > 0 else alpha[ai]
            cap_b = alpha[bi] if zb > 0 else (lam - alpha[bi])
            cap = min(cap_a, cap_b)
            if step >= cap:
                step = cap
                if step <= 0.0:
                    continue
                # pin the binding variable exactly to its bound
                if cap_a <= cap_b:
                    alpha[ai] = lam if za > 0 else 0.0
                    alpha[bi] -= zb * step
                else:
                    alpha[bi] = 0.0 if zb > 0 else lam
                    alpha[ai] += za * step
            else:
                alpha[ai] += za * step
                alpha[bi] -= zb * step
            h += step * (gram[ia] - gram[ib])
            iterations += 1
            progressed = True
            if iterations >= max_iter:
                return iterations, False
        if not progressed:
            return iterations, True
    return iterations, False
