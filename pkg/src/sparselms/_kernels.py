"""Compiled inner loop shared by every filter run.

The update arithmetic here must mirror :func:`sparselms.estimators.iterate`
operation for operation; ``tests/test_estimators.py`` pins the two together.
Summations are sequential so results are identical across runs and across any
degree of threading (no fastmath, no reductions with data-dependent order).
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Penalty dispatch codes; keep in sync with estimators.PENALTY_KINDS.
KIND_NONE = 0
KIND_ZA = 1
KIND_RZA = 2
KIND_RL1 = 3


@njit(cache=True, nogil=True)
def lms_run(xpad, y, mu, h_true, kind, lam, eps, delta):
    """Run an LMS-family filter over a whole observation record.

    xpad   : training signal prefixed with n_taps-1 zeros, so the window for
             step n is xpad[n : n + n_taps] reversed
    y      : observations, one per iteration
    mu     : per-iteration step sizes (1-based schedule already evaluated)
    h_true : channel the squared deviation is measured against
    kind   : penalty code (KIND_*)

    Returns (trace, diverged_at): trace[n] is ||h_true - estimate||^2 after
    update n; diverged_at is the 0-based iteration at which a non-finite
    value appeared, or -1 for a clean run.
    """
    n_iter = y.shape[0]
    n_taps = h_true.shape[0]
    h = np.zeros(n_taps)
    h_prev = np.zeros(n_taps)
    trace = np.empty(n_iter)
    for n in range(n_iter):
        base = n_taps - 1 + n
        acc = 0.0
        for i in range(n_taps):
            acc += h[i] * xpad[base - i]
        e = y[n] - acc
        if not np.isfinite(e):
            return trace, n
        m = mu[n]
        sq = 0.0
        for i in range(n_taps):
            hi = h[i]
            if hi > 0.0:
                s = 1.0
            elif hi < 0.0:
                s = -1.0
            else:
                s = 0.0
            if kind == KIND_ZA:
                p = lam * s
            elif kind == KIND_RZA:
                p = eps * lam * s / (1.0 + eps * abs(hi))
            elif kind == KIND_RL1:
                p = lam * s / (delta + abs(h_prev[i]))
            else:
                p = 0.0
            hn = hi + m * (e * xpad[base - i] - p)
            h_prev[i] = hi
            h[i] = hn
            d = h_true[i] - hn
            sq += d * d
        if not np.isfinite(sq):
            return trace, n
        trace[n] = sq
    return trace, -1


def warmup() -> None:
    """Force JIT compilation (cached on disk) outside any timed section."""
    xpad = np.zeros(2)
    y = np.zeros(1)
    mu = np.full(1, 1e-3)
    h_true = np.zeros(2)
    for kind in (KIND_NONE, KIND_ZA, KIND_RZA, KIND_RL1):
        lms_run(xpad, y, mu, h_true, kind, 0.0, 1.0, 1.0)
