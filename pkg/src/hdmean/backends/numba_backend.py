"""Numba-compiled kernels for the hot inner loops.

Same five entry points as ``numpy_backend``; same transposed (variables ×
observations) layout; same NaN-on-singular contract. Kernels release the
GIL so the permutation engine's thread pool can overlap replicates, and are
cached on disk so compilation is paid once per machine.

``fastmath`` is restricted to flags that keep NaN/Inf semantics intact (the
NaN sentinel must survive) while still allowing fused and vectorized
reductions.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"

PIVOT_RTOL = 1e-12

_jit = njit(cache=True, nogil=True, fastmath={"contract", "reassoc", "nsz"})


@_jit
def _pooled_stats_t(xt, yt):
    p, n1 = xt.shape
    n2 = yt.shape[1]
    nu = n1 + n2 - 2
    d = np.empty(p)
    xc = np.empty_like(xt)
    yc = np.empty_like(yt)
    for j in range(p):
        accx = 0.0
        for r in range(n1):
            accx += xt[j, r]
        mx = accx / n1
        accy = 0.0
        for r in range(n2):
            accy += yt[j, r]
        my = accy / n2
        d[j] = mx - my
        for r in range(n1):
            xc[j, r] = xt[j, r] - mx
        for r in range(n2):
            yc[j, r] = yt[j, r] - my
    s = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            acc = 0.0
            for r in range(n1):
                acc += xc[i, r] * xc[j, r]
            for r in range(n2):
                acc += yc[i, r] * yc[j, r]
            v = acc / nu
            s[i, j] = v
            s[j, i] = v
    return d, s


@_jit
def _quad_form(s, d):
    """d' s^{-1} d via Cholesky with a relative pivot test; NaN if singular."""
    k = s.shape[0]
    maxdiag = 0.0
    for i in range(k):
        if s[i, i] > maxdiag:
            maxdiag = s[i, i]
    tol = PIVOT_RTOL * maxdiag
    chol = np.zeros((k, k))
    for j in range(k):
        piv = s[j, j]
        for t in range(j):
            piv -= chol[j, t] * chol[j, t]
        if not piv > tol:
            return np.nan
        root = np.sqrt(piv)
        chol[j, j] = root
        for i in range(j + 1, k):
            acc = s[i, j]
            for t in range(j):
                acc -= chol[i, t] * chol[j, t]
            chol[i, j] = acc / root
    # w = L^{-1} d, then the quadratic form is ||w||^2
    w = np.empty(k)
    for i in range(k):
        acc = d[i]
        for t in range(i):
            acc -= chol[i, t] * w[t]
        w[i] = acc / chol[i, i]
    q = 0.0
    for i in range(k):
        q += w[i] * w[i]
    return q


@_jit
def _t2_full(xt, yt):
    d, s = _pooled_stats_t(xt, yt)
    return _quad_form(s, d)


@_jit
def _t2_mean_subspaces(xt, yt, draws):
    b1, k = draws.shape
    d, s = _pooled_stats_t(xt, yt)
    dsub = np.empty(k)
    ssub = np.empty((k, k))
    total = 0.0
    for b in range(b1):
        for a in range(k):
            ia = draws[b, a]
            dsub[a] = d[ia]
            for c in range(k):
                ssub[a, c] = s[ia, draws[b, c]]
        q = _quad_form(ssub, dsub)
        if np.isnan(q):
            return np.nan
        total += q
    return total / b1


@_jit
def _t2_mean_projections(xt, yt, mats_kp):
    b1 = mats_kp.shape[0]
    total = 0.0
    for b in range(b1):
        pk = mats_kp[b]
        xp = np.dot(pk, xt)
        yp = np.dot(pk, yt)
        d, s = _pooled_stats_t(xp, yp)
        q = _quad_form(s, d)
        if np.isnan(q):
            return np.nan
        total += q
    return total / b1


def pooled_stats_t(xt, yt):
    return _pooled_stats_t(xt, yt)


def t2_full(xt, yt):
    return float(_t2_full(xt, yt))


def t2_mean_subspaces(xt, yt, draws):
    return float(_t2_mean_subspaces(xt, yt, draws))


def t2_mean_projections(xt, yt, mats_kp):
    return float(_t2_mean_projections(xt, yt, mats_kp))


def warm_up() -> None:
    """Compile (or load from cache) every kernel on a tiny problem."""
    xt = np.ascontiguousarray(np.arange(8.0).reshape(2, 4) / 7.0)
    yt = np.ascontiguousarray(np.arange(8.0, 16.0).reshape(2, 4) / 9.0)
    draws = np.array([[0, 1]], dtype=np.int64)
    mats = np.ascontiguousarray(np.eye(2)[None, :, :])
    t2_full(xt, yt)
    t2_mean_subspaces(xt, yt, draws)
    t2_mean_projections(xt, yt, mats)
