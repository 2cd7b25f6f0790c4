"""Pure NumPy kernels (always available).

All kernels take samples in transposed layout — shape (variables,
observations), C-contiguous float64 — so that per-variable reductions run
over contiguous memory. They return NaN instead of raising when an SPD
factorization fails; callers translate NaN into ``SingularCovariance``.

The numba backend implements the same five entry points; see
``hdmean.backends`` for how one of the two is selected.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

# Relative pivot threshold: a Cholesky pivot <= PIVOT_RTOL * max diagonal
# entry of the input matrix is treated as singular.
PIVOT_RTOL = 1e-12


def pooled_stats_t(xt: np.ndarray, yt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean difference and pooled covariance from transposed samples.

    Returns ``(d, s)`` with ``d = mean(x) - mean(y)`` (length p) and
    ``s = (Xc Xc' + Yc Yc') / (n_x + n_y - 2)``, exactly symmetric.
    """
    n1 = xt.shape[1]
    n2 = yt.shape[1]
    mx = xt.mean(axis=1)
    my = yt.mean(axis=1)
    xc = xt - mx[:, None]
    yc = yt - my[:, None]
    s = (xc @ xc.T + yc @ yc.T) / (n1 + n2 - 2)
    lower = np.tril(s)
    s = lower + np.tril(s, -1).T
    return mx - my, s


def _quad_form_batch(s: np.ndarray, d: np.ndarray) -> np.ndarray:
    """d' s^{-1} d for a stack of SPD systems, via Cholesky + forward solve.

    s: (b, k, k), d: (b, k). Returns (b,) values, or a single NaN-filled
    array when any system fails the positive-definiteness / pivot test.
    """
    b, k = d.shape
    try:
        chol = np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        return np.full(b, np.nan)
    maxdiag = s[:, np.arange(k), np.arange(k)].max(axis=1)
    piv = chol[:, np.arange(k), np.arange(k)]
    if np.any(piv * piv <= PIVOT_RTOL * maxdiag[:, None]):
        return np.full(b, np.nan)
    # forward substitution, vectorized over the batch: w = L^{-1} d
    w = np.empty_like(d)
    for j in range(k):
        acc = np.einsum("bt,bt->b", chol[:, j, :j], w[:, :j]) if j else 0.0
        w[:, j] = (d[:, j] - acc) / chol[:, j, j]
    return np.einsum("bj,bj->b", w, w)


def t2_full(xt: np.ndarray, yt: np.ndarray) -> float:
    """Hotelling quadratic form d' S_pool^{-1} d on the full variable set."""
    d, s = pooled_stats_t(xt, yt)
    return float(_quad_form_batch(s[None, :, :], d[None, :])[0])


def t2_mean_subspaces(xt: np.ndarray, yt: np.ndarray, draws: np.ndarray) -> float:
    """Average subspace T² over index draws.

    draws: (b1, k) integer column indices. The pooled covariance is computed
    once on all p variables; each subspace system is the corresponding
    submatrix (exact: covariance restricted to a subset of variables equals
    the submatrix of the covariance).
    """
    d, s = pooled_stats_t(xt, yt)
    dsub = d[draws]
    ssub = s[draws[:, :, None], draws[:, None, :]]
    vals = _quad_form_batch(ssub, dsub)
    return float(vals.mean())


def t2_mean_projections(xt: np.ndarray, yt: np.ndarray, mats_kp: np.ndarray) -> float:
    """Average T² of the samples pushed through a stack of projections.

    mats_kp: (b1, k, p) — each slice maps a p-vector observation to k
    coordinates (the transpose of the usual p×k projection matrix).
    """
    n1 = xt.shape[1]
    n2 = yt.shape[1]
    xp = mats_kp @ xt
    yp = mats_kp @ yt
    mx = xp.mean(axis=2)
    my = yp.mean(axis=2)
    xc = xp - mx[:, :, None]
    yc = yp - my[:, :, None]
    s = (xc @ xc.transpose(0, 2, 1) + yc @ yc.transpose(0, 2, 1)) / (n1 + n2 - 2)
    vals = _quad_form_batch(s, mx - my)
    return float(vals.mean())
