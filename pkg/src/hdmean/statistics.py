"""Test statistics for the two-sample mean problem in high dimension.

The two headline statistics average Hotelling's T² over B₁ low-dimensional
views of the data:

* ``random_subspaces_statistic``: views are random size-k subsets of the
  variables (axis-aligned, hence invariant under per-variable rescaling).
* ``lopes_statistic``: views are random Gaussian pseudo-projections to k
  dimensions (not invariant under rescaling; see the invariance demo).

Baselines: Chen-Qin's U-statistic with its asymptotic normal p-value, the
Srivastava-Du diagonal statistic in permutation-reduced form, and combined
marginal t-tests (Bonferroni / Benjamini-Hochberg).

Statistics are pure functions of (data, config, optional randomness). The
``*Statistic`` descriptor classes at the bottom adapt them to the
permutation engine, which supplies per-replicate randomness.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy import stats as sp_stats

from ._rng import draw_index_sets, substream
from .backends import active_backend
from .core import TwoSampleProblem
from .errors import InvalidK, SingularCovariance, ZeroVariance

log = logging.getLogger(__name__)

SUBSPACES = "subspaces"
PROJECTIONS = "projections"


@dataclass(frozen=True)
class StatisticValue:
    """A computed statistic tagged with the kind that produced it."""

    value: float
    kind: str

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class SubspaceConfig:
    """Shared configuration for the subspace and projection statistics.

    k is the working dimension, b1 the number of random views averaged per
    statistic evaluation, seed the base of the randomness stream. kind picks
    axis-aligned subspaces or Gaussian projections.
    """

    k: int
    b1: int = 100
    seed: int = 0
    kind: str = SUBSPACES

    def __post_init__(self):
        if self.k < 1:
            raise InvalidK(f"k must be >= 1, got {self.k}")
        if self.b1 < 1:
            raise ValueError(f"b1 must be >= 1, got {self.b1}")
        if self.kind not in (SUBSPACES, PROJECTIONS):
            raise ValueError(f"kind must be {SUBSPACES!r} or {PROJECTIONS!r}")


def default_k(n_x: int, n_y: int) -> int:
    """floor((n_x + n_y - 2) / 2), the power-maximizing working dimension."""
    return max(1, (n_x + n_y - 2) // 2)


def validate_k(k: int, dof: int, p: int, kind: str = SUBSPACES) -> None:
    """Admissible range: 1 <= k <= dof; axis-aligned draws also need k <= p."""
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    if k > dof:
        raise InvalidK(f"k={k} exceeds the pooled degrees of freedom {dof}")
    if kind == SUBSPACES and k > p:
        raise InvalidK(f"k={k} exceeds the number of variables p={p}")


def subspace_draws(p: int, cfg: SubspaceConfig) -> np.ndarray:
    """The b1 × k index draws implied by cfg.seed (rows sorted ascending)."""
    if cfg.k > p:
        raise InvalidK(f"k={cfg.k} exceeds the number of variables p={p}")
    return draw_index_sets(substream(cfg.seed), p, cfg.k, cfg.b1)


def _draw_mats_internal(rng: np.random.Generator, p: int, k: int, b1: int) -> np.ndarray:
    # Internal layout (b1, k, p): mats[i] @ observation maps p -> k.
    return rng.standard_normal((b1, k, p))


def projection_matrices(p: int, cfg: SubspaceConfig) -> np.ndarray:
    """The b1 projection matrices implied by cfg.seed, shaped (b1, p, k)."""
    internal = _draw_mats_internal(substream(cfg.seed), p, cfg.k, cfg.b1)
    return np.ascontiguousarray(internal.transpose(0, 2, 1))


def _coerce_draws(draws, p: int, cfg: SubspaceConfig) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(draws, dtype=np.int64))
    if a.shape != (cfg.b1, cfg.k):
        raise ValueError(f"draws must have shape (b1={cfg.b1}, k={cfg.k}), got {a.shape}")
    if a.min() < 0 or a.max() >= p:
        raise ValueError(f"draw indices must lie in [0, {p})")
    if cfg.k > 1 and not (np.diff(np.sort(a, axis=1), axis=1) > 0).all():
        raise ValueError("each draw must consist of distinct indices")
    return a


def _coerce_mats(mats, p: int, cfg: SubspaceConfig) -> np.ndarray:
    a = np.asarray(mats, dtype=np.float64)
    if a.shape != (cfg.b1, p, cfg.k):
        raise ValueError(
            f"mats must have shape (b1={cfg.b1}, p={p}, k={cfg.k}), got {a.shape}"
        )
    return np.ascontiguousarray(a.transpose(0, 2, 1))


def random_subspaces_statistic(
    prob: TwoSampleProblem,
    cfg: SubspaceConfig,
    draws=None,
    backend=None,
    scale_by_n: bool = True,
) -> StatisticValue:
    """Average of Hotelling's T² over b1 random variable subsets of size k.

    draws, when given, must be b1 index sets of size k (rows of an integer
    array or a list of index lists); otherwise they are generated from
    cfg.seed. Raises SingularCovariance if any subspace system is not
    positive definite.
    """
    if cfg.kind != SUBSPACES:
        raise ValueError(f"cfg.kind must be {SUBSPACES!r} for this statistic")
    validate_k(cfg.k, prob.dof, prob.p, SUBSPACES)
    b = backend if backend is not None else active_backend()
    idx = subspace_draws(prob.p, cfg) if draws is None else _coerce_draws(draws, prob.p, cfg)
    q = b.t2_mean_subspaces(prob.xt, prob.yt, idx)
    if math.isnan(q):
        raise SingularCovariance(
            f"a k={cfg.k} subspace system is singular (pooled dof={prob.dof})"
        )
    if scale_by_n:
        q = prob.size_factor * q
    return StatisticValue(q, "rs")


def lopes_statistic(
    prob: TwoSampleProblem,
    cfg: SubspaceConfig,
    mats=None,
    backend=None,
    scale_by_n: bool = True,
) -> StatisticValue:
    """Average of Hotelling's T² over b1 Gaussian projections to k dimensions.

    mats, when given, must be b1 matrices of shape (p, k) stacked along the
    first axis; each observation row is mapped through its matrix before the
    T² computation. Otherwise matrices with i.i.d. N(0,1) entries are
    generated from cfg.seed.
    """
    if cfg.kind != PROJECTIONS:
        raise ValueError(f"cfg.kind must be {PROJECTIONS!r} for this statistic")
    validate_k(cfg.k, prob.dof, prob.p, PROJECTIONS)
    b = backend if backend is not None else active_backend()
    if mats is None:
        mk = _draw_mats_internal(substream(cfg.seed), prob.p, cfg.k, cfg.b1)
    else:
        mk = _coerce_mats(mats, prob.p, cfg)
    q = b.t2_mean_projections(prob.xt, prob.yt, mk)
    if math.isnan(q):
        raise SingularCovariance(
            f"a k={cfg.k} projected system is singular (pooled dof={prob.dof})"
        )
    if scale_by_n:
        q = prob.size_factor * q
    return StatisticValue(q, "lopes")


# ---------------------------------------------------------------------------
# Chen-Qin


def _cq_numerator(x: np.ndarray, y: np.ndarray) -> float:
    n1 = x.shape[0]
    n2 = y.shape[0]
    gx = x @ x.T
    gy = y @ y.T
    cross = x @ y.T
    t1 = (gx.sum() - np.trace(gx)) / (n1 * (n1 - 1))
    t2 = (gy.sum() - np.trace(gy)) / (n2 * (n2 - 1))
    t3 = 2.0 * cross.sum() / (n1 * n2)
    return float(t1 + t2 - t3)


def _tr_sigma_sq(x: np.ndarray) -> float:
    """Leave-two-out estimator of tr(Σ²) from one sample (needs n >= 3)."""
    n = x.shape[0]
    g = x @ x.T
    rs = g.sum(axis=1)
    # a[j, k] = x_j' (x_k - mean of the sample excluding x_j and x_k)
    a = g - (rs[:, None] - np.diag(g)[:, None] - g) / (n - 2)
    prod = a * a.T
    return float((prod.sum() - np.trace(prod)) / (n * (n - 1)))


def _tr_sigma_cross(x: np.ndarray, y: np.ndarray) -> float:
    """Leave-one-out estimator of tr(Σ_x Σ_y)."""
    n1 = x.shape[0]
    n2 = y.shape[0]
    c = x @ y.T
    b1 = c - (c.sum(axis=1, keepdims=True) - c) / (n2 - 1)
    b2 = c - (c.sum(axis=0, keepdims=True) - c) / (n1 - 1)
    return float((b1 * b2).sum() / (n1 * n2))


def chen_qin_statistic(prob: TwoSampleProblem) -> StatisticValue:
    """Chen-Qin U-statistic: an unbiased estimator of ||μ_x - μ_y||²."""
    return StatisticValue(_cq_numerator(prob.x, prob.y), "cq")


def chen_qin_pvalue(prob: TwoSampleProblem) -> float:
    """Upper-tail normal p-value of the studentized Chen-Qin statistic.

    The variance estimator uses leave-out trace estimators and requires at
    least 3 observations per sample.
    """
    n1, n2 = prob.n_x, prob.n_y
    if min(n1, n2) < 3:
        raise ValueError("the variance estimator needs n_x >= 3 and n_y >= 3")
    t = _cq_numerator(prob.x, prob.y)
    var = (
        2.0 / (n1 * (n1 - 1)) * _tr_sigma_sq(prob.x)
        + 2.0 / (n2 * (n2 - 1)) * _tr_sigma_sq(prob.y)
        + 4.0 / (n1 * n2) * _tr_sigma_cross(prob.x, prob.y)
    )
    if var <= 0.0:
        # Degenerate estimate (tiny n, near-constant data): fall back to the
        # sign of the statistic rather than dividing by a nonpositive scale.
        return 1.0 if t <= 0.0 else 0.0
    return float(sp_stats.norm.sf(t / math.sqrt(var)))


# ---------------------------------------------------------------------------
# Srivastava-Du and marginal t


def _pooled_diag(xt: np.ndarray, yt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean difference and diagonal of the pooled covariance, from transposed data."""
    mx = xt.mean(axis=1)
    my = yt.mean(axis=1)
    xc = xt - mx[:, None]
    yc = yt - my[:, None]
    dof = xt.shape[1] + yt.shape[1] - 2
    var = (np.einsum("ij,ij->i", xc, xc) + np.einsum("ij,ij->i", yc, yc)) / dof
    return mx - my, var


def _sd_value_t(xt: np.ndarray, yt: np.ndarray) -> float:
    d, var = _pooled_diag(xt, yt)
    zero = np.flatnonzero(var == 0.0)
    if zero.size:
        raise ZeroVariance(int(zero[0]))
    return float(np.sum(d * d / var))


def srivastava_du_statistic(prob: TwoSampleProblem) -> StatisticValue:
    """d' diag(S_pool)⁻¹ d, the diagonal-covariance analogue of T².

    This is the permutation-reduced form: the centering and scaling constants
    of the original statistic are strictly monotone per assignment and drop
    out of permutation p-values.
    """
    return StatisticValue(_sd_value_t(prob.xt, prob.yt), "sd")


def marginal_t_pvalues(prob: TwoSampleProblem) -> np.ndarray:
    """Two-sided per-variable pooled-variance t-test p-values (df = dof).

    A variable with zero pooled variance gets p = 1 (no usable evidence at
    that coordinate); the decision is logged.
    """
    d, var = _pooled_diag(prob.xt, prob.yt)
    scale = 1.0 / prob.n_x + 1.0 / prob.n_y
    pvals = np.ones(prob.p)
    ok = var > 0.0
    if not ok.all():
        for j in np.flatnonzero(~ok):
            log.warning("column %d has zero pooled variance; its p-value is set to 1", j)
    tvals = d[ok] / np.sqrt(var[ok] * scale)
    pvals[ok] = 2.0 * sp_stats.t.sf(np.abs(tvals), prob.dof)
    return pvals


def bonferroni_adjust(pvals: np.ndarray) -> np.ndarray:
    p = np.asarray(pvals, dtype=np.float64)
    return np.minimum(1.0, p * p.size)


def benjamini_hochberg_adjust(pvals: np.ndarray) -> np.ndarray:
    """Step-up adjusted p-values; reject all with adjusted p <= alpha."""
    p = np.asarray(pvals, dtype=np.float64)
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m / np.arange(1, m + 1)
    adj = np.minimum.accumulate(ranked[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(1.0, adj)
    return out


@dataclass(frozen=True)
class MarginalTestResult:
    reject: bool
    min_adjusted_p: float
    per_variable_p: np.ndarray
    method: str
    alpha: float


def marginal_t_combined(
    prob: TwoSampleProblem, method: str = "bonferroni", alpha: float = 0.05
) -> MarginalTestResult:
    """Global mean test that rejects iff any adjusted marginal t p-value <= alpha.

    method is 'bonferroni' (family-wise error control) or 'bh'
    (Benjamini-Hochberg step-up, false discovery rate control).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    raw = marginal_t_pvalues(prob)
    if method == "bonferroni":
        adjusted = bonferroni_adjust(raw)
    elif method == "bh":
        adjusted = benjamini_hochberg_adjust(raw)
    else:
        raise ValueError(f"method must be 'bonferroni' or 'bh', got {method!r}")
    min_adj = float(adjusted.min())
    return MarginalTestResult(min_adj <= alpha, min_adj, raw, method, alpha)


# ---------------------------------------------------------------------------
# Descriptors consumed by the permutation engine.
#
# A descriptor separates the statistic's randomness (index draws, projection
# matrices) from its evaluation on relabeled data, so the engine can either
# reuse the observed randomness or redraw it per replicate. value_t works on
# transposed samples and reports the n-scale-free statistic (the constant
# n_x n_y/(n_x+n_y) factor cancels in permutation p-values); a NaN return
# signals a singular system.


class PermutationStatistic(Protocol):
    kind: str

    def validate(self, prob: TwoSampleProblem) -> None: ...

    def observed_randomness(self, p: int): ...

    def replicate_randomness(self, p: int, rng: np.random.Generator): ...

    def value_t(self, xt: np.ndarray, yt: np.ndarray, randomness, backend) -> float: ...


@dataclass(frozen=True)
class SubspaceT2Statistic:
    """T_rs for the permutation engine."""

    cfg: SubspaceConfig
    kind: str = field(default="rs", init=False)

    def validate(self, prob: TwoSampleProblem) -> None:
        validate_k(self.cfg.k, prob.dof, prob.p, SUBSPACES)

    def observed_randomness(self, p: int) -> np.ndarray:
        return subspace_draws(p, self.cfg)

    def replicate_randomness(self, p: int, rng: np.random.Generator) -> np.ndarray:
        return draw_index_sets(rng, p, self.cfg.k, self.cfg.b1)

    def value_t(self, xt, yt, randomness, backend) -> float:
        return backend.t2_mean_subspaces(xt, yt, randomness)


@dataclass(frozen=True)
class ProjectionT2Statistic:
    """T_L for the permutation engine."""

    cfg: SubspaceConfig
    kind: str = field(default="lopes", init=False)

    def validate(self, prob: TwoSampleProblem) -> None:
        validate_k(self.cfg.k, prob.dof, prob.p, PROJECTIONS)

    def observed_randomness(self, p: int) -> np.ndarray:
        return _draw_mats_internal(substream(self.cfg.seed), p, self.cfg.k, self.cfg.b1)

    def replicate_randomness(self, p: int, rng: np.random.Generator) -> np.ndarray:
        return _draw_mats_internal(rng, p, self.cfg.k, self.cfg.b1)

    def value_t(self, xt, yt, randomness, backend) -> float:
        return backend.t2_mean_projections(xt, yt, randomness)


@dataclass(frozen=True)
class HotellingStatistic:
    """Classical full-dimensional T² (needs p <= dof); no extra randomness."""

    kind: str = field(default="hotelling", init=False)

    def validate(self, prob: TwoSampleProblem) -> None:
        validate_k(prob.p, prob.dof, prob.p, PROJECTIONS)

    def observed_randomness(self, p: int) -> None:
        return None

    def replicate_randomness(self, p: int, rng: np.random.Generator) -> None:
        return None

    def value_t(self, xt, yt, randomness, backend) -> float:
        return backend.t2_full(xt, yt)


@dataclass(frozen=True)
class SrivastavaDuStatistic:
    """Diagonal-covariance statistic; no extra randomness."""

    kind: str = field(default="sd", init=False)

    def validate(self, prob: TwoSampleProblem) -> None:
        return None

    def observed_randomness(self, p: int) -> None:
        return None

    def replicate_randomness(self, p: int, rng: np.random.Generator) -> None:
        return None

    def value_t(self, xt, yt, randomness, backend) -> float:
        return _sd_value_t(xt, yt)
