"""Two-sample data containers and the classical Hotelling statistic.

Samples are stored observations × variables (the usual data-frame layout).
Kernels want the transpose, contiguous; ``TwoSampleProblem`` materializes
and caches those copies once so repeated statistic evaluations pay nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .backends import active_backend
from .errors import NonFinite, SingularCovariance


def as_data_matrix(obj, name: str = "data") -> np.ndarray:
    """Coerce to a C-contiguous float64 matrix of shape (observations, variables).

    1-D input is treated as a single variable. Raises ``NonFinite`` on NaN or
    infinite cells and ``ValueError`` on unusable shapes.
    """
    a = np.asarray(obj, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if a.shape[0] < 2:
        raise ValueError(f"{name} needs at least 2 observations, got {a.shape[0]}")
    if a.shape[1] < 1:
        raise ValueError(f"{name} needs at least 1 variable")
    bad = ~np.isfinite(a)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonFinite(int(r), int(c))
    return np.ascontiguousarray(a)


@dataclass(frozen=True)
class TwoSampleProblem:
    """Immutable pair of samples over a shared variable set."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_data_matrix(self.x, "x"))
        object.__setattr__(self, "y", as_data_matrix(self.y, "y"))
        if self.x.shape[1] != self.y.shape[1]:
            raise ValueError(
                f"dimension mismatch p_x={self.x.shape[1]}, p_y={self.y.shape[1]}"
            )

    @property
    def n_x(self) -> int:
        return self.x.shape[0]

    @property
    def n_y(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def dof(self) -> int:
        """Degrees of freedom of the pooled covariance, n_x + n_y - 2."""
        return self.n_x + self.n_y - 2

    @cached_property
    def xt(self) -> np.ndarray:
        return np.ascontiguousarray(self.x.T)

    @cached_property
    def yt(self) -> np.ndarray:
        return np.ascontiguousarray(self.y.T)

    @property
    def size_factor(self) -> float:
        """n_x n_y / (n_x + n_y), the scale in front of the quadratic form."""
        return self.n_x * self.n_y / (self.n_x + self.n_y)


def column_means(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=np.float64).mean(axis=0)


def mean_difference(prob: TwoSampleProblem) -> np.ndarray:
    """mean(x) - mean(y), length p."""
    return prob.xt.mean(axis=1) - prob.yt.mean(axis=1)


def pooled_covariance(prob: TwoSampleProblem, backend=None) -> np.ndarray:
    """Pooled sample covariance (Xc'Xc + Yc'Yc) / (n_x + n_y - 2)."""
    b = backend if backend is not None else active_backend()
    _, s = b.pooled_stats_t(prob.xt, prob.yt)
    return s


def hotelling_t2(
    prob: TwoSampleProblem, scale_by_n: bool = True, backend=None
) -> float:
    """Two-sample Hotelling statistic on the full variable set.

    T2 = (n_x n_y / (n_x + n_y)) * d' S_pool^{-1} d. Requires p <= dof;
    otherwise (or for degenerate data) the pooled covariance is singular.
    With ``scale_by_n=False`` the bare quadratic form d' S_pool^{-1} d is
    returned, the form permutation engines compare replicate-to-observed.
    """
    b = backend if backend is not None else active_backend()
    q = b.t2_full(prob.xt, prob.yt)
    if math.isnan(q):
        raise SingularCovariance(
            f"pooled covariance is singular (p={prob.p}, pooled dof={prob.dof})"
        )
    return prob.size_factor * q if scale_by_n else float(q)
