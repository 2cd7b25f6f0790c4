"""Synthetic data for the simulation studies.

Covariances are block-structured correlation matrices: unit diagonal,
correlation ``within`` inside each of ``blocks`` equal-sized blocks and
``between`` elsewhere. Samples are multivariate normal or multivariate t
with 4 degrees of freedom; mean-shift alternatives move an equal per-gene
delta on the leading genes of the leading blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .errors import IncompatibleLayout, NotPositiveDefinite

NORMAL = "normal"
STUDENT_T4 = "t4"

_T_DOF = 4


@dataclass(frozen=True)
class BlockCovariance:
    """Σ_{a,b}: unit diagonal, a within blocks, b between blocks.

    Positive definiteness is checked by factorization at construction; the
    Cholesky factor is kept for sampling.
    """

    p: int
    blocks: int
    within: float
    between: float
    matrix: np.ndarray = field(init=False, repr=False, compare=False)
    factor: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.p < 1 or self.blocks < 1 or self.p % self.blocks != 0:
            raise ValueError(
                f"p must be a positive multiple of blocks, got p={self.p}, blocks={self.blocks}"
            )
        size = self.p // self.blocks
        m = np.full((self.p, self.p), float(self.between))
        for i in range(self.blocks):
            lo = i * size
            m[lo : lo + size, lo : lo + size] = self.within
        np.fill_diagonal(m, 1.0)
        try:
            factor = np.linalg.cholesky(m)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(
                f"block covariance with a={self.within}, b={self.between} is not positive definite"
            ) from exc
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "factor", factor)

    @property
    def block_size(self) -> int:
        return self.p // self.blocks


def build_block_covariance(p: int, blocks: int, a: float, b: float) -> BlockCovariance:
    return BlockCovariance(p=p, blocks=blocks, within=a, between=b)


@dataclass(frozen=True)
class DistributionSpec:
    """A sampling distribution: family, covariance model, mean vector.

    For the t family the scale matrix defaults to Σ(ν-2)/ν so that the
    distribution's covariance equals Σ; set t_covariance_is_sigma=False to
    use Σ itself as the scale matrix instead.
    """

    family: str
    covariance: BlockCovariance
    mean: np.ndarray | None = None
    t_covariance_is_sigma: bool = True

    def __post_init__(self):
        if self.family not in (NORMAL, STUDENT_T4):
            raise ValueError(f"family must be {NORMAL!r} or {STUDENT_T4!r}")
        mean = np.zeros(self.covariance.p) if self.mean is None else np.asarray(self.mean, dtype=np.float64)
        if mean.shape != (self.covariance.p,):
            raise ValueError(f"mean must have length p={self.covariance.p}, got shape {mean.shape}")
        object.__setattr__(self, "mean", mean)


def sample(spec: DistributionSpec, n: int, seed) -> np.ndarray:
    """Draw n observations as an (n, p) matrix.

    seed may be an int or a tuple of ints (a substream key). Draw order is
    fixed (Gaussian block first, then the chi-square mixing weights), so a
    seed pins the output bit-for-bit.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    key = seed if isinstance(seed, tuple) else (seed,)
    rng = substream(*key)
    z = rng.standard_normal((n, spec.covariance.p))
    g = z @ spec.covariance.factor.T
    if spec.family == NORMAL:
        return spec.mean + g
    if spec.t_covariance_is_sigma:
        g = g * math.sqrt((_T_DOF - 2) / _T_DOF)
    w = rng.chisquare(_T_DOF, size=n)
    return spec.mean + g / np.sqrt(w / _T_DOF)[:, None]


@dataclass(frozen=True)
class ShiftPattern:
    """Mean shift on the first genes_per_block genes of the first m blocks."""

    blocks_shifted: int
    genes_per_block: int
    per_gene_delta: float
    block_size: int

    def __post_init__(self):
        if self.blocks_shifted < 0 or self.genes_per_block < 0:
            raise ValueError("counts must be nonnegative")
        if self.genes_per_block > self.block_size:
            raise IncompatibleLayout(
                f"cannot shift {self.genes_per_block} genes in blocks of size {self.block_size}"
            )

    @property
    def norm(self) -> float:
        """Euclidean norm of the shift vector."""
        return math.sqrt(self.blocks_shifted * self.genes_per_block) * abs(self.per_gene_delta)

    @classmethod
    def from_norm(
        cls, norm: float, blocks_shifted: int, genes_per_block: int, block_size: int
    ) -> "ShiftPattern":
        """Pattern whose shift vector has the requested Euclidean norm."""
        count = blocks_shifted * genes_per_block
        if count < 1:
            raise ValueError("need at least one shifted coordinate to target a norm")
        return cls(blocks_shifted, genes_per_block, norm / math.sqrt(count), block_size)


def apply_shift(mean: np.ndarray, pattern: ShiftPattern) -> np.ndarray:
    """Return mean + δ for the pattern's shift vector δ."""
    mean = np.asarray(mean, dtype=np.float64)
    p = mean.shape[0]
    if mean.ndim != 1 or p % pattern.block_size != 0:
        raise IncompatibleLayout(
            f"mean of length {mean.shape} does not split into blocks of {pattern.block_size}"
        )
    if pattern.blocks_shifted * pattern.block_size > p:
        raise IncompatibleLayout(
            f"cannot shift {pattern.blocks_shifted} blocks of {pattern.block_size} in p={p}"
        )
    out = mean.copy()
    for i in range(pattern.blocks_shifted):
        lo = i * pattern.block_size
        out[lo : lo + pattern.genes_per_block] += pattern.per_gene_delta
    return out
