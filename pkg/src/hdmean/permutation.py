"""Random-permutation p-values, generic over a statistic descriptor.

Replicate r's randomness comes from the dedicated substream (plan.seed, r):
the relabeling assignment is drawn first, then any statistic randomness is
redrawn from the same generator. Results land in preassigned slots indexed
by replicate, so the p-value and replicate vector are identical for any
worker-pool width.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping

import numpy as np

from ._rng import complement_indices, draw_index_sets, substream
from .backends import active_backend
from .core import TwoSampleProblem
from .errors import SingularCovariance, TooManyPermutations
from .statistics import PermutationStatistic, StatisticValue

ESTIMATORS = ("paper", "addone")

EXACT_CAP = 200_000


@dataclass(frozen=True)
class PermutationPlan:
    """How many relabelings to evaluate and where their randomness comes from.

    assignments, when given, must be an array of shape (b2, n_x): explicit
    index subsets of the pooled rows that form the pseudo-x sample. When
    absent, each replicate draws its subset from its own substream.
    """

    b2: int = 500
    seed: int = 0
    assignments: np.ndarray | None = None

    def __post_init__(self):
        if self.b2 < 1:
            raise ValueError(f"b2 must be >= 1, got {self.b2}")
        if self.assignments is not None:
            a = np.ascontiguousarray(np.asarray(self.assignments, dtype=np.int64))
            if a.ndim != 2 or a.shape[0] != self.b2:
                raise ValueError(
                    f"assignments must have shape (b2={self.b2}, n_x), got {a.shape}"
                )
            object.__setattr__(self, "assignments", a)


@dataclass(frozen=True)
class TestResult:
    """Outcome of a permutation test.

    observed holds the statistic without the constant n_x n_y/(n_x+n_y)
    factor (it cancels between observed and replicates, so the p-value is
    unaffected). config echoes every input that determines the result.
    """

    observed: StatisticValue
    p_value: float
    replicates: np.ndarray
    config: Mapping[str, object]


def _echo(statistic, plan: PermutationPlan, redraw: bool, estimator: str) -> dict:
    cfg = getattr(statistic, "cfg", None)
    echo: dict[str, object] = {"statistic": statistic.kind}
    if cfg is not None:
        echo["k"] = cfg.k
        echo["b1"] = cfg.b1
        echo["statistic_seed"] = cfg.seed
    echo["b2"] = plan.b2
    echo["plan_seed"] = plan.seed
    echo["redraw_randomness"] = redraw
    echo["p_estimator"] = estimator
    return echo


def p_value_from_replicates(observed: float, replicates: np.ndarray, estimator: str) -> float:
    """count(replicates >= observed)/b2, or the add-one variant."""
    count = int(np.count_nonzero(replicates >= observed))
    b2 = replicates.size
    if estimator == "paper":
        return count / b2
    return (1 + count) / (1 + b2)


def permutation_test(
    prob: TwoSampleProblem,
    statistic: PermutationStatistic,
    plan: PermutationPlan,
    *,
    redraw_randomness: bool = True,
    estimator: str = "paper",
    threads: int = 1,
    backend=None,
) -> TestResult:
    """Algorithmic p-value: relabel the pooled rows plan.b2 times.

    With redraw_randomness set (the default for the subspace/projection
    statistics), every replicate evaluates the statistic with fresh draws or
    projection matrices; when unset, the observed randomness is reused,
    which conditions the null distribution on it.

    A singular system in any replicate aborts the test: silently dropping
    replicates would bias the p-value.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    statistic.validate(prob)
    b = backend if backend is not None else active_backend()

    n_x, n = prob.n_x, prob.n_x + prob.n_y
    z_t = np.ascontiguousarray(np.concatenate([prob.x, prob.y], axis=0).T)

    explicit = plan.assignments
    if explicit is not None:
        if explicit.shape[1] != n_x:
            raise ValueError(
                f"assignments must select n_x={n_x} rows, got {explicit.shape[1]}"
            )
        if explicit.min() < 0 or explicit.max() >= n:
            raise ValueError(f"assignment indices must lie in [0, {n})")

    obs_rand = statistic.observed_randomness(prob.p)
    obs = statistic.value_t(prob.xt, prob.yt, obs_rand, b)
    if math.isnan(obs):
        raise SingularCovariance("observed statistic: singular system")

    reps = np.empty(plan.b2)

    def run_replicate(r: int) -> None:
        rng = substream(plan.seed, r)
        if explicit is not None:
            sel = explicit[r]
        else:
            sel = draw_index_sets(rng, n, n_x)[0]
        rand = statistic.replicate_randomness(prob.p, rng) if redraw_randomness else obs_rand
        xt_r = z_t[:, sel]
        yt_r = z_t[:, complement_indices(sel, n)]
        val = statistic.value_t(xt_r, yt_r, rand, b)
        if math.isnan(val):
            raise SingularCovariance(f"replicate {r}: singular system")
        reps[r] = val

    def run_chunk(lo: int, hi: int) -> None:
        for r in range(lo, hi):
            run_replicate(r)

    if threads == 1:
        run_chunk(0, plan.b2)
    else:
        step = max(1, -(-plan.b2 // (threads * 8)))
        bounds = [(lo, min(lo + step, plan.b2)) for lo in range(0, plan.b2, step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_chunk, lo, hi) for lo, hi in bounds]
            for f in futures:
                f.result()

    return TestResult(
        observed=StatisticValue(obs, statistic.kind),
        p_value=p_value_from_replicates(obs, reps, estimator),
        replicates=reps,
        config=_echo(statistic, plan, redraw_randomness, estimator),
    )


def exact_permutation_test(
    prob: TwoSampleProblem,
    statistic: PermutationStatistic,
    *,
    cap: int = EXACT_CAP,
    estimator: str = "paper",
    threads: int = 1,
    backend=None,
) -> TestResult:
    """Enumerate all C(n_x + n_y, n_x) relabelings for an exact p-value.

    Statistic randomness is held fixed at the observed draws, so the
    identity assignment reproduces the observed statistic exactly and the
    p-value is at least 1/C(n_x + n_y, n_x).
    """
    n = prob.n_x + prob.n_y
    total = math.comb(n, prob.n_x)
    if total > cap:
        raise TooManyPermutations(
            f"C({n}, {prob.n_x}) = {total} exceeds the cap of {cap}"
        )
    assignments = np.array(list(combinations(range(n), prob.n_x)), dtype=np.int64)
    plan = PermutationPlan(b2=total, seed=0, assignments=assignments)
    return permutation_test(
        prob,
        statistic,
        plan,
        redraw_randomness=False,
        estimator=estimator,
        threads=threads,
        backend=backend,
    )
