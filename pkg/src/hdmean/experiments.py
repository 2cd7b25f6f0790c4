"""Simulation harness: type-I error, power, k sweeps, the standardization
demo, and runtime benchmarks.

Every study is driven by a frozen spec and keyed randomness: dataset r of
scenario s uses substream (seed, s, r, 0/1), and test t on that dataset gets
the derived seed (seed, s, r, 2 + t). Results therefore do not depend on the
worker-pool width, and the power/k-sweep studies reuse the same datasets and
test randomness across their grids (common random numbers, so curves differ
by the shift or k alone).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping

import numpy as np
from scipy import stats as sp_stats

from ._rng import derive_seed
from .backends import get_backend
from .core import TwoSampleProblem
from .datasets import invariance_problem
from .errors import ZeroVariance
from .permutation import PermutationPlan, permutation_test
from .statistics import (
    PROJECTIONS,
    ProjectionT2Statistic,
    SrivastavaDuStatistic,
    SubspaceConfig,
    SubspaceT2Statistic,
    benjamini_hochberg_adjust,
    bonferroni_adjust,
    chen_qin_pvalue,
    default_k,
    lopes_statistic,
    marginal_t_pvalues,
    random_subspaces_statistic,
)
from .synthetic import (
    NORMAL,
    BlockCovariance,
    DistributionSpec,
    ShiftPattern,
    apply_shift,
    build_block_covariance,
    sample,
)

DEFAULT_TESTS = ("rs", "lopes", "cq", "sd", "bonferroni", "bh")

# A test runner maps (problem, seed) to a p-value.
TestRunner = Callable[[TwoSampleProblem, int], float]


@dataclass(frozen=True)
class RateEstimate:
    """A rejection proportion with its 95% Clopper-Pearson interval."""

    point: float
    ci_low: float
    ci_high: float
    replicates: int


def clopper_pearson(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval (conservative, assumption-free)."""
    if not 0 <= successes <= trials or trials < 1:
        raise ValueError(f"need 0 <= successes <= trials, got {successes}/{trials}")
    tail = (1.0 - confidence) / 2.0
    lo = 0.0 if successes == 0 else float(sp_stats.beta.ppf(tail, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(sp_stats.beta.ppf(1.0 - tail, successes + 1, trials - successes))
    return lo, hi


def rate_estimate(successes: int, trials: int) -> RateEstimate:
    lo, hi = clopper_pearson(successes, trials)
    return RateEstimate(successes / trials, lo, hi, trials)


def make_test_runners(
    k: int | None = None,
    b1: int = 100,
    b2: int = 500,
    estimator: str = "paper",
    backend=None,
) -> dict[str, TestRunner]:
    """The study-facing registry of named tests.

    Permutation-based tests (rs, lopes, sd) run single-threaded here;
    studies parallelize across datasets instead. k=None means the
    floor(dof/2) default, resolved per problem.
    """

    def k_for(prob: TwoSampleProblem) -> int:
        return default_k(prob.n_x, prob.n_y) if k is None else k

    def run_perm(prob, statistic, seed):
        plan = PermutationPlan(b2=b2, seed=seed)
        return permutation_test(
            prob, statistic, plan, estimator=estimator, backend=backend
        ).p_value

    def rs(prob, seed):
        cfg = SubspaceConfig(k=k_for(prob), b1=b1, seed=seed)
        return run_perm(prob, SubspaceT2Statistic(cfg), seed)

    def lopes(prob, seed):
        cfg = SubspaceConfig(k=k_for(prob), b1=b1, seed=seed, kind=PROJECTIONS)
        return run_perm(prob, ProjectionT2Statistic(cfg), seed)

    def sd(prob, seed):
        return run_perm(prob, SrivastavaDuStatistic(), seed)

    def cq(prob, seed):
        return chen_qin_pvalue(prob)

    def bonferroni(prob, seed):
        return float(bonferroni_adjust(marginal_t_pvalues(prob)).min())

    def bh(prob, seed):
        return float(benjamini_hochberg_adjust(marginal_t_pvalues(prob)).min())

    return {"rs": rs, "lopes": lopes, "cq": cq, "sd": sd, "bonferroni": bonferroni, "bh": bh}


@dataclass(frozen=True)
class Scenario:
    """A named null sampling scenario (family + covariance, zero mean)."""

    name: str
    family: str
    covariance: BlockCovariance


def scenario(family: str, covariance: BlockCovariance) -> Scenario:
    name = f"{family}-s{covariance.within:g}-{covariance.between:g}"
    return Scenario(name, family, covariance)


@dataclass(frozen=True)
class RateRow:
    """One long-format result row: y is the rate at grid position x."""

    scenario: str
    test: str
    x: float
    estimate: RateEstimate

    def as_tuple(self) -> tuple:
        e = self.estimate
        return (self.scenario, self.test, self.x, e.point, e.ci_low, e.ci_high)


def _run_datasets(replicates: int, threads: int, task: Callable[[int], None]) -> None:
    if threads <= 1:
        for r in range(replicates):
            task(r)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for f in [pool.submit(task, r) for r in range(replicates)]:
            f.result()


@dataclass(frozen=True)
class Type1Spec:
    scenarios: tuple[Scenario, ...]
    n_x: int
    n_y: int
    tests: tuple[str, ...] = DEFAULT_TESTS
    alpha: float = 0.05
    replicates: int = 200
    k: int | None = None
    b1: int = 100
    b2: int = 500
    seed: int = 0
    threads: int = 1
    estimator: str = "paper"


def run_type1_study(spec: Type1Spec, runners: Mapping[str, TestRunner] | None = None, backend=None) -> list[RateRow]:
    """Null rejection rate per (scenario, test) at level spec.alpha.

    Row x positions carry alpha (the nominal level the rate should match).
    """
    if runners is None:
        runners = make_test_runners(spec.k, spec.b1, spec.b2, spec.estimator, backend)
    rows: list[RateRow] = []
    for s, scen in enumerate(spec.scenarios):
        dist = DistributionSpec(scen.family, scen.covariance)
        reject = np.zeros((len(spec.tests), spec.replicates), dtype=bool)

        def task(r: int, s=s, dist=dist, reject=reject) -> None:
            x = sample(dist, spec.n_x, (spec.seed, s, r, 0))
            y = sample(dist, spec.n_y, (spec.seed, s, r, 1))
            prob = TwoSampleProblem(x, y)
            for t, name in enumerate(spec.tests):
                pv = runners[name](prob, derive_seed(spec.seed, s, r, 2 + t))
                reject[t, r] = pv <= spec.alpha

        _run_datasets(spec.replicates, spec.threads, task)
        for t, name in enumerate(spec.tests):
            rows.append(
                RateRow(scen.name, name, spec.alpha, rate_estimate(int(reject[t].sum()), spec.replicates))
            )
    return rows


@dataclass(frozen=True)
class PowerSpec:
    """Power curve over a grid of shift norms, for one null scenario.

    The shift moves genes_per_block coordinates in each of blocks_shifted
    blocks; the grid positions are the Euclidean norms of the shift vector.
    """

    covariance: BlockCovariance
    blocks_shifted: int
    genes_per_block: int
    norms: tuple[float, ...]
    n_x: int
    n_y: int
    family: str = NORMAL
    tests: tuple[str, ...] = DEFAULT_TESTS
    alpha: float = 0.05
    replicates: int = 200
    k: int | None = None
    b1: int = 100
    b2: int = 500
    seed: int = 0
    threads: int = 1
    estimator: str = "paper"

    @property
    def scenario_name(self) -> str:
        c = self.covariance
        return f"{self.family}-s{c.within:g}-{c.between:g}-m{self.blocks_shifted}"

    def shift_vector(self, norm: float) -> np.ndarray:
        pattern = ShiftPattern.from_norm(
            norm, self.blocks_shifted, self.genes_per_block, self.covariance.block_size
        )
        return apply_shift(np.zeros(self.covariance.p), pattern)


def run_power_study(spec: PowerSpec, runners: Mapping[str, TestRunner] | None = None, backend=None) -> list[RateRow]:
    """Rejection rate per (test, shift norm), with common random numbers.

    Each replicate draws one null dataset and reuses it across the whole
    norm grid (the shift is added to the y sample), and each test keeps its
    seed across the grid, so curves are comparable point to point.
    """
    if not spec.norms:
        raise ValueError("norms grid must be non-empty")
    if runners is None:
        runners = make_test_runners(spec.k, spec.b1, spec.b2, spec.estimator, backend)
    dist = DistributionSpec(spec.family, spec.covariance)
    deltas = [spec.shift_vector(norm) for norm in spec.norms]
    reject = np.zeros((len(spec.norms), len(spec.tests), spec.replicates), dtype=bool)

    def task(r: int) -> None:
        x = sample(dist, spec.n_x, (spec.seed, 0, r, 0))
        y0 = sample(dist, spec.n_y, (spec.seed, 0, r, 1))
        seeds = [derive_seed(spec.seed, 0, r, 2 + t) for t in range(len(spec.tests))]
        for g, delta in enumerate(deltas):
            prob = TwoSampleProblem(x, y0 + delta)
            for t, name in enumerate(spec.tests):
                reject[g, t, r] = runners[name](prob, seeds[t]) <= spec.alpha

    _run_datasets(spec.replicates, spec.threads, task)
    rows: list[RateRow] = []
    for g, norm in enumerate(spec.norms):
        for t, name in enumerate(spec.tests):
            rows.append(
                RateRow(spec.scenario_name, name, norm, rate_estimate(int(reject[g, t].sum()), spec.replicates))
            )
    return rows


@dataclass(frozen=True)
class KSweepSpec:
    """Power of the subspaces test across a grid of working dimensions."""

    covariance: BlockCovariance
    blocks_shifted: int
    genes_per_block: int
    norm: float
    k_grid: tuple[int, ...]
    n_x: int
    n_y: int
    family: str = NORMAL
    alpha: float = 0.05
    replicates: int = 200
    b1: int = 100
    b2: int = 500
    seed: int = 0
    threads: int = 1
    estimator: str = "paper"

    @property
    def scenario_name(self) -> str:
        c = self.covariance
        return f"{self.family}-s{c.within:g}-{c.between:g}-m{self.blocks_shifted}"


@dataclass(frozen=True)
class KSweepResult:
    rows: list[RateRow]
    best_k: int


def run_k_sweep(spec: KSweepSpec, backend=None) -> KSweepResult:
    """T_rs power per k at one fixed alternative, on shared datasets."""
    if not spec.k_grid:
        raise ValueError("k_grid must be non-empty")
    dof = spec.n_x + spec.n_y - 2
    for k in spec.k_grid:
        if not 1 <= k <= min(dof, spec.covariance.p):
            raise ValueError(f"k={k} outside [1, min(dof={dof}, p={spec.covariance.p})]")
    dist = DistributionSpec(spec.family, spec.covariance)
    pattern = ShiftPattern.from_norm(
        spec.norm, spec.blocks_shifted, spec.genes_per_block, spec.covariance.block_size
    )
    delta = apply_shift(np.zeros(spec.covariance.p), pattern)
    reject = np.zeros((len(spec.k_grid), spec.replicates), dtype=bool)

    def task(r: int) -> None:
        x = sample(dist, spec.n_x, (spec.seed, 0, r, 0))
        y = sample(dist, spec.n_y, (spec.seed, 0, r, 1)) + delta
        prob = TwoSampleProblem(x, y)
        seed = derive_seed(spec.seed, 0, r, 2)
        for i, k in enumerate(spec.k_grid):
            cfg = SubspaceConfig(k=k, b1=spec.b1, seed=seed)
            res = permutation_test(
                prob,
                SubspaceT2Statistic(cfg),
                PermutationPlan(b2=spec.b2, seed=seed),
                estimator=spec.estimator,
                backend=backend,
            )
            reject[i, r] = res.p_value <= spec.alpha

    _run_datasets(spec.replicates, spec.threads, task)
    rows = [
        RateRow(spec.scenario_name, "rs", float(k), rate_estimate(int(reject[i].sum()), spec.replicates))
        for i, k in enumerate(spec.k_grid)
    ]
    best = spec.k_grid[int(np.argmax([row.estimate.point for row in rows]))]
    return KSweepResult(rows, best)


# ---------------------------------------------------------------------------
# Standardization (invariance) demo


def standardize_columns(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Divide both samples by the per-column standard deviation of the
    stacked data (ddof=1), the usual marginal standardization."""
    z = np.concatenate([x, y], axis=0)
    sd = z.std(axis=0, ddof=1)
    zero = np.flatnonzero(sd == 0.0)
    if zero.size:
        raise ZeroVariance(int(zero[0]))
    return x / sd, y / sd


@dataclass(frozen=True)
class InvarianceReport:
    """Statistics and p-values on raw vs column-standardized data.

    Statistics use randomness fixed by cfg.seed, identical on both sides;
    p-values use the shared plan with per-replicate redraws. The subspaces
    entries should match across the raw/std pairs, the projection entries
    generally should not.
    """

    rs_stat_raw: float
    rs_stat_std: float
    lopes_stat_raw: float
    lopes_stat_std: float
    rs_p_raw: float
    rs_p_std: float
    lopes_p_raw: float
    lopes_p_std: float
    k: int
    b1: int
    b2: int
    seed: int


def run_invariance_demo(
    prob: TwoSampleProblem | None = None,
    cfg: SubspaceConfig | None = None,
    plan: PermutationPlan | None = None,
    threads: int = 1,
    backend=None,
) -> InvarianceReport:
    """Compare raw vs standardized behavior of the two averaged-T² tests.

    Defaults to the bundled 20-variable gene-set dataset with the
    floor(dof/2) working dimension.
    """
    if prob is None:
        prob = invariance_problem()
    if cfg is None:
        cfg = SubspaceConfig(k=default_k(prob.n_x, prob.n_y), b1=100, seed=0)
    if plan is None:
        plan = PermutationPlan(b2=500, seed=cfg.seed)
    cfg_rs = replace(cfg, kind="subspaces")
    cfg_pr = replace(cfg, kind=PROJECTIONS)
    x_std, y_std = standardize_columns(prob.x, prob.y)
    prob_std = TwoSampleProblem(x_std, y_std)

    def stat(problem, kind_cfg, fn):
        return fn(problem, kind_cfg, backend=backend).value

    def pval(problem, statistic):
        return permutation_test(
            problem, statistic, plan, threads=threads, backend=backend
        ).p_value

    return InvarianceReport(
        rs_stat_raw=stat(prob, cfg_rs, random_subspaces_statistic),
        rs_stat_std=stat(prob_std, cfg_rs, random_subspaces_statistic),
        lopes_stat_raw=stat(prob, cfg_pr, lopes_statistic),
        lopes_stat_std=stat(prob_std, cfg_pr, lopes_statistic),
        rs_p_raw=pval(prob, SubspaceT2Statistic(cfg_rs)),
        rs_p_std=pval(prob_std, SubspaceT2Statistic(cfg_rs)),
        lopes_p_raw=pval(prob, ProjectionT2Statistic(cfg_pr)),
        lopes_p_std=pval(prob_std, ProjectionT2Statistic(cfg_pr)),
        k=cfg.k,
        b1=cfg.b1,
        b2=plan.b2,
        seed=cfg.seed,
    )


# ---------------------------------------------------------------------------
# Runtime benchmark


@dataclass(frozen=True)
class BenchSpec:
    """Timing grid for one full permutation test per configuration."""

    p: int = 200
    n_x: int = 50
    n_y: int = 50
    k_grid: tuple[int, ...] = (5, 25, 50)
    thread_grid: tuple[int, ...] = (1, 4)
    b1: int = 100
    b2: int = 500
    repeats: int = 5
    seed: int = 0
    backends: tuple[str, ...] | None = None


@dataclass(frozen=True)
class BenchRow:
    backend: str
    k: int
    threads: int
    seconds: float
    speedup: float


def _available_backends() -> tuple[str, ...]:
    try:
        get_backend("numba")
    except Exception:
        return ("numpy",)
    return ("numba", "numpy")


def bench_runtime(spec: BenchSpec) -> list[BenchRow]:
    """Mean wall time of one permutation test per (backend, k, threads).

    One warm-up run per (backend, k) precedes timing, so JIT compilation is
    not billed to the first measurement. speedup is relative to the same
    backend and k at threads=1 (NaN when 1 is not in the grid).
    """
    if spec.repeats < 1:
        raise ValueError("repeats must be >= 1")
    names = spec.backends if spec.backends is not None else _available_backends()
    blocks = 8 if spec.p % 8 == 0 else 1
    cov = build_block_covariance(spec.p, blocks, 0.5, 0.1) if blocks == 8 else build_block_covariance(spec.p, 1, 0.5, 0.0)
    dist = DistributionSpec(NORMAL, cov)
    prob = TwoSampleProblem(
        sample(dist, spec.n_x, (spec.seed, 0)), sample(dist, spec.n_y, (spec.seed, 1))
    )
    rows: list[BenchRow] = []
    for name in names:
        b = get_backend(name)
        for k in spec.k_grid:
            cfg = SubspaceConfig(k=k, b1=spec.b1, seed=spec.seed)
            statistic = SubspaceT2Statistic(cfg)
            warm_plan = PermutationPlan(b2=min(spec.b2, 5), seed=spec.seed)
            permutation_test(prob, statistic, warm_plan, backend=b)
            plan = PermutationPlan(b2=spec.b2, seed=spec.seed)
            base: float | None = None
            for threads in spec.thread_grid:
                times = []
                for _ in range(spec.repeats):
                    t0 = time.perf_counter()
                    permutation_test(prob, statistic, plan, threads=threads, backend=b)
                    times.append(time.perf_counter() - t0)
                seconds = float(np.mean(times))
                if threads == 1:
                    base = seconds
                speedup = base / seconds if base is not None else math.nan
                rows.append(BenchRow(name, k, threads, seconds, speedup))
    return rows


# ---------------------------------------------------------------------------
# Presets
#
# Desk scale finishes on a laptop-class machine in minutes; paper scale
# matches the published study dimensions and is long-running.

DESK = "desk"
PAPER_TABLE1 = "paper-table1"
PAPER_FIG1 = "paper-fig1"
PAPER_FIG3 = "paper-fig3"


def desk_type1_spec(**overrides) -> Type1Spec:
    cov00 = build_block_covariance(50, 5, 0.0, 0.0)
    cov51 = build_block_covariance(50, 5, 0.5, 0.1)
    base = Type1Spec(
        scenarios=(scenario(NORMAL, cov00), scenario(NORMAL, cov51)),
        n_x=20,
        n_y=20,
        replicates=200,
        k=19,
        b1=50,
        b2=200,
    )
    return replace(base, **overrides)


def paper_type1_spec(**overrides) -> Type1Spec:
    cov = {ab: build_block_covariance(200, 8, *ab) for ab in ((0.0, 0.0), (0.5, 0.1), (0.9, 0.2))}
    base = Type1Spec(
        scenarios=(
            scenario(NORMAL, cov[(0.0, 0.0)]),
            scenario(NORMAL, cov[(0.5, 0.1)]),
            scenario(NORMAL, cov[(0.9, 0.2)]),
            scenario("t4", cov[(0.0, 0.0)]),
            scenario("t4", cov[(0.5, 0.1)]),
        ),
        n_x=50,
        n_y=50,
        replicates=1000,
        k=49,
        b1=100,
        b2=500,
    )
    return replace(base, **overrides)


def desk_power_spec(**overrides) -> PowerSpec:
    base = PowerSpec(
        covariance=build_block_covariance(50, 5, 0.9, 0.2),
        blocks_shifted=4,
        genes_per_block=8,
        norms=(0.5, 1.0, 1.5, 2.0, 2.5),
        n_x=20,
        n_y=20,
        replicates=200,
        k=19,
        b1=50,
        b2=200,
    )
    return replace(base, **overrides)


def paper_fig1_spec(**overrides) -> PowerSpec:
    base = PowerSpec(
        covariance=build_block_covariance(200, 8, 0.5, 0.1),
        blocks_shifted=4,
        genes_per_block=20,
        norms=tuple(np.round(np.linspace(0.25, 2.5, 10), 3)),
        n_x=50,
        n_y=50,
        replicates=1000,
        k=49,
        b1=100,
        b2=500,
    )
    return replace(base, **overrides)


def desk_ksweep_spec(**overrides) -> KSweepSpec:
    base = KSweepSpec(
        covariance=build_block_covariance(50, 5, 0.9, 0.2),
        blocks_shifted=4,
        genes_per_block=8,
        norm=1.5,
        k_grid=(2, 5, 10, 14, 19, 24, 29, 33, 38),
        n_x=20,
        n_y=20,
        replicates=200,
        b1=50,
        b2=200,
    )
    return replace(base, **overrides)


def paper_fig3_spec(**overrides) -> KSweepSpec:
    base = KSweepSpec(
        covariance=build_block_covariance(200, 8, 0.5, 0.1),
        blocks_shifted=4,
        genes_per_block=20,
        norm=1.5,
        k_grid=(1, 10, 25, 40, 49, 60, 75, 90),
        n_x=50,
        n_y=50,
        replicates=1000,
        b1=100,
        b2=500,
    )
    return replace(base, **overrides)


def desk_bench_spec(**overrides) -> BenchSpec:
    base = BenchSpec(p=50, n_x=20, n_y=20, k_grid=(5, 19), thread_grid=(1, 2), b2=200, b1=50, repeats=3)
    return replace(base, **overrides)


def paper_bench_spec(**overrides) -> BenchSpec:
    return replace(BenchSpec(), **overrides)
