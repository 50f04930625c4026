"""Distributed fit over simulated workers, cross-validation and error-bound arithmetic.

Workers run as threads in one process. Each owns its column block and its
random projection; the only exchange before solving is the tree-reduced sum of
random-feature blocks, after which every worker solves its local dual problem
and returns the coefficients of its own raw columns.
"""
from __future__ import annotations

import logging
import math
import os
import threading
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .core import Dataset, FeaturePartition, FitConfig, PrimalSolution, derive_seed, \
    partition_features, slice_columns
from .sketch import make_srht, project_block
from .solver import ConvergenceError, local_dual_solve

log = logging.getLogger(__name__)

_PROJECTION_STREAM = 1


@dataclass
class RandomFeatureBlock:
    worker_id: int
    values: np.ndarray


@dataclass
class LocalDesign:
    """Worker k's raw columns next to the summed random features of all other workers."""

    worker_id: int
    raw: np.ndarray
    summed_others: np.ndarray
    _combined: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def combined(self) -> np.ndarray:
        if self._combined is None:
            self._combined = np.ascontiguousarray(np.hstack([self.raw, self.summed_others]))
        return self._combined


@dataclass
class CommunicationLog:
    """Counts what crosses worker boundaries during a run."""

    rounds: int = 0
    feature_values: int = 0
    slice_values: int = 0
    projections: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record_projection(self):
        with self._lock:
            self.projections += 1

    def record_exchange(self, blocks: Sequence[RandomFeatureBlock]):
        with self._lock:
            self.rounds += 1
            self.feature_values += sum(b.values.size for b in blocks)

    def record_slices(self, slices):
        with self._lock:
            self.slice_values += sum(np.size(s) for s in slices)

    @property
    def bytes_communicated(self) -> int:
        return 8 * (self.feature_values + self.slice_values)


def worker_threads() -> int:
    """Thread cap from DUALLOCO_THREADS, else the number of logical processors."""
    env = os.environ.get("DUALLOCO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer DUALLOCO_THREADS=%r", env)
    return os.cpu_count() or 1


def _map(fn, items):
    items = list(items)
    threads = min(worker_threads(), len(items))
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def tree_sum(blocks: Sequence[RandomFeatureBlock]) -> np.ndarray:
    """Elementwise sum by pairwise reduction in a fixed order.

    Level by level, neighbours (0,1), (2,3), ... are added; an odd block out is
    carried to the next level unchanged.
    """
    if not blocks:
        raise ValueError("tree_sum needs at least one block")
    shape = blocks[0].values.shape
    for b in blocks:
        if b.values.shape != shape:
            raise ValueError(f"random feature shapes differ: {b.values.shape} vs {shape}")
    level = [np.array(b.values, dtype=np.float64) for b in blocks]
    while len(level) > 1:
        nxt = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def build_local_design(own_block: np.ndarray, own_rf: RandomFeatureBlock,
                       total_sum: np.ndarray) -> LocalDesign:
    own_block = np.asarray(own_block, dtype=np.float64)
    if own_rf.values.shape != total_sum.shape:
        raise ValueError("own random features and total sum differ in shape")
    if own_block.shape[0] != total_sum.shape[0]:
        raise ValueError("raw block and random features differ in row count")
    return LocalDesign(own_rf.worker_id, own_block, total_sum - own_rf.values)


@dataclass(frozen=True)
class ProjectionPlan:
    """How random features are formed for one run.

    ``mode`` is "srht" (each worker compresses its block to ``width`` columns)
    or "identity" (each worker embeds its raw block at its original column
    positions in a width-p matrix, so the summed features are lossless).
    """

    mode: str
    width: int


def plan_projection(p: int, partition: FeaturePartition, config: FitConfig) -> ProjectionPlan:
    sizes = partition.block_sizes
    tau_max, tau_min = max(sizes), min(sizes)
    if config.projection == "identity" or len(sizes) == 1:
        return ProjectionPlan("identity", p)
    tau_subs = config.resolve_projection_dim(p, tau_max)
    if tau_subs >= p - tau_max:
        # compressing would not save anything over shipping the raw columns
        return ProjectionPlan("identity", p)
    if tau_subs > tau_min:
        raise ValueError(
            f"projection_dim {tau_subs} exceeds the smallest block ({tau_min} columns); "
            "use fewer workers or fewer random features"
        )
    return ProjectionPlan("srht", tau_subs)


def compute_random_features(worker_id: int, raw: np.ndarray, columns: np.ndarray,
                            plan: ProjectionPlan, p: int, seed: int,
                            comm: Optional[CommunicationLog] = None) -> RandomFeatureBlock:
    if plan.mode == "identity":
        values = np.zeros((raw.shape[0], p))
        values[:, columns] = raw
    else:
        values = project_block(raw, make_srht(raw.shape[1], plan.width, seed))
    if comm is not None:
        comm.record_projection()
    return RandomFeatureBlock(worker_id, values)


def _exchange(rfs: Sequence[RandomFeatureBlock], comm: CommunicationLog) -> np.ndarray:
    comm.record_exchange(rfs)
    return tree_sum(rfs)


def _solve_worker(design: LocalDesign, labels, config: FitConfig, lam: float):
    state, report = local_dual_solve(design.combined, labels, config.family, lam,
                                     config.gap_tol, config.max_epochs, config.seed)
    if not report.converged:
        raise ConvergenceError(
            f"worker {design.worker_id}: gap {report.final_gap:.3e} above {config.gap_tol:.1e} "
            f"after {report.epochs_run} epochs",
            gap=report.final_gap, worker_id=design.worker_id,
        )
    n = design.raw.shape[0]
    beta_k = -(design.raw.T @ state.alpha) / (n * lam)
    return beta_k, report


def fit(data: Dataset, config: FitConfig, comm: Optional[CommunicationLog] = None,
        partition: Optional[FeaturePartition] = None) -> PrimalSolution:
    """Run the one-round distributed estimator and assemble the coefficient vector.

    ``solution.metrics`` carries per-phase wall times, the communication
    counts and each worker's solver report.
    """
    comm = CommunicationLog() if comm is None else comm
    n, p = data.n, data.p
    K = config.num_workers
    t0 = time.perf_counter()
    if partition is None:
        partition = partition_features(p, K, config.seed)
    else:
        partition.validate(p)
        if partition.num_workers != K:
            raise ValueError("partition does not match num_workers")
    plan = plan_projection(p, partition, config)
    raws = [slice_columns(data, block) for block in partition.blocks]

    t1 = time.perf_counter()
    rfs = _map(
        lambda k: compute_random_features(k, raws[k], partition.blocks[k], plan, p,
                                          derive_seed(config.seed, _PROJECTION_STREAM, k), comm),
        range(K),
    )
    t2 = time.perf_counter()
    total = _exchange(rfs, comm)
    designs = [build_local_design(raws[k], rfs[k], total) for k in range(K)]
    t3 = time.perf_counter()
    results = _map(lambda k: _solve_worker(designs[k], data.labels, config, config.lam), range(K))
    t4 = time.perf_counter()

    slices = [beta_k for beta_k, _ in results]
    comm.record_slices(slices)
    beta = np.empty(p)
    for block, beta_k in zip(partition.blocks, slices):
        beta[block] = beta_k
    t5 = time.perf_counter()

    metrics = {
        "projection_mode": plan.mode,
        "random_features": plan.width,
        "wall_time_seconds": {
            "projection": t2 - t1,
            "communication": t3 - t2,
            "solve": t4 - t3,
            "total": t5 - t0,
        },
        "rounds": comm.rounds,
        "bytes_communicated": comm.bytes_communicated,
        "worker_epochs": [r.epochs_run for _, r in results],
        "worker_gaps": [r.final_gap for _, r in results],
    }
    return PrimalSolution(beta, config, metrics)


def predict(solution, X_new) -> np.ndarray:
    beta = solution.coefficients if isinstance(solution, PrimalSolution) else np.asarray(solution)
    X_new = np.asarray(X_new, dtype=np.float64)
    if X_new.ndim != 2 or X_new.shape[1] != beta.shape[0]:
        raise ValueError(f"expected {beta.shape[0]} columns, got shape {X_new.shape}")
    return X_new @ beta


def predict_labels(solution, X_new) -> np.ndarray:
    """Thresholded predictions in {-1, +1} (ties go to +1)."""
    return np.where(predict(solution, X_new) >= 0, 1.0, -1.0)


@dataclass
class CVResult:
    lam: float
    mean_error: float
    fold_errors: List[float]


def make_folds(n: int, v: int, cv_seed: int) -> list:
    """v contiguous chunks of a seeded permutation of range(n), each sorted."""
    if v < 2:
        raise ValueError("need at least two folds")
    if v > n:
        raise ValueError(f"{v} folds for {n} samples leaves empty folds")
    perm = np.random.default_rng(cv_seed).permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, v)]


def _error(metric: str, pred: np.ndarray, truth: np.ndarray) -> float:
    if metric == "mse":
        return float(np.mean((pred - truth) ** 2))
    if metric == "misclassification":
        return float(np.mean(np.where(pred >= 0, 1.0, -1.0) != truth))
    raise ValueError(f"unknown metric {metric!r}")


def cross_validate(data: Dataset, config: FitConfig, lambdas: Sequence[float], folds: int,
                   cv_seed: int, comm: Optional[CommunicationLog] = None, metric: str = "mse"):
    """v-fold CV over a lambda grid, projecting and exchanging once per fold.

    Returns ``(best_lambda, table)`` with one :class:`CVResult` per lambda, in
    grid order. Ties go to the earliest lambda in the grid.
    """
    lambdas = [float(l) for l in lambdas]
    if not lambdas or any(not l > 0 for l in lambdas):
        raise ValueError("lambdas must be a non-empty list of positive values")
    comm = CommunicationLog() if comm is None else comm
    n, p = data.n, data.p
    K = config.num_workers
    fold_idx = make_folds(n, folds, cv_seed)
    partition = partition_features(p, K, config.seed)
    plan = plan_projection(p, partition, config)
    errors = np.full((len(lambdas), folds), np.nan)

    for f, test in enumerate(fold_idx):
        train = np.setdiff1d(np.arange(n), test, assume_unique=True)
        if train.size == 0 or test.size == 0:
            raise ValueError("empty training or test fold")
        y_train, y_test = data.labels[train], data.labels[test]
        raws = [data.features[np.ix_(train, block)] for block in partition.blocks]
        rfs = _map(
            lambda k: compute_random_features(
                k, raws[k], partition.blocks[k], plan, p,
                derive_seed(config.seed, _PROJECTION_STREAM, k, f), comm),
            range(K),
        )
        total = _exchange(rfs, comm)
        designs = [build_local_design(raws[k], rfs[k], total) for k in range(K)]
        test_blocks = [data.features[np.ix_(test, block)] for block in partition.blocks]

        for j, lam in enumerate(lambdas):
            try:
                parts = _map(lambda k: _solve_worker(designs[k], y_train, config, lam)[0], range(K))
            except ConvergenceError as exc:
                warnings.warn(f"fold {f}, lambda {lam:g}: {exc}; cell excluded", RuntimeWarning)
                continue
            comm.record_slices([Xt @ b for Xt, b in zip(test_blocks, parts)])
            pred = np.zeros(test.size)
            for Xt, b in zip(test_blocks, parts):
                pred += Xt @ b
            errors[j, f] = _error(metric, pred, y_test)

    table = []
    for j, lam in enumerate(lambdas):
        valid = errors[j][~np.isnan(errors[j])]
        if valid.size == 0:
            raise ConvergenceError(f"lambda {lam:g} failed on every fold")
        table.append(CVResult(lam, float(valid.mean()), errors[j].tolist()))
    best = min(range(len(table)), key=lambda j: (table[j].mean_error, j))
    return table[best].lam, table


class ErrorBound(NamedTuple):
    rho: float
    global_bound_factor: float

    @property
    def out_of_regime(self) -> bool:
        return math.isinf(self.global_bound_factor)


def theoretical_error_bound(r: int, tau_subs: float, delta: float = 0.1, c0: float = 1.0,
                            K: int = 1) -> ErrorBound:
    """Local error rate rho and the global factor eps/(1-eps), eps = sqrt(K) rho.

    ``rho = sqrt(c0 log(2r/delta) r / tau_subs)``; the factor multiplies
    ``|beta*|`` in the bound on ``|beta_hat - beta*|``. When ``eps >= 1`` the
    bound is vacuous and the factor is ``inf``.
    """
    if r < 1 or tau_subs <= 0 or c0 <= 0 or K < 1 or not 0 < delta < 1:
        raise ValueError("need r >= 1, tau_subs > 0, c0 > 0, K >= 1 and 0 < delta < 1")
    rho = math.sqrt(c0 * math.log(2 * r / delta) * r / tau_subs)
    eps = math.sqrt(K) * rho
    return ErrorBound(rho, eps / (1 - eps) if eps < 1 else math.inf)


def calibrate_c0(observed_ratio: float, r: int, tau_subs: float, delta: float = 0.1,
                 K: int = 1) -> float:
    """The c0 at which the global factor equals ``observed_ratio``."""
    if observed_ratio < 0:
        raise ValueError("observed_ratio must be non-negative")
    eps = observed_ratio / (1 + observed_ratio)
    rho = eps / math.sqrt(K)
    return rho**2 * tau_subs / (math.log(2 * r / delta) * r)


def numerical_rank(X, rel_tol: float = 1e-10) -> int:
    """Count of singular values above ``rel_tol`` times the largest one."""
    if not 0 < rel_tol < 1:
        raise ValueError("rel_tol must lie in (0, 1)")
    s = np.linalg.svd(np.asarray(X, dtype=np.float64), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))
