"""Data types, column partitioning and seed derivation shared across the package."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .losses import LOSS_KINDS, LossFamily

PROJECTIONS = ("srht", "identity")


@dataclass(frozen=True)
class Dataset:
    """Dense design matrix with one label per row."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.ascontiguousarray(self.labels, dtype=np.float64).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"features must be a non-empty 2-D array, got shape {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"{y.shape[0]} labels for {X.shape[0]} rows")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("features and labels must be finite")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.labels[rows])


@dataclass(frozen=True)
class FeaturePartition:
    """Disjoint column blocks P_1..P_K covering ``range(p)`` (0-based)."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=np.intp) for b in self.blocks)
        for b in blocks:
            b.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @property
    def num_workers(self) -> int:
        return len(self.blocks)

    @property
    def p(self) -> int:
        return int(sum(len(b) for b in self.blocks))

    @property
    def block_sizes(self) -> list:
        return [len(b) for b in self.blocks]

    def validate(self, p: int) -> None:
        allidx = np.concatenate(self.blocks) if self.blocks else np.array([], dtype=np.intp)
        if allidx.size != p or not np.array_equal(np.sort(allidx), np.arange(p)):
            raise ValueError("blocks must be disjoint and cover every column exactly once")


@dataclass(frozen=True)
class FitConfig:
    """Parameters of one distributed fit.

    ``projection_dim`` is either an integer number of random features or a
    float in (0, 1], read as a fraction of ``p - tau`` and resolved when the
    run starts.
    """

    lam: float
    num_workers: int = 1
    projection_dim: Union[int, float] = 0.1
    loss: str = "squared"
    smoothing: float = 1.0
    gap_tol: float = 1e-8
    max_epochs: int = 1000
    seed: int = 0
    projection: str = "srht"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if int(self.num_workers) != self.num_workers or self.num_workers < 1:
            raise ValueError(f"num_workers must be a positive integer, got {self.num_workers}")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.loss!r}; expected one of {LOSS_KINDS}")
        if self.projection not in PROJECTIONS:
            raise ValueError(f"unknown projection {self.projection!r}; expected one of {PROJECTIONS}")
        d = self.projection_dim
        if isinstance(d, (bool, np.bool_)):
            raise ValueError("projection_dim must be an int or a fraction")
        if isinstance(d, (int, np.integer)):
            if d < 1:
                raise ValueError(f"projection_dim must be >= 1, got {d}")
        elif not 0 < float(d) <= 1:
            raise ValueError(f"fractional projection_dim must lie in (0, 1], got {d}")
        if self.gap_tol <= 0 or self.max_epochs < 1:
            raise ValueError("gap_tol must be positive and max_epochs >= 1")

    @property
    def family(self) -> LossFamily:
        return LossFamily(self.loss, self.smoothing)

    def resolve_projection_dim(self, p: int, tau: int) -> int:
        """Number of random features for a worker owning ``tau`` of ``p`` columns."""
        d = self.projection_dim
        if isinstance(d, (int, np.integer)):
            return int(d)
        return max(1, int(round(float(d) * (p - tau))))

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "num_workers": self.num_workers,
            "projection_dim": self.projection_dim,
            "loss": self.loss,
            "smoothing": self.smoothing,
            "gap_tol": self.gap_tol,
            "max_epochs": self.max_epochs,
            "seed": self.seed,
            "projection": self.projection,
        }


@dataclass
class PrimalSolution:
    coefficients: np.ndarray
    config_echo: Optional[FitConfig] = None
    metrics: Optional[dict] = field(default=None)

    def __post_init__(self):
        beta = np.asarray(self.coefficients, dtype=np.float64).ravel()
        if not np.isfinite(beta).all():
            raise ValueError("coefficients must be finite")
        self.coefficients = beta

    @property
    def p(self) -> int:
        return self.coefficients.shape[0]

    def block(self, index) -> np.ndarray:
        return self.coefficients[np.asarray(index)]


def derive_seed(*keys: int) -> int:
    """Deterministically mix integer keys into an independent 64-bit seed."""
    ss = np.random.SeedSequence([int(k) & 0xFFFFFFFFFFFFFFFF for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def partition_features(p: int, K: int, seed: int) -> FeaturePartition:
    """Split ``range(p)`` into K balanced blocks by a seeded random permutation.

    Blocks are contiguous chunks of the permutation, each sorted ascending, so
    sizes differ by at most one.
    """
    if p < 1 or K < 1:
        raise ValueError(f"need p >= 1 and K >= 1, got p={p}, K={K}")
    if K > p:
        raise ValueError(f"cannot split {p} columns across {K} workers")
    perm = np.random.default_rng(derive_seed(seed, 0x5EED)).permutation(p)
    return FeaturePartition(tuple(np.sort(chunk) for chunk in np.array_split(perm, K)))


def slice_columns(data: Union[Dataset, np.ndarray], block: Sequence[int]) -> np.ndarray:
    """Columns of the design listed in ``block``, in listed order (0-based)."""
    X = data.features if isinstance(data, Dataset) else np.asarray(data)
    idx = np.asarray(block, dtype=np.intp)
    if idx.ndim != 1:
        raise ValueError("block must be a 1-D index list")
    if idx.size and (idx.min() < 0 or idx.max() >= X.shape[1]):
        raise ValueError(f"column index out of range for {X.shape[1]} columns")
    return X[:, idx]
