"""Subsampled randomized Hadamard transform (SRHT) of column blocks.

A spec represents Pi = scale * D H S acting on row vectors: pad to the next
power of two, flip signs, apply the orthonormal Walsh-Hadamard transform, keep
``target_dim`` coordinates. Pi is never formed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import _backend
from .core import derive_seed


@dataclass(frozen=True)
class SrhtSpec:
    source_dim: int
    target_dim: int
    padded_dim: int
    sign_flips: np.ndarray
    sample_indices: np.ndarray
    scale: float

    def __post_init__(self):
        signs = np.asarray(self.sign_flips, dtype=np.float64)
        idx = np.asarray(self.sample_indices, dtype=np.intp)
        if signs.shape != (self.padded_dim,) or not np.all(np.abs(signs) == 1.0):
            raise ValueError("sign_flips must be a +-1 vector of length padded_dim")
        if idx.shape != (self.target_dim,) or len(np.unique(idx)) != idx.size:
            raise ValueError("sample_indices must be target_dim distinct indices")
        if idx.size and (idx.min() < 0 or idx.max() >= self.padded_dim):
            raise ValueError("sample_indices out of range")
        signs.setflags(write=False)
        idx.setflags(write=False)
        object.__setattr__(self, "sign_flips", signs)
        object.__setattr__(self, "sample_indices", idx)

    def matrix(self) -> np.ndarray:
        """Dense source_dim x target_dim matrix (for tests and small diagnostics)."""
        return project_block(np.eye(self.source_dim), self)


def next_power_of_two(m: int) -> int:
    return 1 if m <= 1 else 1 << (int(m) - 1).bit_length()


def fwht_in_place(v: np.ndarray) -> np.ndarray:
    """Orthonormal Walsh-Hadamard transform of ``v``; overwrites and returns it.

    Non-float64 or non-contiguous input is transformed on a copy.
    """
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError("fwht_in_place expects a 1-D vector")
    m = v.shape[0]
    if m == 0 or m & (m - 1):
        raise ValueError(f"length must be a power of two, got {m}")
    out = v if (v.dtype == np.float64 and v.flags.c_contiguous and v.flags.writeable) \
        else np.array(v, dtype=np.float64, order="C")
    _backend.fwht_rows(out.reshape(1, m))
    return out


def make_srht(source_dim: int, target_dim: int, seed: int) -> SrhtSpec:
    if source_dim < 1 or target_dim < 1:
        raise ValueError("dimensions must be positive")
    if target_dim > source_dim:
        raise ValueError(f"target_dim {target_dim} exceeds source_dim {source_dim}")
    padded = next_power_of_two(source_dim)
    rng = np.random.default_rng(seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=padded)
    idx = np.sort(rng.choice(padded, size=target_dim, replace=False))
    # padded_dim, not source_dim: keeps E[Pi Pi'] = I when zero-padding is used
    return SrhtSpec(source_dim, target_dim, padded, signs, idx, float(np.sqrt(padded / target_dim)))


def make_summed_srht(source_dims: Sequence[int], target_dim: int, seed: int) -> tuple:
    """Independent specs, one per source block, with a common target dimension."""
    return tuple(make_srht(d, target_dim, derive_seed(seed, i)) for i, d in enumerate(source_dims))


def project_block(block: np.ndarray, spec: SrhtSpec) -> np.ndarray:
    """Rows of ``block`` mapped through Pi: an n x target_dim matrix."""
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[1] != spec.source_dim:
        raise ValueError(f"block has shape {block.shape}, spec expects {spec.source_dim} columns")
    work = np.zeros((block.shape[0], spec.padded_dim))
    work[:, : spec.source_dim] = block
    work *= spec.sign_flips
    _backend.fwht_rows(work)
    out = work[:, spec.sample_indices]
    out *= spec.scale
    return out


def spectral_deviation(V: np.ndarray,
                       spec: Union[SrhtSpec, Sequence[SrhtSpec], None]) -> float:
    """Spectral norm of (Pi' V)'(Pi' V) - V'V for orthonormal V.

    ``spec`` may be a single SRHT, a sequence of SRHTs whose source blocks
    cover consecutive row ranges of V and whose outputs are summed, or None
    for the identity (which deviates by zero).
    """
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2:
        raise ValueError("V must be a 2-D matrix")
    r = V.shape[1]
    if np.max(np.abs(V.T @ V - np.eye(r)), initial=0.0) > 1e-10:
        raise ValueError("V must have orthonormal columns")
    if spec is None:
        return 0.0
    specs = (spec,) if isinstance(spec, SrhtSpec) else tuple(spec)
    if sum(s.source_dim for s in specs) != V.shape[0]:
        raise ValueError("spec source dimensions do not match the rows of V")
    if len({s.target_dim for s in specs}) != 1:
        raise ValueError("summed specs need a common target_dim")
    W = np.zeros((r, specs[0].target_dim))
    start = 0
    for s in specs:
        W += project_block(V[start:start + s.source_dim].T, s)
        start += s.source_dim
    diff = W @ W.T - V.T @ V
    return float(np.max(np.abs(np.linalg.eigvalsh(diff)), initial=0.0))
