"""Dual coordinate ascent (SDCA) on a local design, the exact reference solver
and the duality-gap certificate."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from . import _backend
from .core import Dataset, PrimalSolution
from .losses import LossFamily, conjugate_values, loss_values


class ConvergenceError(RuntimeError):
    """The dual solver hit its epoch budget before reaching the gap target."""

    def __init__(self, message, gap=float("nan"), worker_id=None):
        super().__init__(message)
        self.gap = gap
        self.worker_id = worker_id


class InternalConsistencyError(RuntimeError):
    """The cached primal vector no longer matches the dual iterate."""


@dataclass
class DualState:
    alpha: np.ndarray
    primal_cache: np.ndarray
    epoch: int = 0
    gap: float = float("inf")


@dataclass
class SolveReport:
    epochs_run: int
    final_gap: float
    dual_objective: float
    primal_objective: float
    converged: bool
    gap_history: list = field(default_factory=list)


def dual_to_primal(design, alpha, lam) -> np.ndarray:
    """b(a) = -(1/(lam n)) X' a."""
    n = design.shape[0]
    return -(design.T @ alpha) / (lam * n)


def _check_inputs(design, labels, family, lam):
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    X = np.ascontiguousarray(design, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"design shape {X.shape} does not match {y.shape[0]} labels")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("design and labels must be finite")
    if family.classification and not np.all(np.abs(y) == 1.0):
        raise ValueError(f"{family.kind} loss needs labels in {{-1, +1}}")
    return X, y


def _objectives(X, y, family, lam, alpha, beta):
    """(primal, dual) with the dual in maximisation form, so primal >= dual."""
    reg = 0.5 * lam * float(beta @ beta)
    primal = float(np.mean(loss_values(family, X @ beta, y))) + reg
    dual = -float(np.mean(conjugate_values(family, alpha, y))) - reg
    return primal, dual


def _coherence_error(X, alpha, cache, lam, exact=None, x_norm=None) -> Optional[str]:
    n = X.shape[0]
    if exact is None:
        exact = dual_to_primal(X, alpha, lam)
    if x_norm is None:
        x_norm = np.linalg.norm(X)
    # rounding in the incremental updates scales with |X|_F |alpha|, not with |b|
    scale = max(np.linalg.norm(exact), x_norm * np.linalg.norm(alpha) / (lam * n))
    err = np.linalg.norm(cache - exact)
    if err > 1e-8 * scale:
        return f"primal cache drifted by {err:.3e} (scale {scale:.3e})"
    return None


def duality_gap(design, labels, family, lam, state: DualState) -> float:
    """P(b(a)) - D(a) for the state's dual iterate; raises on an incoherent cache."""
    family = family if isinstance(family, LossFamily) else LossFamily(family)
    X, y = _check_inputs(design, labels, family, lam)
    msg = _coherence_error(X, state.alpha, state.primal_cache, lam)
    if msg:
        raise InternalConsistencyError(msg)
    primal, dual = _objectives(X, y, family, lam, state.alpha, state.primal_cache)
    return primal - dual


_CHUNK = 64  # epochs handed to the kernel per call


def local_dual_solve(design, labels, family, lam, tolerance=1e-8, max_epochs=1000, seed=0,
                     init_alpha=None):
    """Randomized-permutation SDCA on the dual of the ridge-penalised problem over ``design``.

    Returns ``(DualState, SolveReport)``. Stops once the duality gap is at most
    ``tolerance``; the gap is checked before the first epoch and after each one.
    Not converging is reported through ``SolveReport.converged``, not raised.
    """
    family = family if isinstance(family, LossFamily) else LossFamily(family)
    X, y = _check_inputs(design, labels, family, lam)
    n = X.shape[0]
    if init_alpha is None:
        alpha = np.zeros(n)
    else:
        alpha = np.array(init_alpha, dtype=np.float64).ravel()
        if alpha.shape != (n,):
            raise ValueError("init_alpha must have one entry per sample")
        conjugate_values(family, alpha, y)  # domain check
    beta = dual_to_primal(X, alpha, lam)
    row_norms = np.einsum("ij,ij->i", X, X)
    x_norm = float(np.sqrt(row_norms.sum()))
    rng = np.random.default_rng(seed)

    state = DualState(alpha, beta, 0)
    primal, dual = _objectives(X, y, family, lam, alpha, beta)
    history = [primal - dual]
    gaps = np.empty(_CHUNK)
    scratch = np.empty(X.shape[1])
    while history[-1] > tolerance and state.epoch < max_epochs:
        chunk = min(_CHUNK, max_epochs - state.epoch)
        orders = np.stack([rng.permutation(n) for _ in range(chunk)]).astype(np.int64)
        done, drift = _backend.sdca_run(X, y, alpha, beta, row_norms, orders, family.code,
                                        float(lam), float(family.smoothing), float(tolerance),
                                        x_norm, gaps, scratch)
        state.epoch += done
        if drift > 0:
            raise InternalConsistencyError(f"primal cache drifted by {drift:.3e} in epoch {state.epoch}")
        history.extend(gaps[:done].tolist())
    primal, dual = _objectives(X, y, family, lam, alpha, beta)

    state.gap = history[-1]
    report = SolveReport(
        epochs_run=state.epoch,
        final_gap=state.gap,
        dual_objective=dual,
        primal_objective=primal,
        converged=state.gap <= tolerance,
        gap_history=history,
    )
    return state, report


def ridge_closed_form(X, y, lam) -> np.ndarray:
    """Solve (X'X + n lam I) b = X'y, through the smaller of the p x p and n x n systems."""
    n, p = X.shape
    if p <= n:
        A = X.T @ X
        A[np.diag_indices_from(A)] += n * lam
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), X.T @ y)
    A = X @ X.T
    A[np.diag_indices_from(A)] += n * lam
    return X.T @ scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), y)


def exact_solve(data: Dataset, family, lam, tolerance=1e-8, max_epochs=1000, seed=0) -> PrimalSolution:
    """Single-machine reference solution on the full design.

    Squared loss is solved by dense Cholesky factorisation; other losses run
    :func:`local_dual_solve` on all columns to the requested gap.
    """
    family = family if isinstance(family, LossFamily) else LossFamily(family)
    X, y = _check_inputs(data.features, data.labels, family, lam)
    if family.kind == "squared":
        return PrimalSolution(ridge_closed_form(X, y, lam))
    state, report = local_dual_solve(X, y, family, lam, tolerance, max_epochs, seed)
    if not report.converged:
        raise ConvergenceError(
            f"gap {report.final_gap:.3e} above {tolerance:.1e} after {report.epochs_run} epochs",
            gap=report.final_gap,
        )
    return PrimalSolution(state.primal_cache.copy())
