"""Error measures reported by the CLI and the experiments."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class UndefinedMetricError(ValueError):
    pass


def normalized_mse(predictions, truth) -> float:
    """Fraction of variance unexplained: |yhat - y|^2 / |y - mean(y)|^2."""
    yhat = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(truth, dtype=np.float64).ravel()
    if yhat.shape != y.shape:
        raise ValueError("predictions and truth differ in length")
    if y.size < 2:
        raise UndefinedMetricError("need at least two observations")
    denom = float(np.sum((y - y.mean()) ** 2))
    if denom == 0:
        raise UndefinedMetricError("truth has zero variance")
    return float(np.sum((yhat - y) ** 2)) / denom


def normalized_param_mse(beta_hat, beta_star) -> float:
    """|beta_hat - beta*|^2 / |beta*|^2."""
    bh = np.asarray(beta_hat, dtype=np.float64).ravel()
    bs = np.asarray(beta_star, dtype=np.float64).ravel()
    if bh.shape != bs.shape:
        raise ValueError("coefficient vectors differ in length")
    denom = float(bs @ bs)
    if denom == 0:
        raise UndefinedMetricError("reference coefficients are zero")
    return float(np.sum((bh - bs) ** 2)) / denom


@dataclass
class MetricsRecord:
    train_mse_normalized: float
    test_mse_normalized: Optional[float] = None
    param_mse_normalized: Optional[float] = None
    wall_time_seconds: dict = field(default_factory=dict)
    bytes_communicated: int = 0

    def as_dict(self) -> dict:
        out = {
            "train_mse_normalized": self.train_mse_normalized,
            "test_mse_normalized": self.test_mse_normalized,
            "param_mse_normalized": self.param_mse_normalized,
            "bytes_communicated": self.bytes_communicated,
        }
        for phase, seconds in self.wall_time_seconds.items():
            out[f"time_{phase}"] = seconds
        return {k: v for k, v in out.items() if v is not None}
