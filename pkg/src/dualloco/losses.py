"""Losses, their Fenchel conjugates and exact single-coordinate dual updates.

Conventions used throughout the package:

* primal   P(b) = (1/n) sum_i f_i(x_i . b) + (lam/2) |b|^2
* dual     G(a) = (1/n) sum_i f_i*(a_i) + (1/(2 lam n^2)) a' X X' a   (minimised)
* mapping  b(a) = -(1/(lam n)) X' a

Classification conjugates are written in terms of ``b = -y a``, which must lie
in [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

LOSS_KINDS = ("squared", "logistic", "smoothed_hinge", "hinge")
LOSS_CODES = {kind: code for code, kind in enumerate(LOSS_KINDS)}

# slack on the conjugate domain boundary to absorb rounding in iterates
DOMAIN_TOL = 1e-9
NEWTON_TOL = 1e-12


class DualDomainError(ValueError):
    """A dual variable lies outside the effective domain of the conjugate."""


@dataclass(frozen=True)
class LossFamily:
    kind: str = "squared"
    smoothing: float = 1.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.kind!r}; expected one of {LOSS_KINDS}")
        if self.kind == "smoothed_hinge" and not self.smoothing > 0:
            raise ValueError("smoothed hinge needs a positive smoothing parameter")

    @property
    def code(self) -> int:
        return LOSS_CODES[self.kind]

    @property
    def smooth(self) -> bool:
        """False for the plain hinge, whose error guarantees do not formally apply."""
        return self.kind != "hinge"

    @property
    def classification(self) -> bool:
        return self.kind != "squared"


def _as_family(family) -> LossFamily:
    return family if isinstance(family, LossFamily) else LossFamily(family)


def loss_values(family, u, y) -> np.ndarray:
    """Vectorised f(u; y)."""
    family = _as_family(family)
    u = np.asarray(u, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if family.kind == "squared":
        return 0.5 * (y - u) ** 2
    z = y * u
    if family.kind == "logistic":
        return np.logaddexp(0.0, -z)
    if family.kind == "hinge":
        return np.maximum(0.0, 1.0 - z)
    g = family.smoothing
    return np.where(z >= 1.0, 0.0, np.where(z <= 1.0 - g, 1.0 - z - 0.5 * g, (1.0 - z) ** 2 / (2 * g)))


def loss_value(family, u: float, y: float) -> float:
    return float(loss_values(family, u, y))


def conjugate_values(family, a, y) -> np.ndarray:
    """Vectorised f*(a; y); raises DualDomainError outside the effective domain."""
    family = _as_family(family)
    a = np.asarray(a, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if family.kind == "squared":
        return 0.5 * a**2 + a * y
    b = -y * a
    if np.any(b < -DOMAIN_TOL) or np.any(b > 1.0 + DOMAIN_TOL):
        raise DualDomainError(f"-y*a must lie in [0, 1] for the {family.kind} conjugate")
    b = np.clip(b, 0.0, 1.0)
    if family.kind == "logistic":
        return xlogy(b, b) + xlogy(1.0 - b, 1.0 - b)
    if family.kind == "hinge":
        return -b
    return -b + 0.5 * family.smoothing * b**2


def conjugate_value(family, a: float, y: float) -> float:
    return float(conjugate_values(family, a, y))


def coordinate_update(family, a_i: float, y_i: float, margin: float, row_norm_sq: float,
                      n: int, lam: float) -> float:
    """Exact minimiser of the dual objective along coordinate i.

    ``margin`` is x_i . b(a) at the current iterate. Along the coordinate the
    objective (times n) is ``f*(a_i + d) - d * margin + d^2 q / (2 lam n)`` with
    ``q = row_norm_sq``.
    """
    family = _as_family(family)
    vals = (a_i, y_i, margin, row_norm_sq, lam)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("coordinate_update needs finite inputs")
    if row_norm_sq < 0 or lam <= 0 or n < 1:
        raise ValueError("row_norm_sq must be >= 0, lam > 0 and n >= 1")
    s = row_norm_sq / (lam * n)
    if family.kind == "squared":
        return a_i + (margin - y_i - a_i) / (1.0 + s)

    b_old = -y_i * a_i
    if b_old < -DOMAIN_TOL or b_old > 1.0 + DOMAIN_TOL:
        raise DualDomainError(f"dual coordinate {a_i} outside the {family.kind} domain")
    b_old = min(max(b_old, 0.0), 1.0)
    ym = y_i * margin

    if family.kind == "hinge":
        if s == 0.0:
            if ym < 1.0:
                b = 1.0
            elif ym > 1.0:
                b = 0.0
            else:
                b = b_old
        else:
            b = min(max(b_old + (1.0 - ym) / s, 0.0), 1.0)
    elif family.kind == "smoothed_hinge":
        g = family.smoothing
        b = min(max(b_old + (1.0 - ym - g * b_old) / (g + s), 0.0), 1.0)
    else:
        b = _logistic_coordinate(b_old, ym, s)
    return -y_i * b


def _logistic_coordinate(b_old: float, ym: float, s: float) -> float:
    """Solve log(b/(1-b)) + ym + s (b - b_old) = 0 for b in (0, 1).

    Works on t = logit(b), where the equation is monotone with slope in
    [1, 1 + s/4]; the root is bracketed by [-ym - s, -ym + s].
    """
    lo, hi = -ym - s, -ym + s
    t = -ym + s * b_old - 0.5 * s
    prev_step = hi - lo
    for _ in range(100):
        sig = _sigmoid(t)
        g = t + ym + s * (sig - b_old)
        if g > 0:
            hi = t
        elif g < 0:
            lo = t
        else:
            break
        step = g / (1.0 + s * sig * (1.0 - sig))
        # bisect when Newton leaves the bracket or stops halving its step
        if not lo <= t - step <= hi or abs(step) > 0.5 * abs(prev_step):
            step = t - 0.5 * (lo + hi)
        prev_step = step
        t -= step
        if abs(step) <= NEWTON_TOL * max(1.0, abs(t)):
            break
    return _sigmoid(t)


def _sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def primal_objective(family, margins, labels, beta, lam) -> float:
    return float(np.mean(loss_values(family, margins, labels)) + 0.5 * lam * np.dot(beta, beta))


def dual_objective(family, alpha, labels, beta, lam) -> float:
    """Minimisation-form dual G(a), using b = b(a) for the quadratic term."""
    return float(np.mean(conjugate_values(family, alpha, labels)) + 0.5 * lam * np.dot(beta, beta))
