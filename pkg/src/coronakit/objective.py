"""Loss assembly: least-squares coefficient fitting, accuracy loss, and the
monotonicity penalty over an extended sampling domain."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import exprgraph
from .data import Dataset
from .errors import DegenerateTargetError, RejectedCandidateError

INF = float("inf")

#: default monotonicity grid size
DEFAULT_GRID = 20

#: default extended domain relative to the observed range
DOMAIN_BELOW = 0.8
DOMAIN_ABOVE = 1.5


@dataclass
class MonotonicitySpec:
    """Prescribed trend of the target along one variable.

    sign +1 demands a nondecreasing response, -1 nonincreasing, checked on
    ``grid`` uniform samples of ``domain`` with every other variable held
    at its nominal value.
    """

    variable: str
    sign: int
    domain: tuple[float, float]
    grid: int = DEFAULT_GRID
    nominal: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError(f"domain must satisfy lo < hi, got {self.domain}")
        if self.grid < 2:
            raise ValueError("grid must be at least 2")


def default_monotonicity_spec(data: Dataset, variable: str, sign: int,
                              domain: tuple[float, float] | None = None,
                              grid: int = DEFAULT_GRID) -> MonotonicitySpec:
    """Spec with dataset-derived defaults: extended domain 0.8*min..1.5*max
    clipped to positive values, nominals at the per-variable medians."""
    col = data.columns[variable]
    if domain is None:
        lo = DOMAIN_BELOW * float(col.min())
        hi = DOMAIN_ABOVE * float(col.max())
        if lo <= 0:
            lo = min(abs(hi) * 1e-6, 1e-6) if hi > 0 else 1e-6
        domain = (lo, hi)
    nominal = {name: float(np.median(data.columns[name]))
               for name in data.variables if name != variable}
    return MonotonicitySpec(variable=variable, sign=sign, domain=domain,
                            grid=grid, nominal=nominal)


@dataclass
class LossBreakdown:
    l_acc: float
    l_mono: float
    total: float
    r2: float

    @classmethod
    def rejected(cls) -> "LossBreakdown":
        return cls(l_acc=INF, l_mono=INF, total=INF, r2=-INF)


def r_squared(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Coefficient of determination, 1 - SS_res/SS_tot about the mean."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateTargetError("all target values are equal")
    ss_res = float(np.sum((y - y_hat) ** 2))
    return 1.0 - ss_res / ss_tot


def fit_coefficients(graph: exprgraph.ExprGraph,
                     data: Dataset) -> tuple[exprgraph.ExprGraph, float]:
    """Replace outer coefficients by the least-squares minimizer.

    Rank-deficient designs take the minimum-norm solution.  Raises
    RejectedCandidateError when any row has a non-finite term value and
    DegenerateTargetError when SS_tot is zero.
    """
    matrix, row_ok = exprgraph.term_values(graph, data)
    if not row_ok.all():
        raise RejectedCandidateError(
            f"{int((~row_ok).sum())} rows with non-finite term values")
    y = data.y
    coefs, _, _, _ = np.linalg.lstsq(matrix, y, rcond=None)
    fitted = exprgraph.with_coefficients(graph, coefs)
    return fitted, r_squared(y, matrix @ coefs)


def accuracy_loss(graph: exprgraph.ExprGraph, data: Dataset) -> float:
    """1 - R^2 after fitting; exceeds 1 when worse than the mean predictor."""
    _, r2 = fit_coefficients(graph, data)
    return 1.0 - r2


def monotonicity_loss(graph: exprgraph.ExprGraph,
                      specs: list[MonotonicitySpec]) -> float:
    """Squared-hinge penalty on trend violations, summed over specs.

    Each spec sweeps its variable over a uniform grid with the remaining
    variables pinned at nominals; every step against the prescribed sign
    contributes max(0, -sign*step)^2.  A non-finite sweep value makes the
    candidate unusable and returns +inf.
    """
    total = 0.0
    for spec in specs:
        lo, hi = spec.domain
        pts = np.linspace(lo, hi, spec.grid)
        env = {spec.variable: pts}
        for name, value in spec.nominal.items():
            env[name] = np.full(spec.grid, float(value))
        values, finite = exprgraph.evaluate_batch(graph, env)
        if not finite.all():
            return INF
        steps = np.diff(values)
        violation = np.maximum(0.0, -spec.sign * steps)
        total += float(np.sum(violation ** 2))
    return total


def total_loss(graph: exprgraph.ExprGraph, data: Dataset,
               specs: list[MonotonicitySpec],
               lambda_mono: float) -> LossBreakdown:
    """Combined loss l_acc + lambda * l_mono for a fitted candidate."""
    _, breakdown = score_candidate(graph, data, specs, lambda_mono)
    return breakdown


def score_candidate(graph: exprgraph.ExprGraph, data: Dataset,
                    specs: list[MonotonicitySpec],
                    lambda_mono: float) -> tuple[exprgraph.ExprGraph, LossBreakdown]:
    """Fit then score; rejected candidates come back with +inf everywhere."""
    if lambda_mono <= 0:
        raise ValueError("lambda_mono must be positive")
    try:
        fitted, r2 = fit_coefficients(graph, data)
    except RejectedCandidateError:
        return graph, LossBreakdown.rejected()
    l_acc = 1.0 - r2
    l_mono = monotonicity_loss(fitted, specs)
    if math.isinf(l_mono):
        return fitted, LossBreakdown(l_acc=l_acc, l_mono=INF, total=INF, r2=r2)
    return fitted, LossBreakdown(l_acc=l_acc, l_mono=l_mono,
                                 total=l_acc + lambda_mono * l_mono, r2=r2)
