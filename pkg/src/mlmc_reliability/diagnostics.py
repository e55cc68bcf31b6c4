"""Convergence-rate fits and the MC/MLMC speedup curve.

The rates are slopes of ordinary least-squares lines through the level
diagnostics for ``l >= 1``:

* ``log2 |mean Y_l| = a - alpha * l``
* ``log2 var Y_l = b - beta * l``
* ``log2 cost_l = c + gamma * l``
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .estimators import LevelStats

__all__ = ["RateReport", "fit_rates", "level_costs", "speedup", "speedup_curve", "eps_level"]

log = logging.getLogger(__name__)

COST_KINDS = ("weights", "n_cuts", "ops", "seconds")


@dataclass
class RateReport:
    alpha: float
    beta: float
    gamma: float
    cost_kind: str
    levels: list[int]
    log_mean: list[float]
    log_var: list[float]
    log_cost: list[float]
    residuals: dict = field(default_factory=dict)
    excluded: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def clean(xs):
            return [x if math.isfinite(x) else None for x in xs]

        return {
            "alpha": _finite(self.alpha),
            "beta": _finite(self.beta),
            "gamma": _finite(self.gamma),
            "cost_kind": self.cost_kind,
            "levels": self.levels,
            "log2_abs_mean": clean(self.log_mean),
            "log2_var": clean(self.log_var),
            "log2_cost": clean(self.log_cost),
            "residuals": {k: clean(v) for k, v in self.residuals.items()},
            "excluded": self.excluded,
        }


def _finite(x: float):
    return x if math.isfinite(x) else None


def _ols_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, list[float]]:
    if x.size < 2:
        return math.nan, []
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[1]), (y - A @ coef).tolist()


def level_costs(levels: Sequence[LevelStats], kind: str = "weights") -> np.ndarray:
    """Per-sample cost of each level.

    ``weights`` is the nominal ``2**l``, ``n_cuts`` the actual ``#C_l``, and
    ``ops``/``seconds`` the measured mean cost per sample.
    """
    if kind == "weights":
        return np.array([2.0**s.level for s in levels])
    if kind == "n_cuts":
        return np.array([float(s.n_cuts) for s in levels])
    if kind == "ops":
        return np.array([s.kappa_ops for s in levels])
    if kind == "seconds":
        return np.array([s.kappa_seconds for s in levels])
    raise ValueError(f"cost kind must be one of {COST_KINDS}, got {kind!r}")


def fit_rates(levels: Sequence[LevelStats], cost: str = "weights") -> RateReport:
    """Fit ``alpha``, ``beta`` and ``gamma`` over levels ``l >= 1``.

    Levels with a zero mean (or zero variance) cannot enter the log-linear
    fit and are left out of that fit; the exclusions are reported.
    """
    if len(levels) < 3:
        raise ValueError("need at least 3 levels to fit rates")
    if any(s.N < 2 for s in levels):
        raise ValueError("every level needs N >= 2")
    upper = [s for s in levels if s.level >= 1]
    ell = np.array([s.level for s in upper], dtype=float)
    means = np.array([abs(s.mean) for s in upper])
    var = np.array([s.var for s in upper])
    costs = level_costs(upper, cost)
    with np.errstate(divide="ignore"):
        lm, lv, lc = np.log2(means), np.log2(var), np.log2(costs)
    excluded = {}
    fits = {}
    for name, y in (("alpha", lm), ("beta", lv), ("gamma", lc)):
        ok = np.isfinite(y)
        if not ok.all():
            excluded[name] = [int(l) for l in ell[~ok]]
            log.info("%s fit excludes levels %s (zero or undefined values)", name, excluded[name])
        fits[name] = _ols_slope(ell[ok], y[ok])
    return RateReport(
        alpha=-fits["alpha"][0],
        beta=-fits["beta"][0],
        gamma=fits["gamma"][0],
        cost_kind=cost,
        levels=[int(l) for l in ell],
        log_mean=lm.tolist(),
        log_var=lv.tolist(),
        log_cost=lc.tolist(),
        residuals={k: v[1] for k, v in fits.items()},
        excluded=excluded,
    )


def speedup(mc_var: float, kappa_top: float, var: Sequence[float], kappa: Sequence[float]) -> float:
    """``mc_var * kappa_top / (sum_l sqrt(V_l kappa_l))**2`` over the given levels."""
    s = float(np.sum(np.sqrt(np.maximum(np.asarray(var, float), 0.0) * np.asarray(kappa, float))))
    return math.inf if s == 0 else mc_var * kappa_top / (s * s)


def eps_level(levels: Sequence[LevelStats], eps: float) -> int:
    """Earliest level ``l >= 1`` with ``|mean Y_l| < eps``; the top level if none."""
    for s in levels[1:]:
        if abs(s.mean) < eps:
            return s.level
    return levels[-1].level


def speedup_curve(
    mc_var: float,
    levels: Sequence[LevelStats],
    eps_grid: Sequence[float],
    cost: str = "ops",
    kappa_top: Optional[float] = None,
) -> list[tuple[float, float, int]]:
    """``(eps, speedup, L_eps)`` for each ``eps``, using the levels up to ``L_eps``.

    ``kappa_top`` defaults to the cost of the last level in ``levels``, which
    is also the per-sample cost of standard Monte Carlo on the full system.
    """
    kap = level_costs(levels, cost)
    var = np.array([s.var for s in levels])
    top = float(kap[-1]) if kappa_top is None else float(kappa_top)
    out = []
    for eps in eps_grid:
        le = eps_level(levels, eps)
        k = [i for i, s in enumerate(levels) if s.level <= le]
        out.append((float(eps), speedup(mc_var, top, var[k], kap[k]), le))
    return out
