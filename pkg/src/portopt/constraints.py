"""Constraint regimes and feasibility reporting.

Every regime includes the full-investment equality (weights sum to one).
The five regimes on top of it:

* ``c1`` -- gross exposure capped: sum of |w_i| <= leverage_cap (default 2)
* ``c2`` -- box bounds: |w_i| <= weight_bound (default 1) for every asset
* ``c3`` -- no additional restriction
* ``c4`` -- long only: w_i >= 0 for every asset
* ``c5`` -- market index excluded: w[market_index] = 0
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

REGIMES = ("c1", "c2", "c3", "c4", "c5")


@dataclass(frozen=True)
class ConstraintSet:
    regime: str
    market_index: int | None = None
    leverage_cap: float = 2.0
    weight_bound: float = 1.0

    def __post_init__(self):
        regime = self.regime.lower()
        object.__setattr__(self, "regime", regime)
        if regime not in REGIMES:
            raise ValidationError(f"unknown constraint regime {self.regime!r}")
        if regime == "c5":
            if self.market_index is None or self.market_index < 0:
                raise ValidationError("c5 requires a nonnegative market_index")
        if self.leverage_cap <= 0 or self.weight_bound <= 0:
            raise ValidationError("constraint parameters must be positive")

    def describe(self) -> str:
        base = "sum(w) = 1"
        extra = {
            "c1": f"sum|w_i| <= {self.leverage_cap:g}",
            "c2": f"|w_i| <= {self.weight_bound:g}",
            "c3": "unconstrained",
            "c4": "w_i >= 0",
            "c5": f"w[{self.market_index}] = 0",
        }[self.regime]
        return f"{base}; {extra}"

    def to_json_dict(self) -> dict:
        out: dict = {"regime": self.regime}
        if self.regime == "c1":
            out["leverage_cap"] = self.leverage_cap
        elif self.regime == "c2":
            out["weight_bound"] = self.weight_bound
        elif self.regime == "c5":
            out["market_index"] = self.market_index
        return out


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple[tuple[str, float], ...]


def check_feasible(weights, c: ConstraintSet, tol: float = 1e-7) -> FeasibilityReport:
    """List every constraint of ``c`` violated by more than ``tol``."""
    w = np.asarray(weights, dtype=float)
    violations: list[tuple[str, float]] = []

    gap = abs(float(w.sum()) - 1.0)
    if gap > tol:
        violations.append(("full_investment", gap))

    if c.regime == "c1":
        excess = float(np.abs(w).sum()) - c.leverage_cap
        if excess > tol:
            violations.append(("leverage_cap", excess))
    elif c.regime == "c2":
        for i, wi in enumerate(w):
            excess = abs(wi) - c.weight_bound
            if excess > tol:
                violations.append((f"weight_bound[{i}]", excess))
    elif c.regime == "c4":
        for i, wi in enumerate(w):
            if -wi > tol:
                violations.append((f"long_only[{i}]", float(-wi)))
    elif c.regime == "c5":
        leak = abs(float(w[c.market_index]))
        if leak > tol:
            violations.append(("market_excluded", leak))

    return FeasibilityReport(feasible=not violations, violations=tuple(violations))
