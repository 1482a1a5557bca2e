"""Log-log slope fits across a delta sweep."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass
class ScalingFit:
    name: str
    slope: float
    intercept: float
    r_squared: float
    bound_constant: float
    deltas: list
    values: list

    def within(self, target: float, tol: float) -> bool:
        return abs(self.slope - target) <= tol

    def to_dict(self) -> dict:
        return asdict(self)


def fit_scaling(name: str, deltas, values, min_points: int = 4) -> ScalingFit:
    """Least-squares fit of log(value) = slope log(delta) + intercept.

    ``bound_constant`` is the largest value over the sweep.
    """
    d = np.asarray(deltas, dtype=float)
    v = np.asarray(values, dtype=float)
    if d.size < min_points:
        raise ValueError(f"{name}: need >= {min_points} sweep points, got {d.size}")
    if np.any(d <= 0) or np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise ValueError(f"{name}: log-log fit needs positive finite data, got {list(zip(d, v))}")
    x, y = np.log(d), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss if ss > 0 else 1.0
    return ScalingFit(name, float(slope), float(intercept), float(r2), float(v.max()),
                      [float(a) for a in d], [float(b) for b in v])
