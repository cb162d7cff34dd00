"""Mean-square deviation bounds and high-probability radii.

The stochastic trajectory stays within a weighted-norm distance of its
deterministic twin: the mean-square distance is bounded by
d_P/(2 c_P) (e^{2 c_P t} - 1), and dividing by the probability level and
taking a square root (Markov's inequality) yields the radius that holds
with probability at least 1 - delta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

# Below this value of |c_P| * t the exponential expression is evaluated by
# its Taylor series; the formula is 0/0 at c_P = 0 with limit d_P * t.
_TAYLOR_THRESHOLD = 1e-4


def expectation_bound(c_P: float, d_P: float, t: float) -> float:
    """Upper bound on E ||X_t - x_t||^2 in the certificate norm.

    Zero at t = 0, nondecreasing in t, and bounded by d_P / (2|c_P|) for
    contracting systems (c_P < 0).
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if d_P < 0:
        raise ValueError(f"d_P must be nonnegative, got {d_P}")
    if not (math.isfinite(c_P) and math.isfinite(t)):
        raise ValueError("c_P and t must be finite")
    x = c_P * t
    if abs(x) < _TAYLOR_THRESHOLD:
        # (e^{2ct} - 1)/(2c) = t + c t^2 + (2/3) c^2 t^3 + O(c^3 t^4)
        growth = t + c_P * t * t + (2.0 / 3.0) * c_P * c_P * t * t * t
    else:
        growth = math.expm1(2.0 * c_P * t) / (2.0 * c_P)
    return d_P * growth


def radius(c_P: float, d_P: float, t: float, delta: float) -> float:
    """Deviation radius holding with probability at least 1 - delta.

    sqrt(expectation_bound / delta); delta = 0 is rejected since the
    Markov bound diverges there.
    """
    if not (0.0 < delta <= 1.0):
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    return math.sqrt(expectation_bound(c_P, d_P, t) / delta)


@dataclass(frozen=True)
class DeviationBound:
    """A certificate paired with a probability level."""

    c_P: float
    d_P: float
    delta: float

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ValueError(f"delta must be in (0, 1], got {self.delta}")
        if self.d_P < 0:
            raise ValueError(f"d_P must be nonnegative, got {self.d_P}")

    def expectation(self, t: float) -> float:
        return expectation_bound(self.c_P, self.d_P, t)

    def radius(self, t: float) -> float:
        return radius(self.c_P, self.d_P, t, self.delta)
