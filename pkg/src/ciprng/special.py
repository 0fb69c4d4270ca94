"""Special functions behind the p-value computations."""

from __future__ import annotations

import math

from scipy import special as _sp


def erfc(x: float) -> float:
    return math.erfc(x)


def igamc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if not a > 0:
        raise ValueError(f"igamc needs a > 0, got {a}")
    if not x >= 0:
        raise ValueError(f"igamc needs x >= 0, got {x}")
    return float(_sp.gammaincc(a, x))


def igam(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if not a > 0:
        raise ValueError(f"igam needs a > 0, got {a}")
    if not x >= 0:
        raise ValueError(f"igam needs x >= 0, got {x}")
    return float(_sp.gammainc(a, x))


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))
