"""Gamma function via the Lanczos approximation (g = 7, nine terms)."""
from __future__ import annotations

import math

_G = 7.0
_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _gamma_pos(x: float) -> float:
    # valid for x >= 0.5
    x -= 1.0
    acc = _COEF[0]
    for k in range(1, 9):
        acc += _COEF[k] / (x + k)
    t = x + _G + 0.5
    return _SQRT_2PI * t ** (x + 0.5) * math.exp(-t) * acc


def _sinpi(x: float) -> float:
    # sin(pi x) with the argument reduced exactly near integers
    n = round(x)
    r = math.sin(math.pi * (x - n))
    return -r if n % 2 else r


def gamma(x: float) -> float:
    """Gamma(x) for real x, reflection below 1/2. Raises at the poles."""
    x = float(x)
    if x == math.floor(x) and x <= 0:
        raise ValueError(f"gamma pole at {x}")
    if x < 0.5:
        return math.pi / (_sinpi(x) * _gamma_pos(1.0 - x))
    if x > 20.0:
        # shift down to keep the power in range, then recurse upward
        n = int(x - 10.0)
        val = _gamma_pos(x - n)
        for k in range(n):
            val *= x - n + k
        return val
    return _gamma_pos(x)


def gamma_residue(n: int) -> float:
    """Residue of Gamma at the pole -n (n = 0, 1, 2, ...)."""
    return (-1) ** n / math.factorial(n)
