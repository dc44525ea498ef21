"""Legendre polynomials, Wigner small-d elements and the Bessel function J0."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._accel import njit, select


class DomainError(ValueError):
    """Argument outside the mathematical domain of a special function."""


@dataclass(frozen=True)
class HalfInteger:
    """An integer or half-odd-integer stored exactly as twice its value."""

    twice_value: int

    def __post_init__(self):
        if int(self.twice_value) != self.twice_value:
            raise DomainError(f"twice_value must be an integer, got {self.twice_value!r}")
        object.__setattr__(self, "twice_value", int(self.twice_value))

    @classmethod
    def coerce(cls, value) -> "HalfInteger":
        if isinstance(value, cls):
            return value
        if isinstance(value, float):
            if not (2.0 * value).is_integer():
                raise DomainError(f"{value!r} is not a multiple of 1/2")
            return cls(int(2.0 * value))
        twice = Fraction(value) * 2
        if twice.denominator != 1:
            raise DomainError(f"{value!r} is not a multiple of 1/2")
        return cls(int(twice))

    @property
    def value(self) -> float:
        return self.twice_value / 2

    def __float__(self):
        return self.value


# -- Legendre -----------------------------------------------------------------


@njit
def _legendre_numba(r, x):
    m = x.shape[0]
    if r == 0:
        return np.ones(m)
    # degree outer, points inner: the inner loop vectorizes
    p_prev = np.ones(m)
    p = x.copy()
    for k in range(1, r):
        a = 2 * k + 1
        b = k + 1
        for i in range(m):
            p_next = (a * x[i] * p[i] - k * p_prev[i]) / b
            p_prev[i] = p[i]
            p[i] = p_next
    return p


def _legendre_numpy(r, x):
    if r == 0:
        return np.ones_like(x)
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(1, r):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p


_legendre_kernel = select(_legendre_numba, _legendre_numpy)


def legendre_p(r: int, x):
    """Legendre polynomial ``P_r(x)`` by the three-term recurrence.

    Accepts a scalar or an array ``x`` with every entry in [-1, 1].
    """
    r = int(r)
    if r < 0:
        raise DomainError(f"degree must be non-negative, got {r}")
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0) or np.any(np.isnan(xa)):
        raise DomainError("legendre_p requires |x| <= 1")
    out = _legendre_kernel(r, np.ascontiguousarray(xa.ravel()))
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)


# -- Wigner small-d -------------------------------------------------------------
#
# Recursion in j by coupling spin j - 1/2 with spin 1/2:
#   |j m> = a_m |j-1/2, m-1/2>|up> + b_m |j-1/2, m+1/2>|down>,
#   a_m = sqrt((j+m)/2j), b_m = sqrt((j-m)/2j).
# Every step is a convex-style combination of bounded entries, so it stays
# accurate for large j where the factorial sum cancels catastrophically.
# Matrix index a = m + j, rows m1 and columns m2 both ascending from -j.


@njit
def _wigner_matrix_numba(twice_j, theta):
    c = math.cos(0.5 * theta)
    s = math.sin(0.5 * theta)
    d = np.ones((1, 1))
    for tj in range(1, twice_j + 1):
        size = tj + 1
        new = np.zeros((size, size))
        for a in range(size):
            ca = math.sqrt(a / tj)
            cb = math.sqrt((tj - a) / tj)
            for b in range(size):
                da = math.sqrt(b / tj)
                db = math.sqrt((tj - b) / tj)
                acc = 0.0
                if a > 0 and b > 0:
                    acc += ca * da * c * d[a - 1, b - 1]
                if a > 0 and b < tj:
                    acc -= ca * db * s * d[a - 1, b]
                if a < tj and b > 0:
                    acc += cb * da * s * d[a, b - 1]
                if a < tj and b < tj:
                    acc += cb * db * c * d[a, b]
                new[a, b] = acc
        d = new
    return d


def _wigner_matrix_numpy(twice_j, theta):
    c = math.cos(0.5 * theta)
    s = math.sin(0.5 * theta)
    d = np.ones((1, 1))
    for tj in range(1, twice_j + 1):
        idx = np.arange(tj + 1)
        up = np.sqrt(idx / tj)
        down = np.sqrt((tj - idx) / tj)
        padded = np.zeros((tj + 2, tj + 2))
        padded[1:-1, 1:-1] = d
        # padded[a, b] holds d[a-1, b-1]
        new = (
            np.outer(up, up) * c * padded[:-1, :-1]
            - np.outer(up, down) * s * padded[:-1, 1:]
            + np.outer(down, up) * s * padded[1:, :-1]
            + np.outer(down, down) * c * padded[1:, 1:]
        )
        d = new
    return d


_wigner_kernel = select(_wigner_matrix_numba, _wigner_matrix_numpy)


def wigner_d_matrix(j, theta: float) -> np.ndarray:
    """Full rotation matrix ``d^j(theta)`` with rows/columns ordered m = -j..j."""
    j = HalfInteger.coerce(j)
    if j.twice_value < 0:
        raise DomainError("j must be non-negative")
    if not 0.0 <= theta <= math.pi:
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    return _wigner_kernel(j.twice_value, float(theta))


def wigner_small_d(j, m1, m2, theta: float) -> float:
    """Real matrix element ``d^j_{m1, m2}(theta)`` of a rotation about y."""
    j, m1, m2 = (HalfInteger.coerce(v) for v in (j, m1, m2))
    tj = j.twice_value
    for m in (m1, m2):
        if abs(m.twice_value) > tj or (tj - m.twice_value) % 2:
            raise DomainError(f"invalid projection {m.value} for j = {j.value}")
    d = wigner_d_matrix(j, theta)
    return float(d[(m1.twice_value + tj) // 2, (m2.twice_value + tj) // 2])


# -- Bessel J0 ------------------------------------------------------------------

SERIES_CUTOFF = 8.0


def _j0_series(x):
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= -q / (k * k)
        total += term
        if abs(term) < 1e-17 * max(1.0, abs(total)) and k > q:
            return total


def _j0_integral(x):
    # J0(x) = (1/2pi) * integral over a full period of cos(x sin t); the
    # trapezoid rule converges geometrically once the point count clears the
    # Bessel turning region x + O(x^(1/3)).
    m = 2 * (int(0.5 * x + 10.0 * x ** (1.0 / 3.0)) + 32)
    t = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
    return float(np.mean(np.cos(x * np.sin(t))))


def bessel_j0(x):
    """Bessel function of the first kind of order zero, for ``x >= 0``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError("bessel_j0 requires x >= 0")
    flat = xa.ravel()
    out = np.array([
        _j0_series(v) if v < SERIES_CUTOFF else _j0_integral(v) for v in flat
    ])
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)
