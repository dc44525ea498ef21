"""Independent reference computations used to freeze expected values.

Nothing here imports the code paths under test except for plain data types.
"""
import itertools
import math
from fractions import Fraction

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.special import eval_legendre


def legendre_closed_form(r, x):
    forms = {
        0: lambda x: 1.0,
        1: lambda x: x,
        2: lambda x: 0.5 * (3 * x**2 - 1),
        3: lambda x: 0.5 * (5 * x**3 - 3 * x),
        4: lambda x: (35 * x**4 - 30 * x**2 + 3) / 8,
        5: lambda x: (63 * x**5 - 70 * x**3 + 15 * x) / 8,
    }
    return forms[r](x)


def legendre_at_zero(r):
    """Exact P_r(0) from the double-factorial closed form."""
    if r % 2:
        return Fraction(0)
    k = r // 2
    num = math.prod(range(1, 2 * k, 2))
    den = math.prod(range(2, 2 * k + 1, 2))
    return Fraction((-1) ** k * num, den)


def wigner_d_factorial_sum(j, m1, m2, theta):
    """Direct sum formula with factorials in log space (for cross-validation)."""
    j, m1, m2 = Fraction(j), Fraction(m1), Fraction(m2)
    c = math.cos(theta / 2)
    s = math.sin(theta / 2)
    lf = lambda v: math.lgamma(float(v) + 1)
    pref = 0.5 * (lf(j + m1) + lf(j - m1) + lf(j + m2) + lf(j - m2))
    total = 0.0
    k_min = int(max(0, m2 - m1))
    k_max = int(min(j + m2, j - m1))
    for k in range(k_min, k_max + 1):
        pc = int(2 * j + m2 - m1 - 2 * k)
        ps = int(m1 - m2 + 2 * k)
        if (c == 0 and pc > 0) or (s == 0 and ps > 0):
            continue
        log_mag = pref - (lf(j + m2 - k) + lf(k) + lf(m1 - m2 + k) + lf(j - m1 - k))
        if pc:
            log_mag += pc * math.log(abs(c))
        if ps:
            log_mag += ps * math.log(abs(s))
        sign = (-1) ** int(m1 - m2 + k)
        if c < 0 and pc % 2:
            sign = -sign
        total += sign * math.exp(log_mag)
    return total


def j0_series(x):
    """Power series of J0 summed in exact rationals then rounded."""
    q = Fraction(x) ** 2 / 4
    term = Fraction(1)
    total = Fraction(1)
    for k in range(1, 80):
        term *= -q / (k * k)
        total += term
    return float(total)


def bisect(f, lo, hi, tol=1e-13):
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def standard_score_closed_form(n_particles):
    return Fraction(n_particles + 1, n_particles + 2)


def coherent_score_gl(r, n):
    """Axis-game score by a single Gauss-Legendre rule in x = cos(theta) on
    [0, 1], exact for the polynomial integrands P_r(x)^(2n) and x P_r(x)^(2n)."""
    order = r * n + 2
    x, w = npleg.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    p = eval_legendre(r, x) ** (2 * n)
    return 0.5 + 0.5 * np.sum(w * x * p) / np.sum(w * p)


def coherent_score_exact(r, n):
    """Exact rational axis-game score from integer Legendre coefficients."""
    # P_r(x) = 2^-r sum_k (-1)^k C(r,k) C(2r-2k, r) x^(r-2k)
    coeffs = [Fraction(0)] * (r + 1)
    for k in range(r // 2 + 1):
        coeffs[r - 2 * k] = Fraction((-1) ** k * math.comb(r, k) * math.comb(2 * r - 2 * k, r), 2**r)
    poly = [Fraction(1)]
    for _ in range(2 * n):
        out = [Fraction(0)] * (len(poly) + r)
        for i, a in enumerate(poly):
            if a:
                for j, b in enumerate(coeffs):
                    if b:
                        out[i + j] += a * b
        poly = out
    mass = sum(a / (i + 1) for i, a in enumerate(poly))
    first = sum(a / (i + 2) for i, a in enumerate(poly))
    return Fraction(1, 2) + Fraction(1, 2) * first / mass


PLATEAU_SCORE = 0.5 + 1.0 / math.pi
"""Large-r limit of the single-shot score: with P_r^2 ~ 2/(pi r sin(theta))
times a rapidly oscillating cos^2, the averaged density is proportional to
1/sin(theta), so <cos theta> under the sin(theta) measure is the mean of cos
over [0, pi/2], 2/pi."""


def sphere_product_rule(n_z=64, n_phi=128):
    """Gauss-Legendre in z times trapezoid in phi, weights summing to 1."""
    z, wz = npleg.leggauss(n_z)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    s = np.sqrt(1 - z**2)
    dirs = np.stack([
        np.outer(s, np.cos(phi)).ravel(),
        np.outer(s, np.sin(phi)).ravel(),
        np.repeat(z, n_phi),
    ], axis=1)
    w = np.repeat(wz / 2, n_phi) / n_phi
    return dirs, w


def xyz_score_enumeration(n_particles):
    """Exact score of the x/y/z strategy by enumerating every count triple.

    Averages over the uniform true-state prior with a product quadrature that
    is exact for the polynomial integrand (degree n_particles + 1).
    """
    per = n_particles // 3
    dirs, w = sphere_product_rule(n_z=max(8, n_particles), n_phi=max(16, 2 * n_particles + 4))
    total = np.zeros(dirs.shape[0])
    for counts in itertools.product(range(per + 1), repeat=3):
        k = np.array(counts, dtype=float)
        v = 2 * k / per - 1
        norm = np.linalg.norm(v)
        prob = np.ones(dirs.shape[0])
        for axis in range(3):
            p_up = 0.5 * (1 + dirs[:, axis])
            prob *= math.comb(per, counts[axis]) * p_up ** counts[axis] * (1 - p_up) ** (per - counts[axis])
        if norm == 0:
            fid = 0.5 * np.ones(dirs.shape[0])
        else:
            fid = 0.5 * (1 + dirs @ (v / norm))
        total += prob * fid
    return float(np.sum(w * total))


def single_projection_score():
    """Average fidelity when one particle is projected on a random axis and the
    signed axis is reported: integral of (1 + c^2)/2 over c uniform on [-1, 1]."""
    return Fraction(2, 3)
