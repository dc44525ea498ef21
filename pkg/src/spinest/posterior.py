"""Normalized posterior densities over the polar angle and over the sphere.

Densities are per steradian.  ``PosteriorTheta`` describes an axially symmetric
density sampled on quadrature nodes in theta; ``PosteriorSphere`` a density on a
fixed lab-frame product grid.  Both keep log densities internally and
exponentiate against the running maximum when normalizing.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import kernels
from .geometry import Outcome, UnitVector
from .quadrature import sphere_grid, theta_grid
from .special import legendre_p

DIRECTED = math.pi
AXIS = 0.5 * math.pi

SPHERE_N_THETA = 256
SPHERE_N_PHI = 512


def _normalize_log(log_values, weights):
    finite = np.isfinite(log_values)
    if not np.any(finite):
        raise ValueError("posterior has no support on the grid")
    top = np.max(log_values[finite])
    with np.errstate(under="ignore"):
        mass = float(np.sum(weights * np.exp(log_values - top)))
    if not mass > 0.0:
        raise ValueError("posterior has no support on the grid")
    return top + math.log(mass)


@dataclass(frozen=True, eq=False)
class PosteriorTheta:
    """Axially symmetric density over the polar angle.

    ``weights`` already carry the ``2 pi sin(theta)`` surface measure, so the
    total mass is ``sum(weights * values)``.  ``log_kernel`` (when present) is
    the unnormalized log density as a function of theta and allows evaluation
    off the quadrature nodes.
    """

    domain_max: float
    nodes: np.ndarray
    weights: np.ndarray
    log_values: np.ndarray
    log_kernel: Optional[Callable[[np.ndarray], np.ndarray]] = None
    log_norm: float = 0.0

    @classmethod
    def from_log_kernel(cls, domain_max, log_kernel, grid):
        nodes, weights = grid
        if nodes.size and (nodes.min() < 0.0 or nodes.max() > domain_max + 1e-15):
            raise ValueError("quadrature nodes fall outside the posterior domain")
        with np.errstate(divide="ignore"):
            raw = np.asarray(log_kernel(nodes), dtype=float)
        log_norm = _normalize_log(raw, weights)
        return cls(domain_max, nodes, weights, raw - log_norm, log_kernel, log_norm)

    @classmethod
    def from_log_values(cls, domain_max, nodes, weights, log_values):
        log_values = np.asarray(log_values, dtype=float)
        log_norm = _normalize_log(log_values, weights)
        return cls(domain_max, np.asarray(nodes), np.asarray(weights), log_values - log_norm)

    @classmethod
    def uniform(cls, domain_max=DIRECTED, grid=None):
        grid = grid if grid is not None else theta_grid(domain_max)
        return cls.from_log_kernel(domain_max, np.zeros_like, grid)

    @classmethod
    def point_mass(cls, theta=0.0, domain_max=DIRECTED):
        """All probability at a single polar angle (a one-node rule)."""
        return cls(domain_max, np.array([float(theta)]), np.array([1.0]), np.array([0.0]))

    @property
    def values(self) -> np.ndarray:
        with np.errstate(under="ignore"):
            return np.exp(self.log_values)

    def mass(self) -> float:
        return float(np.sum(self.weights * self.values))

    def expectation(self, f) -> float:
        return float(np.sum(self.weights * self.values * f(self.nodes)))

    def mean_cos(self) -> float:
        return self.expectation(np.cos)

    def density(self, theta):
        """Normalized density per steradian at arbitrary angles in the domain."""
        if self.log_kernel is None:
            raise ValueError("posterior was built from node values only")
        theta = np.asarray(theta, dtype=float)
        with np.errstate(divide="ignore", under="ignore"):
            return np.exp(np.asarray(self.log_kernel(theta), dtype=float) - self.log_norm)

    def to_csv(self, path, thetas=None):
        """Write ``theta,density`` rows; defaults to the quadrature nodes."""
        if thetas is None:
            thetas, dens = self.nodes, self.values
        else:
            thetas = np.asarray(thetas, dtype=float)
            dens = self.density(thetas)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["theta", "density"])
            for t, d in zip(thetas, dens):
                writer.writerow([format(float(t), ".12g"), format(float(d), ".12g")])


class ScoreDispersionPair(NamedTuple):
    score: float
    dispersion: float


def _standard_log_kernel(n_particles):
    def log_kernel(theta):
        if n_particles == 0:
            return np.zeros_like(np.asarray(theta, dtype=float))
        with np.errstate(divide="ignore"):
            return 2.0 * n_particles * np.log(np.cos(0.5 * np.asarray(theta, dtype=float)))
    return log_kernel


def _coherent_log_kernel(r, n):
    def log_kernel(theta):
        p = legendre_p(r, np.cos(np.asarray(theta, dtype=float)))
        with np.errstate(divide="ignore"):
            return 2.0 * n * np.log(np.abs(p))
    return log_kernel


def standard_bandwidth(n_particles):
    return int(n_particles) + 1


def coherent_bandwidth(r, n):
    return 2 * int(r) * int(n) + 1


def make_standard_posterior(n_particles: int, grid=None) -> PosteriorTheta:
    """Posterior after ``n_particles`` spins all detected along the apparatus
    axis: density proportional to cos^(2N)(theta/2) over the whole sphere."""
    n_particles = int(n_particles)
    if n_particles < 0:
        raise ValueError("particle count must be non-negative")
    grid = grid if grid is not None else theta_grid(DIRECTED, standard_bandwidth(n_particles))
    return PosteriorTheta.from_log_kernel(DIRECTED, _standard_log_kernel(n_particles), grid)


def make_coherent_posterior(r: int, n: int, grid=None) -> PosteriorTheta:
    """Axis posterior after ``n`` felicitous coherent measurements on groups in
    the state |2r, 0>: density proportional to P_r(cos theta)^(2n) on
    [0, pi/2]."""
    r, n = int(r), int(n)
    if r < 1 or n < 1:
        raise ValueError("r and n must be positive")
    grid = grid if grid is not None else theta_grid(AXIS, coherent_bandwidth(r, n))
    return PosteriorTheta.from_log_kernel(AXIS, _coherent_log_kernel(r, n), grid)


def score(p: PosteriorTheta) -> float:
    """Posterior expectation of the fidelity cos^2(theta/2)."""
    s = p.expectation(lambda t: np.cos(0.5 * t) ** 2)
    return min(1.0, max(0.0, s))


def dispersion(p: PosteriorTheta) -> float:
    c = p.mean_cos()
    return math.sqrt(max(0.0, 1.0 - c * c))


def score_and_dispersion(p: PosteriorTheta) -> ScoreDispersionPair:
    return ScoreDispersionPair(score(p), dispersion(p))


def multiply(a: PosteriorTheta, b: PosteriorTheta) -> PosteriorTheta:
    """Pointwise product of two posteriors on the same grid, renormalized."""
    if a.domain_max != b.domain_max:
        raise ValueError("posteriors live on different domains")
    if a.nodes.shape != b.nodes.shape or not (
        np.array_equal(a.nodes, b.nodes) and np.array_equal(a.weights, b.weights)
    ):
        raise ValueError("posteriors use different quadrature grids")
    log_values = a.log_values + b.log_values
    log_norm = _normalize_log(log_values, a.weights)
    kernel = None
    if a.log_kernel is not None and b.log_kernel is not None:
        ka, kb = a.log_kernel, b.log_kernel

        def kernel(theta):
            return (ka(theta) - a.log_norm) + (kb(theta) - b.log_norm)

        log_norm_total = log_norm
    else:
        log_norm_total = 0.0
    return PosteriorTheta(a.domain_max, a.nodes, a.weights, log_values - log_norm, kernel,
                          log_norm_total)


# -- full-sphere posterior ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PosteriorSphere:
    """Density on a product grid (Gauss-Legendre in cos theta x uniform phi)."""

    theta: np.ndarray
    phi: np.ndarray
    cell_measure: np.ndarray
    log_density: np.ndarray

    @classmethod
    def uniform(cls, n_theta=SPHERE_N_THETA, n_phi=SPHERE_N_PHI):
        theta, phi, cell = sphere_grid(n_theta, n_phi)
        log_density = np.full((theta.shape[0], phi.shape[0]), -math.log(4.0 * math.pi))
        return cls(theta, phi, cell, log_density)

    @property
    def shape(self):
        return self.log_density.shape

    @property
    def density(self) -> np.ndarray:
        with np.errstate(under="ignore"):
            return np.exp(self.log_density)

    def directions(self):
        return kernels.grid_directions(self.theta, self.phi)

    def mass(self) -> float:
        return float(np.sum(self.density * self.cell_measure[:, None]))

    def azimuthal_average(self) -> np.ndarray:
        """Density averaged over phi at each theta row."""
        return self.density.mean(axis=1)

    def _with_log(self, log_density):
        top = np.max(log_density[np.isfinite(log_density)])
        with np.errstate(under="ignore"):
            mass = float(np.sum(np.exp(log_density - top) * self.cell_measure[:, None]))
        return PosteriorSphere(self.theta, self.phi, self.cell_measure,
                               log_density - (top + math.log(mass)))


def bayes_update(p: PosteriorSphere, m: UnitVector, outcome) -> PosteriorSphere:
    """Multiply by the Stern-Gerlach likelihood of ``outcome`` for an apparatus
    along ``m`` and renormalize."""
    sign = int(Outcome.coerce(outcome))
    gx, gy, gz = p.directions()
    proj = m.x * gx + m.y * gy + m.z * gz
    with np.errstate(divide="ignore"):
        log_like = np.log(0.5 * (1.0 + sign * proj))
    return p._with_log(p.log_density + log_like)


class MapEstimate(NamedTuple):
    direction: UnitVector
    degenerate: bool
    candidates: tuple


def map_direction(p: PosteriorSphere) -> MapEstimate:
    """Direction of the most probable cell, refined by local quadratic fits.

    ``degenerate`` is set when another cell, farther than three grid spacings
    away, reaches the maximum within a relative 1e-9; ``candidates`` then lists
    the directions of all such cells so the caller can break the tie.
    """
    w = np.exp(p.log_density - np.max(p.log_density))
    gx, gy, gz = p.directions()
    cand = np.empty(w.size, dtype=np.int64)
    count = kernels._mode_candidates_numpy(w, gx, gy, gz, kernels.tie_separation_cos(p.theta, p.phi),
                                           cand)
    x, y, z = kernels.refine_mode(w, p.theta, p.phi, cand[0])
    nphi = p.phi.shape[0]
    candidates = tuple(
        UnitVector.from_xyz(gx[k // nphi, k % nphi], gy[k // nphi, k % nphi], gz[k // nphi, k % nphi])
        for k in cand[:count]
    )
    return MapEstimate(UnitVector.from_xyz(x, y, z), count > 1, candidates)
