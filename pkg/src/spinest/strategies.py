"""Spin-direction estimation strategies: analytic bounds, Monte Carlo
simulators for sequential Stern-Gerlach schemes and the coherent-group score."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .geometry import SeededRng, UnitVector, directions_from_uniforms, random_triads
from .posterior import make_coherent_posterior, score
from .quadrature import sphere_grid

DEFAULT_TRIALS = 10_000
ADAPTIVE_N_THETA = 64
ADAPTIVE_N_PHI = 128
MAX_RESAMPLES = 10

# stream ids partition the random draws of different simulators
ADAPTIVE_STREAM = 1
XYZ_STREAM = 2


class ConvergenceError(RuntimeError):
    """A simulation could not produce a valid result within its retry budget."""


@dataclass(frozen=True)
class ScoreEstimate:
    mean_fidelity: float
    trials: int
    std_error: float

    @classmethod
    def from_samples(cls, samples) -> "ScoreEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.shape[0]
        if n < 1:
            raise ValueError("need at least one sample")
        mean = math.fsum(samples) / n
        if n > 1:
            var = math.fsum((samples - mean) ** 2) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = 0.0
        return cls(min(1.0, max(0.0, mean)), n, se)


@dataclass(frozen=True)
class AdaptivePolicy:
    """How the adaptive scheme orients the apparatus and reports its estimate.

    ``bootstrap_axes`` of ``None`` means a fresh Haar-random orthogonal triad
    per trial; fixed axes are used verbatim for every trial.
    """

    bootstrap_axes: tuple | None = None
    probe_mode: str = "perpendicular"
    estimator: str = "map"

    def __post_init__(self):
        if self.probe_mode not in ("perpendicular", "map-aligned"):
            raise ValueError(f"unknown probe mode {self.probe_mode!r}")
        if self.estimator not in ("map", "posterior-mean"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.bootstrap_axes is not None:
            axes = [a if isinstance(a, UnitVector) else UnitVector.from_array(a)
                    for a in self.bootstrap_axes]
            if len(axes) != 3:
                raise ValueError("bootstrap needs exactly three axes")
            for i in range(3):
                for j in range(i + 1, 3):
                    if abs(axes[i].x * axes[j].x + axes[i].y * axes[j].y + axes[i].z * axes[j].z) > 1e-10:
                        raise ValueError("bootstrap axes must be mutually orthogonal")
            object.__setattr__(self, "bootstrap_axes", tuple(axes))


@dataclass(frozen=True)
class AdaptiveRun:
    estimate: ScoreEstimate
    trace: np.ndarray
    trace_std_error: np.ndarray
    resampled_trials: int = 0
    grid: tuple = field(default=(ADAPTIVE_N_THETA, ADAPTIVE_N_PHI))


class RepetitionScan(NamedTuple):
    best: int
    scores: dict
    skipped: tuple


def standard_bound(n_particles: int) -> float:
    """Best average fidelity of any measurement on N identical copies."""
    n_particles = int(n_particles)
    if n_particles < 0:
        raise ValueError("particle count must be non-negative")
    return (n_particles + 1) / (n_particles + 2)


def _chunks(count, threads):
    threads = max(1, int(threads))
    size = max(1, math.ceil(count / threads))
    return [(lo, min(count, lo + size)) for lo in range(0, count, size)]


def _adaptive_inputs(rng, indices, n_particles, policy, attempt=0):
    k = len(indices)
    truth = np.empty((k, 3))
    triads = np.empty((k, 3, 3))
    u_out = np.empty((k, n_particles))
    u_tie = np.empty((k, n_particles))
    for row, trial in enumerate(indices):
        u = rng.generator(block=trial, attempt=attempt).random(5 + 2 * n_particles)
        truth[row] = directions_from_uniforms(u[0], u[1])
        if policy.bootstrap_axes is None:
            triads[row] = random_triads(u[2], u[3], u[4])[0]
        else:
            triads[row] = np.array([a.as_array() for a in policy.bootstrap_axes])
        u_out[row] = u[5:5 + n_particles]
        u_tie[row] = u[5 + n_particles:]
    return truth, triads, u_out, u_tie


def _run_adaptive_block(theta, phi, rng, indices, n_particles, policy, attempt=0):
    truth, triads, u_out, u_tie = _adaptive_inputs(rng, indices, n_particles, policy, attempt)
    k = len(indices)
    fid = np.empty(k)
    trace = np.empty((k, n_particles))
    status = np.zeros(k, dtype=np.int64)
    kernels.adaptive_trials(theta, phi, truth, triads, u_out, u_tie,
                            policy.probe_mode == "perpendicular", policy.estimator == "posterior-mean",
                            fid, trace, status)
    return fid, trace, status


def simulate_adaptive(n_particles: int, policy: AdaptivePolicy | None = None,
                      trials: int = DEFAULT_TRIALS, rng: SeededRng | int = 0, threads: int = 1,
                      grid: tuple = (ADAPTIVE_N_THETA, ADAPTIVE_N_PHI)) -> AdaptiveRun:
    """Monte Carlo score of the adaptive one-particle-at-a-time scheme.

    Per trial: a uniform true direction; the first three particles go along an
    orthogonal triad; every later particle is measured perpendicular to the
    current MAP direction, the azimuth advancing by the golden angle.  The
    running posterior lives on a ``grid = (n_theta, n_phi)`` sphere grid.
    Trial ``i`` draws only from counter block ``i`` of ``rng``, so results do
    not depend on ``threads``.
    """
    n_particles = int(n_particles)
    trials = int(trials)
    if n_particles < 0:
        raise ValueError("particle count must be non-negative")
    if trials < 1:
        raise ValueError("trials must be positive")
    policy = policy or AdaptivePolicy()
    if not isinstance(rng, SeededRng):
        rng = SeededRng(int(rng), ADAPTIVE_STREAM)

    if n_particles == 0:
        # with no data every estimate averages to fidelity 1/2 over the
        # uniform prior, so the conditional expectation is exact
        return AdaptiveRun(ScoreEstimate(0.5, trials, 0.0), np.empty(0), np.empty(0), 0, grid)

    theta, phi, _ = sphere_grid(*grid)
    blocks = _chunks(trials, threads)

    def work(bounds):
        lo, hi = bounds
        return _run_adaptive_block(theta, phi, rng, range(lo, hi), n_particles, policy)

    if len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(blocks[0])]
    fid = np.concatenate([p[0] for p in parts])
    trace = np.concatenate([p[1] for p in parts])
    status = np.concatenate([p[2] for p in parts])

    resampled = 0
    for trial in np.flatnonzero(status != kernels.STATUS_OK):
        for attempt in range(1, MAX_RESAMPLES + 1):
            resampled += 1
            f, tr, st = _run_adaptive_block(theta, phi, rng, [int(trial)], n_particles, policy, attempt)
            if st[0] == kernels.STATUS_OK:
                fid[trial] = f[0]
                trace[trial] = tr[0]
                break
        else:
            raise ConvergenceError(f"trial {trial}: MAP direction stayed degenerate after "
                                   f"{MAX_RESAMPLES} resamples")

    estimate = ScoreEstimate.from_samples(fid)
    trace_mean = np.array([math.fsum(col) / trials for col in trace.T])
    if trials > 1:
        trace_se = np.array([
            math.sqrt(math.fsum((col - m) ** 2) / (trials - 1) / trials)
            for col, m in zip(trace.T, trace_mean)
        ])
    else:
        trace_se = np.zeros(n_particles)
    return AdaptiveRun(estimate, trace_mean, trace_se, resampled, tuple(grid))


def xyz_fidelities(n_particles, true_dirs, up_counts, fallback_dirs):
    """Fidelity of the normalized count-vector estimate for each trial."""
    per_axis = n_particles // 3
    v = 2.0 * up_counts / per_axis - 1.0
    norm = np.sqrt(np.sum(v * v, axis=1))
    est = np.where(norm[:, None] > 0.0, v / np.where(norm > 0.0, norm, 1.0)[:, None], fallback_dirs)
    return 0.5 * (1.0 + np.sum(est * true_dirs, axis=1))


def simulate_xyz(n_particles: int, trials: int = DEFAULT_TRIALS, rng: SeededRng | int = 0,
                 true_direction: UnitVector | None = None, threads: int = 1) -> ScoreEstimate:
    """Monte Carlo score of measuring N/3 particles along each lab axis.

    The estimate is the vector of per-axis mean spins, normalized (a uniform
    random direction when it vanishes).  ``true_direction`` fixes the true
    state instead of drawing it uniformly.
    """
    n_particles = int(n_particles)
    trials = int(trials)
    if n_particles < 3 or n_particles % 3:
        raise ValueError("particle count must be a positive multiple of 3")
    if trials < 1:
        raise ValueError("trials must be positive")
    if not isinstance(rng, SeededRng):
        rng = SeededRng(int(rng), XYZ_STREAM)
    per_axis = n_particles // 3

    def work(bounds):
        lo, hi = bounds
        k = hi - lo
        truth = np.empty((k, 3))
        fallback = np.empty((k, 3))
        counts = np.empty((k, 3))
        for row, trial in enumerate(range(lo, hi)):
            gen = rng.generator(block=trial)
            u = gen.random(4)
            truth[row] = directions_from_uniforms(u[0], u[1])
            fallback[row] = directions_from_uniforms(u[2], u[3])
            if true_direction is not None:
                truth[row] = true_direction.as_array()
            counts[row] = gen.binomial(per_axis, 0.5 * (1.0 + truth[row]))
        return xyz_fidelities(n_particles, truth, counts, fallback)

    blocks = _chunks(trials, threads)
    if len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(blocks[0])]
    return ScoreEstimate.from_samples(np.concatenate(parts))


def coherent_score(n_particles: int, repetitions: int) -> float:
    """Felicitous-outcome score for ``repetitions`` coherent measurements, each
    on a group of 2r = N/repetitions particles prepared in |2r, 0>."""
    n_particles, repetitions = int(n_particles), int(repetitions)
    if n_particles < 2 or n_particles % 2:
        raise ValueError("particle count must be a positive even number")
    if repetitions < 1 or n_particles % (2 * repetitions):
        raise ValueError(f"{n_particles} particles cannot form {repetitions} equal groups of 2r")
    return score(make_coherent_posterior(n_particles // (2 * repetitions), repetitions))


def optimal_repetitions(n_particles: int, n_max: int) -> RepetitionScan:
    """Scan repetition counts 1..n_max that split N into equal groups.

    Ties go to the smaller repetition count; non-dividing counts are listed in
    ``skipped``.
    """
    n_particles, n_max = int(n_particles), int(n_max)
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    scores = {}
    skipped = []
    for n in range(1, n_max + 1):
        if n_particles % (2 * n):
            skipped.append(n)
            continue
        scores[n] = coherent_score(n_particles, n)
    if not scores:
        raise ValueError(f"no admissible repetition count for N = {n_particles}")
    best = max(scores, key=lambda n: (scores[n], -n))
    return RepetitionScan(best, scores, tuple(skipped))


def asymptotic_dispersion(n_particles) -> float:
    return 2.0 * math.sqrt(5.0) / n_particles


def asymptotic_score(n_particles) -> float:
    return 1.0 - 5.0 / n_particles ** 2


GISIN_POPESCU_SCORE = 0.789
"""Published score for the antiparallel pair, quoted for comparison only."""
