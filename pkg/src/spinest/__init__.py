"""Spin-direction estimation: Stern-Gerlach strategies, coherent group
measurements and the posteriors behind their scores."""

__version__ = "0.1.0"

from .geometry import (
    E_X,
    E_Y,
    E_Z,
    Outcome,
    PolarAngles,
    SeededRng,
    UnitVector,
    axis_angle,
    detection_probability,
    dot,
    perpendicular_direction,
    random_uniform_direction,
)
from .posterior import (
    PosteriorSphere,
    PosteriorTheta,
    ScoreDispersionPair,
    bayes_update,
    dispersion,
    make_coherent_posterior,
    make_standard_posterior,
    map_direction,
    multiply,
    score,
    score_and_dispersion,
)
from .special import HalfInteger, bessel_j0, legendre_p, wigner_d_matrix, wigner_small_d
from .strategies import (
    AdaptivePolicy,
    AdaptiveRun,
    ScoreEstimate,
    asymptotic_dispersion,
    asymptotic_score,
    coherent_score,
    optimal_repetitions,
    simulate_adaptive,
    simulate_xyz,
    standard_bound,
)
