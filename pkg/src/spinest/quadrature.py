"""Composite Gauss-Legendre rules on the polar angle and the sphere."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

PANEL_ORDER = 16
MIN_NODES = 256
NODES_PER_PERIOD = 12


@lru_cache(maxsize=None)
def _base_rule(order):
    x, w = leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_count(domain_max, bandwidth, min_nodes=MIN_NODES, nodes_per_period=NODES_PER_PERIOD,
                order=PANEL_ORDER):
    """Panels needed so a trig polynomial of degree ``bandwidth`` in theta gets
    at least ``nodes_per_period`` nodes per oscillation period."""
    periods = max(float(bandwidth), 1.0) * domain_max / (2.0 * math.pi)
    nodes = max(min_nodes, int(math.ceil(nodes_per_period * periods)))
    return int(math.ceil(nodes / order))


def theta_grid(domain_max, bandwidth=1, min_nodes=MIN_NODES, nodes_per_period=NODES_PER_PERIOD,
               order=PANEL_ORDER):
    """Nodes and solid-angle weights on ``[0, domain_max]``.

    Weights include the azimuthal factor, ``2 pi sin(theta) dtheta``, so that
    ``sum(weights * f(nodes))`` approximates the integral of an axially
    symmetric function over the cap.
    """
    panels = panel_count(domain_max, bandwidth, min_nodes, nodes_per_period, order)
    x, w = _base_rule(order)
    edges = np.linspace(0.0, domain_max, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    nodes = (mid + half * x).ravel()
    weights = (half * w).ravel() * 2.0 * np.pi * np.sin(nodes)
    return nodes, weights


def sphere_grid(n_theta, n_phi):
    """Product grid: Gauss-Legendre in cos(theta), uniform in phi.

    Returns ``(theta, phi, cell_measure)`` where ``cell_measure`` has shape
    ``(n_theta,)`` and sums (times ``n_phi``) to 4 pi.  Each theta row owns the
    band between consecutive cumulative weights, so the measures are cos(theta)
    differences of a partition of [-1, 1].  Integrals of polynomials in the
    direction components are exact up to degree ``2 n_theta - 1`` in z and
    ``n_phi - 1`` in azimuthal frequency.
    """
    x, w = leggauss(int(n_theta))
    cos_t = x[::-1]
    theta = np.arccos(cos_t)
    phi = (np.arange(int(n_phi)) + 0.5) * (2.0 * np.pi / n_phi)
    cell = w[::-1] * (2.0 * np.pi / n_phi)
    return theta, phi, cell
