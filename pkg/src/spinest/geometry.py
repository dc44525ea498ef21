"""Directions on the sphere, tangent frames, seeded randomness and
single-particle Stern-Gerlach outcome probabilities."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

POLE_TOLERANCE = 1e-9


class Outcome(enum.IntEnum):
    """Stern-Gerlach detection port; the value is the sign of the projection."""

    UP = 1
    DOWN = -1

    @classmethod
    def coerce(cls, value) -> "Outcome":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown outcome {value!r}") from None
        return cls(int(value))


@dataclass(frozen=True)
class UnitVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-9:
            raise ValueError(f"not a unit vector: ({self.x}, {self.y}, {self.z})")
        object.__setattr__(self, "x", float(self.x) / norm)
        object.__setattr__(self, "y", float(self.y) / norm)
        object.__setattr__(self, "z", float(self.z) / norm)

    @classmethod
    def from_xyz(cls, x, y, z) -> "UnitVector":
        """Normalize an arbitrary nonzero vector."""
        norm = math.sqrt(x * x + y * y + z * z)
        if norm == 0.0 or not math.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(x / norm, y / norm, z / norm)

    @classmethod
    def from_array(cls, v) -> "UnitVector":
        v = np.asarray(v, dtype=float)
        return cls.from_xyz(float(v[0]), float(v[1]), float(v[2]))

    @classmethod
    def from_angles(cls, theta, phi) -> "UnitVector":
        s = math.sin(theta)
        return cls.from_xyz(s * math.cos(phi), s * math.sin(phi), math.cos(theta))

    def angles(self) -> "PolarAngles":
        theta = math.acos(max(-1.0, min(1.0, self.z)))
        phi = math.atan2(self.y, self.x) % (2.0 * math.pi)
        return PolarAngles(theta, phi)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __neg__(self) -> "UnitVector":
        return UnitVector(-self.x, -self.y, -self.z)

    def __iter__(self):
        return iter((self.x, self.y, self.z))


@dataclass(frozen=True)
class PolarAngles:
    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta out of [0, pi]: {self.theta}")
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))

    def to_unit_vector(self) -> UnitVector:
        return UnitVector.from_angles(self.theta, self.phi)


E_X = UnitVector(1.0, 0.0, 0.0)
E_Y = UnitVector(0.0, 1.0, 0.0)
E_Z = UnitVector(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class SeededRng:
    """Counter-based random source keyed by ``(seed, stream)``.

    Backed by the Philox bit generator.  ``generator(block)`` returns a fresh
    numpy Generator whose counter starts at ``block``, so the same triple always
    yields the same draws regardless of the order in which blocks are used.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            value = int(getattr(self, name))
            if not 0 <= value < 2**64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer")
            object.__setattr__(self, name, value)

    def generator(self, block: int = 0, attempt: int = 0) -> np.random.Generator:
        bitgen = np.random.Philox(
            key=np.array([self.seed, self.stream], dtype=np.uint64),
            counter=np.array([0, int(block), int(attempt), 0], dtype=np.uint64),
        )
        return np.random.Generator(bitgen)

    def spawn(self, stream: int) -> "SeededRng":
        return SeededRng(self.seed, stream)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, SeededRng):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected SeededRng or numpy Generator, got {type(rng).__name__}")


def dot(a: UnitVector, b: UnitVector) -> float:
    d = a.x * b.x + a.y * b.y + a.z * b.z
    return max(-1.0, min(1.0, d))


def detection_probability(m: UnitVector, n: UnitVector, outcome) -> float:
    """Probability that a spin along ``n`` exits the ``outcome`` port of an
    apparatus oriented along ``m``."""
    outcome = Outcome.coerce(outcome)
    return 0.5 * (1.0 + int(outcome) * dot(m, n))


def directions_from_uniforms(u_z, u_phi) -> np.ndarray:
    """Map uniforms on [0, 1) to Haar-uniform unit vectors by inverse CDF on z.

    Returns an array of shape ``broadcast(u_z, u_phi).shape + (3,)``.
    """
    z = 2.0 * np.asarray(u_z, dtype=float) - 1.0
    phi = 2.0 * np.pi * np.asarray(u_phi, dtype=float)
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack(np.broadcast_arrays(s * np.cos(phi), s * np.sin(phi), z), axis=-1)


def random_uniform_direction(rng, size=None):
    """Draw one direction (``size=None``) or an ``(size, 3)`` array of them."""
    gen = _as_generator(rng)
    if size is None:
        u = gen.random(2)
        return UnitVector.from_array(directions_from_uniforms(u[0], u[1]))
    u = gen.random((int(size), 2))
    return directions_from_uniforms(u[:, 0], u[:, 1])


def tangent_basis(v) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal pair spanning the plane orthogonal to ``v``.

    Within ``POLE_TOLERANCE`` of either pole the pair is fixed to (e_x, e_y);
    otherwise the first vector is e_z x v normalized.
    """
    v = np.asarray(v, dtype=float)
    if abs(abs(v[2]) - 1.0) <= POLE_TOLERANCE:
        return np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    t1 = np.array([-v[1], v[0], 0.0])
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(v, t1)
    t2 /= np.linalg.norm(t2)
    return t1, t2


def perpendicular_direction(v: UnitVector, azimuth: float) -> UnitVector:
    t1, t2 = tangent_basis(v.as_array())
    w = math.cos(azimuth) * t1 + math.sin(azimuth) * t2
    # remove any residual component along v
    va = v.as_array()
    w = w - np.dot(w, va) * va
    return UnitVector.from_array(w)


def axis_angle(a: UnitVector, b: UnitVector) -> float:
    """Angle in [0, pi/2] between the undirected axes through ``a`` and ``b``."""
    return math.acos(min(1.0, abs(dot(a, b))))


def random_triads(u_z, u_phi, u_rot) -> np.ndarray:
    """Haar-random orthonormal triads from three uniform arrays.

    The first axis is uniform on the sphere, the second is perpendicular to it
    at a uniform azimuth, the third completes a right-handed frame.  Returns an
    array of shape ``(count, 3, 3)`` with axes along the second dimension.
    """
    a = directions_from_uniforms(np.atleast_1d(u_z), np.atleast_1d(u_phi))
    az = 2.0 * np.pi * np.atleast_1d(np.asarray(u_rot, dtype=float))
    out = np.empty((a.shape[0], 3, 3))
    for i in range(a.shape[0]):
        t1, t2 = tangent_basis(a[i])
        b = math.cos(az[i]) * t1 + math.sin(az[i]) * t2
        out[i, 0] = a[i]
        out[i, 1] = b
        out[i, 2] = np.cross(a[i], b)
    return out


def random_triad(rng) -> tuple[UnitVector, UnitVector, UnitVector]:
    gen = _as_generator(rng)
    u = gen.random(3)
    t = random_triads(u[0], u[1], u[2])[0]
    return tuple(UnitVector.from_array(row) for row in t)
