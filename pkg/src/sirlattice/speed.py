"""Directional spreading speed of the epidemic via its path-rate functional.

The speed in direction phi is determined by the functional

    rate(v, phi) = inf over t in [v, 1] of
        h(t) + t * (h(1/2 - v/(2t)) + h(1/2 - (1-2a)v/(2t)))

with h the (negative) binary entropy and a the direction ratio of phi.  It
increases strictly in v from log(1/5) up to h(a); the speed is the v at which
it crosses log((1+theta)/5), or 1 when the crossing lies beyond v = 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .solvers import cone_aperture

__all__ = [
    "binary_entropy",
    "direction_ratio",
    "rate_functional",
    "spreading_speed",
    "shape_curve",
    "ShapeCurve",
]

_GRID_POINTS = 2000
_GOLDEN_TOL = 1e-12
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def binary_entropy(t: float) -> float:
    """t log t + (1 - t) log(1 - t) on [0, 1], with 0 log 0 := 0.

    Nonpositive; equals 0 at the endpoints and -log 2 at t = 1/2.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"argument must lie in [0, 1], got {t}")
    s = t * math.log(t) if t > 0.0 else 0.0
    if t < 1.0:
        s += (1.0 - t) * math.log(1.0 - t)
    return s


def direction_ratio(phi: float) -> float:
    """min(|sin|, |cos|) / (|sin| + |cos|) — the axis ratio of a direction.

    Lies in [0, 1/2]; 0 along the axes, 1/2 along the diagonals, and carries
    the full 8-fold dihedral symmetry of the lattice.
    """
    s = abs(math.sin(phi))
    c = abs(math.cos(phi))
    return min(s, c) / (s + c)


def _objective_grid(v: float, a: float, t: np.ndarray) -> np.ndarray:
    """Vector evaluation of the inner objective at trial minimizers t."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ht = np.where(t > 0, t * np.log(t), 0.0) + np.where(
            t < 1, (1.0 - t) * np.log(1.0 - t), 0.0
        )
        u1 = np.clip(0.5 - v / (2.0 * t), 0.0, 1.0)
        u2 = np.clip(0.5 - (1.0 - 2.0 * a) * v / (2.0 * t), 0.0, 1.0)
        h1 = np.where(u1 > 0, u1 * np.log(u1), 0.0) + np.where(
            u1 < 1, (1.0 - u1) * np.log(1.0 - u1), 0.0
        )
        h2 = np.where(u2 > 0, u2 * np.log(u2), 0.0) + np.where(
            u2 < 1, (1.0 - u2) * np.log(1.0 - u2), 0.0
        )
    return ht + t * (h1 + h2)


def _objective(v: float, a: float, t: float) -> float:
    u1 = min(max(0.5 - v / (2.0 * t), 0.0), 1.0)
    u2 = min(max(0.5 - (1.0 - 2.0 * a) * v / (2.0 * t), 0.0), 1.0)
    return binary_entropy(t) + t * (binary_entropy(u1) + binary_entropy(u2))


def _rate_from_ratio(v: float, a: float) -> float:
    if v == 1.0:
        return _objective(1.0, a, 1.0)
    # coarse grid to bracket the minimum, then golden-section refinement
    t = np.linspace(v, 1.0, _GRID_POINTS + 1)
    vals = _objective_grid(v, a, t)
    i = int(np.argmin(vals))
    lo = t[max(i - 1, 0)]
    hi = t[min(i + 1, _GRID_POINTS)]
    best = float(vals[i])
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1 = _objective(v, a, x1)
    f2 = _objective(v, a, x2)
    while hi - lo > _GOLDEN_TOL:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = _objective(v, a, x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = _objective(v, a, x2)
    return min(best, f1, f2)


def rate_functional(v: float, phi: float) -> float:
    """Exponential growth-rate functional of the frontier at speed v.

    Strictly increasing in v on (0, 1], from log(1/5) as v -> 0 up to the
    exact endpoint value h(a(phi)) at v = 1.
    """
    if not 0.0 < v <= 1.0:
        raise ValueError(f"speed must lie in (0, 1], got {v}")
    return _rate_from_ratio(v, direction_ratio(phi))


def _speed_from_ratio(theta: float, a: float) -> float:
    target = math.log((1.0 + theta) / 5.0)
    if binary_entropy(a) <= target:
        return 1.0
    lo, hi = 1e-9, 1.0 - 1e-9
    flo = _rate_from_ratio(lo, a) - target
    fhi = _rate_from_ratio(hi, a) - target
    if flo > 0.0:  # theta so small the crossing is below the floor
        return lo
    if fhi < 0.0:  # near-tangent bracket failure: crossing is at/above 1
        return 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _rate_from_ratio(mid, a) - target <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    return 0.5 * (lo + hi)


def spreading_speed(theta: float, phi: float) -> float:
    """Asymptotic speed of the epidemic in direction phi, in (0, 1].

    Returns exactly 1 when h(a(phi)) <= log((1+theta)/5); otherwise the
    unique v with rate_functional(v, phi) = log((1+theta)/5), found by
    bisection (the functional is strictly increasing in v).
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    return _speed_from_ratio(theta, direction_ratio(phi))


@dataclass(frozen=True)
class ShapeCurve:
    """Sampled limiting frontier shape: (phi, speed) pairs on [0, 2 pi)."""

    theta: float
    samples: tuple  # of (phi, upsilon)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["phi", "upsilon"])
            for phi, ups in self.samples:
                writer.writerow([f"{phi:.12g}", f"{ups:.12g}"])


def shape_curve(theta: float, n_samples: int = 360) -> ShapeCurve:
    """Limiting frontier shape sampled at equally spaced angles.

    Speeds are cached per direction ratio, exploiting the 8-fold symmetry.
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if n_samples < 8:
        raise ValueError(f"need at least 8 samples, got {n_samples}")
    cache: dict = {}
    samples = []
    for k in range(n_samples):
        phi = 2.0 * math.pi * k / n_samples
        a = direction_ratio(phi)
        key = round(a, 15)
        if key not in cache:
            cache[key] = _speed_from_ratio(theta, a)
        samples.append((phi, cache[key]))
    return ShapeCurve(theta=theta, samples=tuple(samples))
