"""Scalar constants of the epidemic, each defined by a fixed-point equation.

Every solver uses bracketed bisection (guaranteed by monotonicity of the
defining function on its bracket) followed by a few Newton polish steps, so
returned roots satisfy their defining equations to better than 1e-12 in
absolute residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "survival_probability",
    "cone_aperture",
    "frontier_level",
    "layer_levels",
    "axis_fixed_point",
    "axis_boundary_levels",
    "LayerTable",
]

_EPS = 1e-12
_BISECT_WIDTH = 1e-14


def _bisect_polish(f, fprime, lo, hi):
    """Root of f on [lo, hi] by sign bisection to width 1e-14, then Newton.

    Requires f(lo) and f(hi) of opposite (or zero) sign.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError(f"root not bracketed on [{lo}, {hi}]: f={flo}, {fhi}")
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # bracket at floating resolution
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    x = 0.5 * (lo + hi)
    for _ in range(5):
        d = fprime(x)
        if d == 0.0:
            break
        step = f(x) / d
        x_new = x - step
        if not (lo <= x_new <= hi):
            break
        x = x_new
        if abs(step) < 1e-17:
            break
    return x


def survival_probability(theta: float) -> float:
    """The root iota in (0, 1) of 1 - x = exp(-(1 + theta) x).

    Limit of the probability that the epidemic started by one infected
    individual never dies out.
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    c = 1.0 + theta

    def f(x):
        return -math.expm1(-c * x) - x

    def fp(x):
        return -1.0 + c * math.exp(-c * x)

    return _bisect_polish(f, fp, _EPS, 1.0 - _EPS)


def cone_aperture(theta: float) -> float:
    """Half-aperture kappa of the speed-one cone.

    For theta in (1.5, 4) this is the unique root in (0, 0.5] of
    x^x (1-x)^(1-x) = (1+theta)/5; for theta >= 4 the cone fills the
    quadrant and kappa = 0.  Below theta = 1.5 there is no speed-one cone.
    """
    if not theta > 1.5:
        raise ValueError(f"no speed-one cone for theta = {theta} (requires theta > 1.5)")
    if theta >= 4.0:
        return 0.0
    target = math.log((1.0 + theta) / 5.0)

    def f(x):
        # x log x + (1-x) log(1-x) - target, with 0 log 0 := 0
        s = x * math.log(x) if x > 0.0 else 0.0
        s += (1.0 - x) * math.log(1.0 - x) if x < 1.0 else 0.0
        return s - target

    def fp(x):
        return math.log(x) - math.log(1.0 - x)

    return _bisect_polish(f, fp, _EPS, 0.5)


def frontier_level(theta: float) -> float:
    """Limiting infection proportion on the frontier, the first layer level.

    Unique positive root of x = 1 - exp(-2 (1+theta) x / 5) when
    theta > 1.5; identically 0 for theta <= 1.5.
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if theta <= 1.5:
        return 0.0
    c = 2.0 * (1.0 + theta) / 5.0

    def f(x):
        return -math.expm1(-c * x) - x

    def fp(x):
        return c * math.exp(-c * x) - 1.0

    return _bisect_polish(f, fp, _EPS, 1.0 - _EPS)


@dataclass(frozen=True)
class LayerTable:
    """Layer levels ell^(1..M), their running sums, and the survival limit."""

    theta: float
    values: tuple
    partial_sums: tuple
    iota: float

    def __len__(self):
        return len(self.values)


def layer_levels(theta: float, count: int) -> LayerTable:
    """The sequence of limiting layer proportions behind the frontier.

    Entry i solves
        x = (1 - s_{i-1}) * (1 - exp(-(1+theta)/5 * (2 x + v_{i-1} + 2 v_{i-2})))
    where v_j are the previous entries (v_0 = v_{-1} = 0) and s_{i-1} is the
    running sum.  The running sums increase to the survival probability.
    """
    if not theta > 1.5:
        raise ValueError(f"layer levels require theta > 1.5, got {theta}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    c = (1.0 + theta) / 5.0
    values = []
    sums = []
    s = 0.0
    prev1 = 0.0  # v_{i-1}
    prev2 = 0.0  # v_{i-2}
    for i in range(1, count + 1):
        b = prev1 + 2.0 * prev2
        rem = 1.0 - s

        def f(x, b=b, rem=rem):
            return rem * -math.expm1(-c * (2.0 * x + b)) - x

        def fp(x, b=b, rem=rem):
            return rem * 2.0 * c * math.exp(-c * (2.0 * x + b)) - 1.0

        # Entry 1 must exclude the trivial root at 0; later entries have
        # f(0) > 0 strictly, and their roots eventually shrink below any
        # fixed floor, so the bracket starts at 0.
        lo = _EPS if i == 1 else 0.0
        hi = rem - _EPS
        if hi <= lo:
            root = 0.0
        else:
            root = _bisect_polish(f, fp, lo, hi)
        values.append(root)
        s += root
        sums.append(s)
        prev2 = prev1
        prev1 = root
    return LayerTable(
        theta=theta,
        values=tuple(values),
        partial_sums=tuple(sums),
        iota=survival_probability(theta),
    )


def axis_fixed_point(theta: float) -> float:
    """Interior fixed point gamma_1 of x -> 1 - exp(-(1+theta) x / 5).

    Exists only for theta > 4 (the map's slope at 0 exceeds 1 exactly then).
    The map lies above the diagonal on (0, gamma_1) and below it beyond.
    """
    if not theta > 4.0:
        raise ValueError(f"axis fixed point requires theta > 4, got {theta}")
    c = (1.0 + theta) / 5.0

    def f(x):
        return -math.expm1(-c * x) - x

    def fp(x):
        return c * math.exp(-c * x) - 1.0

    return _bisect_polish(f, fp, _EPS, 1.0 - _EPS)


def axis_boundary_levels(theta: float, count: int) -> list:
    """Limiting frontier values along the quadrant boundary, theta > 4.

    Starts at the axis fixed point and each next term solves
    x = 1 - exp(-(1+theta)/5 * (prev + x)); the sequence is nondecreasing and
    converges up to the frontier level.  Returns count + 1 values.
    """
    if not theta > 4.0:
        raise ValueError(f"axis boundary levels require theta > 4, got {theta}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    c = (1.0 + theta) / 5.0
    seq = [axis_fixed_point(theta)]
    for _ in range(count):
        a = seq[-1]

        def f(x, a=a):
            return -math.expm1(-c * (a + x)) - x

        def fp(x, a=a):
            return c * math.exp(-c * (a + x)) - 1.0

        seq.append(_bisect_polish(f, fp, _EPS, 1.0 - _EPS))
    return seq
