"""Deterministic large-village limit of the epidemic on the 2-d lattice.

One step of the limit dynamics maps infection and recovered proportions
(I, R) with S = 1 - I - R to

    I'(x) = S(x) * (1 - exp(-(1+theta)/5 * Itilde(x))),   R' = I + R,

where Itilde is the five-point l1-neighborhood sum.  This module also
provides the reduced one-dimensional layer recursions for line initial
conditions, the cumulative-infection recursion, the ultimate-proportion
equation solver, and the seed-derivative field that locates the speed-one
cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .fields import GridField, Window, neighbor_sum
from .params import InitialCondition
from .solvers import survival_probability

__all__ = [
    "DetState",
    "WindowOverflowError",
    "ConvergenceError",
    "realize_initial",
    "det_step",
    "det_run",
    "frontier_layer_sequences",
    "cumulative_step",
    "final_proportion_field",
    "frontier_derivative_field",
]


class WindowOverflowError(RuntimeError):
    """Field window would exceed its configured maximum extent."""


class ConvergenceError(RuntimeError):
    """Monotone iteration failed to reach the requested tolerance."""


@dataclass(frozen=True)
class DetState:
    t: int
    I: GridField
    R: GridField

    def __post_init__(self):
        if self.I.window != self.R.window:
            raise ValueError("I and R must share a window")


def realize_initial(ic: InitialCondition, window: Window) -> GridField:
    """Realize an initial infection proportion field on a window."""
    field = GridField(window, dtype=np.float64)
    if ic.kind == "unit":
        raise ValueError("the single-individual start has no deterministic analog")
    if ic.kind == "gamma":
        field.set(0, 0, ic.gamma)
    elif ic.kind == "diag-line":
        for x in range(window.x_lo, window.x_hi + 1):
            if window.contains(x, -x):
                field.set(x, -x, ic.gamma)
    elif ic.kind == "custom":
        src = ic.field
        for x in range(src.window.x_lo, src.window.x_hi + 1):
            for y in range(src.window.y_lo, src.window.y_hi + 1):
                v = src.get(x, y)
                if v != 0.0:
                    if not window.contains(x, y):
                        raise ValueError(f"custom support site {(x, y)} outside window")
                    field.set(x, y, float(v))
    return field


def _boundary_active(data: np.ndarray) -> bool:
    return bool(
        data[0, :].any() or data[-1, :].any() or data[:, 0].any() or data[:, -1].any()
    )


def det_step(state: DetState, theta: float, max_radius: int | None = None) -> DetState:
    """One step of the limit dynamics; the window grows when mass could
    spread past it."""
    c = (1.0 + theta) / 5.0
    I, R = state.I, state.R
    if _boundary_active(I.data):
        w = I.window.dilated(1)
        if max_radius is not None and max(
            -w.x_lo, w.x_hi, -w.y_lo, w.y_hi
        ) > max_radius:
            raise WindowOverflowError(
                f"window {w} exceeds configured maximum radius {max_radius}"
            )
        I = I.grown(1)
        R = R.grown(1)
    s = 1.0 - I.data - R.data
    i_new = s * -np.expm1(-c * neighbor_sum(I.data))
    r_new = I.data + R.data
    window = I.window
    return DetState(
        t=state.t + 1,
        I=GridField(window, i_new),
        R=GridField(window, r_new),
    )


def det_run(
    ic: InitialCondition,
    theta: float,
    steps: int,
    radius: int | None = None,
    record: str = "final",
    max_radius: int | None = None,
) -> list[DetState]:
    """Run the limit dynamics for a number of steps.

    ``radius`` fixes the initial window half-width.  Point initial
    conditions stay exact on any window that the support never reaches; for
    the diagonal line the default 2*steps + 2 keeps every first-quadrant
    site with x + y <= steps exact over the whole run (the truncated line
    ends are more than ``steps`` away in l1 distance).

    record: "all" keeps every slice, "final" only the last one.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    if radius is not None:
        window = Window.square(radius)
    elif ic.kind == "diag-line":
        window = Window.square(2 * steps + 2)
    elif ic.kind == "custom":
        box = ic.field.window
        window = Window(
            box.x_lo - steps - 1, box.x_hi + steps + 1,
            box.y_lo - steps - 1, box.y_hi + steps + 1,
        )
    else:
        window = Window.square(steps + 1)
    state = DetState(t=0, I=realize_initial(ic, window), R=GridField(window))
    out = [state]
    for _ in range(steps):
        state = det_step(state, theta, max_radius=max_radius)
        if record == "all":
            out.append(state)
    if record != "all":
        out = [out[0], state] if steps > 0 else [state]
    return out


def frontier_layer_sequences(
    theta: float, gamma: float, i_max: int, n_max: int
) -> np.ndarray:
    """Layer values along the frontier under the diagonal-line start.

    Returns a matrix Y with Y[i-1, n] = I_{n+i-1}(n, 0) for layers
    i = 1..i_max and antidiagonals n = 0..n_max.  Uses the reduced scalar
    recursions (the field is constant on antidiagonals): with
    alpha = exp((1+theta)/5) and y_t^(i) the layer-i value at time t,

        y_{t+1}^(1) = 1 - alpha^(-2 y_t^(1)),  y_0^(1) = gamma,
        y_{i-1}^(i) = (1 - sum_j<i y_{j-1}^(j))
                      * (1 - alpha^(-(4 y^(i-2) + y^(i-1)))|_{t=i-2}),
        y_{t+1}^(i) = (1 - sum_j<i y_{t+1-i+j}^(j))
                      * (1 - alpha^(-(2 y_t^(i) + y_t^(i-1) + 2 y_t^(i-2)))).

    The first line of each layer doubles the coefficient of y^(i-2) because
    the site on the starting line sees its mirror image across it.
    """
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if i_max < 1 or n_max < 0:
        raise ValueError("need i_max >= 1 and n_max >= 0")
    c = (1.0 + theta) / 5.0
    t_max = n_max + i_max - 1
    # y[i, t]; row 0 is the identically-zero "layer 0"
    y = np.zeros((i_max + 1, t_max + 1))
    y[1, 0] = gamma
    for t in range(t_max):
        y[1, t + 1] = -math.expm1(-2.0 * c * y[1, t])
    for i in range(2, i_max + 1):
        # first value, on the starting line (mirrored neighbor)
        susceptible = 1.0 - sum(y[j, j - 1] for j in range(1, i))
        y[i, i - 1] = susceptible * -math.expm1(
            -c * (4.0 * y[i - 2, i - 2] + y[i - 1, i - 2])
        )
        for t in range(i - 1, t_max):
            susceptible = 1.0 - sum(y[j, t + 1 - i + j] for j in range(1, i))
            y[i, t + 1] = susceptible * -math.expm1(
                -c * (2.0 * y[i, t] + y[i - 1, t] + 2.0 * y[i - 2, t])
            )
    out = np.zeros((i_max, n_max + 1))
    for i in range(1, i_max + 1):
        out[i - 1, :] = y[i, i - 1 : i - 1 + n_max + 1]
    return out


def cumulative_step(D: GridField, I0: GridField, theta: float) -> GridField:
    """One step of the cumulative-infection recursion.

    D_{n+1}(x) = I_0(x) + (1 - I_0(x)) (1 - exp(-(1+theta)/5 * Dtilde_n(x))),
    where D_n = I_n + R_n.  The window grows by one so no mass is lost.
    """
    c = (1.0 + theta) / 5.0
    grown = D.grown(1)
    w = grown.window
    i0 = np.zeros(w.shape)
    x0, y0 = I0.window.x_lo - w.x_lo, I0.window.y_lo - w.y_lo
    i0[x0 : x0 + I0.data.shape[0], y0 : y0 + I0.data.shape[1]] = I0.data
    new = i0 + (1.0 - i0) * -np.expm1(-c * neighbor_sum(grown.data))
    return GridField(w, new)


def final_proportion_field(
    I0: GridField,
    theta: float,
    tol: float = 1e-9,
    max_sweeps: int = 100_000,
    boundary_check: bool = True,
):
    """Ultimate infection proportion: the unique solution of

        f(x) = I_0(x) + (1 - I_0(x)) (1 - exp(-(1+theta)/5 * ftilde(x)))

    on the window of I_0, computed twice -- monotone iteration up from I_0
    and down from 1 -- until the two limits agree within tol.  Sites outside
    the window contribute the value of the nearest in-window site (replicate
    padding), which freezes the truncation at the boundary ring.

    Returns (field, info) where info records sweeps, the final up/down gap
    and the worst boundary-ring deviation from the survival probability.
    """
    if not I0.data.any():
        raise ValueError("initial condition must not be identically zero")
    c = (1.0 + theta) / 5.0
    i0 = I0.data
    u = i0.copy()
    v = np.ones_like(i0)

    def sweep(f):
        padded = np.pad(f, 1, mode="edge")
        tilde = (
            padded[1:-1, 1:-1]
            + padded[:-2, 1:-1]
            + padded[2:, 1:-1]
            + padded[1:-1, :-2]
            + padded[1:-1, 2:]
        )
        return i0 + (1.0 - i0) * -np.expm1(-c * tilde)

    gap = float("inf")
    sweeps = 0
    while sweeps < max_sweeps:
        u = sweep(u)
        v = sweep(v)
        sweeps += 1
        gap = float(np.max(np.abs(v - u)))
        if gap <= tol:
            break
    if gap > tol:
        raise ConvergenceError(
            f"up/down gap {gap} above tol {tol} after {sweeps} sweeps; "
            f"enlarge the box or relax tol"
        )
    f = 0.5 * (u + v)
    iota = survival_probability(theta)
    ring = np.concatenate([f[0, :], f[-1, :], f[:, 0], f[:, -1]])
    boundary_dev = float(np.max(np.abs(ring - iota)))
    if boundary_check and boundary_dev > 2.0 * tol:
        raise ConvergenceError(
            f"boundary ring deviates from the survival probability by "
            f"{boundary_dev} (> 2 tol); box too small for this start"
        )
    info = {"sweeps": sweeps, "gap": gap, "boundary_dev": boundary_dev, "iota": iota}
    return GridField(I0.window, f), info


@dataclass(frozen=True)
class DerivativeField:
    """Seed derivative g(m, n) of the frontier value, in log space.

    g(m, n) = (log alpha)^(m+n) * binom(m+n, m) grows along direction
    s = m/(m+n) exactly when log(alpha) / (s^s (1-s)^(1-s)) > 1, which
    locates the speed-one cone.
    """

    theta: float
    log_values: np.ndarray

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)


def frontier_derivative_field(theta: float, m_max: int, n_max: int) -> DerivativeField:
    if m_max < 0 or n_max < 0:
        raise ValueError("m_max and n_max must be >= 0")
    c = (1.0 + theta) / 5.0
    m = np.arange(m_max + 1)[:, None]
    n = np.arange(n_max + 1)[None, :]
    log_g = (m + n) * math.log(c) + gammaln(m + n + 1) - gammaln(m + 1) - gammaln(n + 1)
    return DerivativeField(theta=theta, log_values=log_g)
