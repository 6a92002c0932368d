"""Exact stochastic simulation of the village SIR process.

One step draws, independently at every site x,

    I_{t+1}(x) ~ Binomial(S_t(x), 1 - (1 - p_edge)^Itilde_t(x)),
    R_{t+1}(x) = I_t(x) + R_t(x),

with Itilde the five-point neighborhood sum and p_edge = (1+theta)/(5N).
Binomial draws use numpy's exact sampler (inversion for n p <= 30, BTPE
accept-reject above), never a normal approximation.  Each (seed, replicate,
step) triple owns a dedicated counter-based stream, so replicates run in
parallel with no shared state and trajectories reproduce bit-for-bit
regardless of worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fields import GridField, Window, neighbor_sum
from .params import InitialCondition, ModelParams
from .rng import step_generator
from .solvers import cone_aperture, survival_probability

__all__ = [
    "RecordPolicy",
    "SimRun",
    "MonteCarloReport",
    "sim_step",
    "sim_run",
    "estimate_survival",
    "frontier_statistics",
    "delay_distribution",
    "final_proportion_profile",
]

_GROW = 16


class WindowOverflowError(RuntimeError):
    pass


@dataclass(frozen=True)
class RecordPolicy:
    """What to keep from a run: 'none', 'final', 'band' (the last ``band``
    slices), 'times' (the listed times plus the final slice) or 'all'."""

    kind: str = "band"
    band: int = 8
    times: tuple = ()

    def __post_init__(self):
        if self.kind not in ("none", "final", "band", "all", "times"):
            raise ValueError(f"unknown record policy {self.kind!r}")


@dataclass
class SimRun:
    params: ModelParams
    ic: InitialCondition
    seed: int
    replicate: int
    steps: int
    slices: list  # of (t, I: GridField, R: GridField)
    extinct_at: int | None
    final_infected_total: int
    first_hit: dict  # antidiagonal n >= 1 -> first time with mass on x+y=n
    frontier_w: list | None  # frontier_w[n][m] = I_n(m, n-m), m = 0..n
    frontier_z: list | None  # frontier_z[n][m] = I_{n+1}(m, n-m)

    def delays(self) -> dict:
        """K(n) = first_hit(n) - n for every reached antidiagonal."""
        return {n: t - n for n, t in sorted(self.first_hit.items())}

    def largest_reached_diagonal(self) -> int | None:
        return max(self.first_hit) if self.first_hit else None

    def slice_at(self, t: int):
        for ts, i_f, r_f in self.slices:
            if ts == t:
                return i_f, r_f
        raise KeyError(f"time {t} not recorded (policy kept {[s[0] for s in self.slices]})")


def _estimate_row(count: int, n: int) -> tuple:
    p = count / n
    return p, 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / n)


@dataclass
class MonteCarloReport:
    """Named point estimates with normal-approximation 95% intervals."""

    n_replicates: int
    estimates: dict  # name -> (estimate, ci95 half-width)
    extra: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("name,estimate,ci95,n\n")
            for name, (est, ci) in self.estimates.items():
                fh.write(f"{name},{est:.10g},{ci:.10g},{self.n_replicates}\n")


def realize_counts(ic: InitialCondition, params: ModelParams, radius: int | None = None) -> GridField:
    """Initial infected counts for the stochastic process."""
    n = params.village_size
    if ic.kind == "unit":
        f = GridField(Window.square(2), dtype=np.int64)
        f.set(0, 0, 1)
        return f
    if ic.kind == "gamma":
        k = math.floor(ic.gamma * n)
        if k < 1:
            raise ValueError(f"gamma {ic.gamma} infects nobody at village size {n}")
        f = GridField(Window.square(2), dtype=np.int64)
        f.set(0, 0, k)
        return f
    if ic.kind == "diag-line":
        if radius is None:
            raise ValueError("diag-line start needs an explicit window radius")
        k = math.floor(ic.gamma * n)
        if k < 1:
            raise ValueError(f"gamma {ic.gamma} infects nobody at village size {n}")
        f = GridField(Window.square(radius), dtype=np.int64)
        for x in range(-radius, radius + 1):
            if abs(-x) <= radius:
                f.set(x, -x, k)
        return f
    # custom
    src = ic.field
    data = np.asarray(src.data, dtype=np.int64)
    if data.min() < 0 or data.max() > n:
        raise ValueError("custom counts must lie in [0, N]")
    return GridField(src.window, data.copy())


def _step_arrays(i_arr, r_arr, village_size, log_q, gen):
    """Draw one step on raw arrays; returns the new infected counts."""
    itilde = neighbor_sum(i_arr)
    s_arr = village_size - i_arr - r_arr
    active = (itilde > 0) & (s_arr > 0)
    i_new = np.zeros_like(i_arr)
    if active.any():
        flat = np.flatnonzero(active.ravel())  # canonical row-major order
        p = -np.expm1(itilde.ravel()[flat] * log_q)
        i_new.ravel()[flat] = gen.binomial(s_arr.ravel()[flat], p)
    return i_new


def sim_step(I: GridField, R: GridField, params: ModelParams, gen: np.random.Generator):
    """One exact step on count fields (window unchanged; callers grow it)."""
    if I.window != R.window:
        raise ValueError("I and R must share a window")
    log_q = math.log1p(-params.p_edge)
    i_new = _step_arrays(I.data, R.data, params.village_size, log_q, gen)
    return GridField(I.window, i_new), GridField(R.window, I.data + R.data)


def _boundary_active(data) -> bool:
    return bool(data[0, :].any() or data[-1, :].any() or data[:, 0].any() or data[:, -1].any())


def sim_run(
    ic: InitialCondition,
    params: ModelParams,
    steps: int,
    seed: int,
    record: RecordPolicy = RecordPolicy(),
    replicate: int = 0,
    radius: int | None = None,
    max_radius: int | None = None,
    track_delay: bool = False,
    track_frontier: bool = False,
) -> SimRun:
    """Run the process for ``steps`` steps or until extinction.

    The window grows ahead of the support; ``max_radius`` bounds it.  With
    ``track_delay`` the first-arrival time of every antidiagonal x + y = n
    is recorded; with ``track_frontier`` the arrays I_n(m, n-m) and
    I_{n+1}(m, n-m) over m = 0..n are captured as the frontier passes.
    """
    i0 = realize_counts(ic, params, radius=radius)
    window = i0.window
    i_arr = i0.data.copy()
    r_arr = np.zeros_like(i_arr)
    log_q = math.log1p(-params.p_edge)
    n_village = params.village_size

    slices: list = []
    first_hit: dict = {}
    frontier_w: list | None = [] if track_frontier else None
    frontier_z: list | None = [] if track_frontier else None
    extinct_at = None

    def note_hits(t):
        xs, ys = np.nonzero(i_arr)
        if len(xs) == 0:
            return
        diags = np.unique(xs + window.x_lo + ys + window.y_lo)
        for n in diags:
            n = int(n)
            if n >= 1 and n not in first_hit:
                first_hit[n] = t

    def capture_frontier(t):
        # I_t on x + y = t (first quadrant) and I_t on x + y = t - 1
        for store, n in ((frontier_w, t), (frontier_z, t - 1)):
            if n < 0:
                continue
            m = np.arange(0, n + 1)
            xi = m - window.x_lo
            yi = (n - m) - window.y_lo
            ok = (xi >= 0) & (xi < i_arr.shape[0]) & (yi >= 0) & (yi < i_arr.shape[1])
            vals = np.zeros(n + 1, dtype=np.int64)
            vals[ok] = i_arr[xi[ok], yi[ok]]
            if len(store) == n:
                store.append(vals)
            elif len(store) > n:
                store[n] = vals

    def record_slice(t, final=False):
        if record.kind == "none":
            return
        if record.kind == "times" and t not in record.times and not final:
            return
        entry = (t, GridField(window, i_arr.copy()), GridField(window, r_arr.copy()))
        if record.kind == "all":
            slices.append(entry)
        elif record.kind == "band":
            slices.append(entry)
            while len(slices) > record.band:
                slices.pop(0)
        elif record.kind == "times":
            if not any(s[0] == t for s in slices):
                slices.append(entry)
        elif record.kind == "final":
            slices.clear()
            slices.append(entry)

    if track_delay:
        note_hits(0)
    if track_frontier:
        capture_frontier(0)
    record_slice(0)

    last_t = 0
    for t in range(1, steps + 1):
        if not i_arr.any():
            extinct_at = t - 1 if extinct_at is None else extinct_at
            break
        if _boundary_active(i_arr):
            window = window.dilated(_GROW)
            if max_radius is not None and max(
                -window.x_lo, window.x_hi, -window.y_lo, window.y_hi
            ) > max_radius:
                raise WindowOverflowError(
                    f"window {window} exceeds configured maximum radius {max_radius}"
                )
            pad = _GROW
            i_arr = np.pad(i_arr, pad)
            r_arr = np.pad(r_arr, pad)
        gen = step_generator(seed, replicate, t - 1)
        i_next = _step_arrays(i_arr, r_arr, n_village, log_q, gen)
        r_arr = i_arr + r_arr
        i_arr = i_next
        if track_delay:
            note_hits(t)
        if track_frontier:
            capture_frontier(t)
        record_slice(t, final=(t == steps))
        last_t = t
        if extinct_at is None and not i_arr.any():
            extinct_at = t

    if record.kind in ("times", "final") and not any(s[0] == last_t for s in slices):
        slices.append((last_t, GridField(window, i_arr.copy()), GridField(window, r_arr.copy())))

    return SimRun(
        params=params,
        ic=ic,
        seed=seed,
        replicate=replicate,
        steps=steps,
        slices=slices,
        extinct_at=extinct_at,
        final_infected_total=int(i_arr.sum()),
        first_hit=first_hit,
        frontier_w=frontier_w,
        frontier_z=frontier_z,
    )


# ---------------------------------------------------------------------------
# Replicate pools


def _pool_map(worker, arg_chunks, workers):
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(workers, len(arg_chunks)))
    if workers == 1:
        return [worker(a) for a in arg_chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, arg_chunks))


def _chunks(n_reps, n_chunks):
    base = list(range(n_reps))
    size = max(1, math.ceil(n_reps / n_chunks))
    return [base[i : i + size] for i in range(0, n_reps, size)]


def _survival_worker(args):
    theta, village_size, ic_kind, gamma, steps, seed, reps, threshold = args
    params = ModelParams(theta, village_size)
    ic = InitialCondition(ic_kind, gamma=gamma) if ic_kind != "unit" else InitialCondition.unit()
    out = []
    for rep in reps:
        run = sim_run(ic, params, steps, seed, record=RecordPolicy("none"), replicate=rep)
        out.append(run.extinct_at is None and run.final_infected_total > threshold)
    return out


def estimate_survival(
    params: ModelParams,
    ic: InitialCondition,
    t_max: int,
    n_reps: int,
    seed: int,
    extinct_threshold: int = 0,
    workers: int | None = None,
) -> MonteCarloReport:
    """Fraction of replicates with infected mass above the threshold at
    t_max, against the analytic reference (survival probability for the
    single-individual start, 1 for the macroscopic one)."""
    if n_reps < 1:
        raise ValueError("need at least one replicate")
    chunks = _chunks(n_reps, (workers or os.cpu_count() or 1) * 4)
    args = [
        (params.theta, params.village_size, ic.kind, ic.gamma, t_max, seed, reps, extinct_threshold)
        for reps in chunks
    ]
    flags = [s for chunk in _pool_map(_survival_worker, args, workers) for s in chunk]
    count = sum(flags)
    est, ci = _estimate_row(count, n_reps)
    reference = survival_probability(params.theta) if ic.kind == "unit" else 1.0
    return MonteCarloReport(
        n_replicates=n_reps,
        estimates={"survival": (est, ci), "reference": (reference, 0.0)},
        extra={"survived": flags},
    )


def cone_range(theta: float, n: int, eps: float) -> tuple:
    """Integer m-range strictly inside the speed-one cone at antidiagonal n."""
    kappa = cone_aperture(theta)
    m_lo = math.floor((kappa + eps) * n) + 1
    m_hi = math.ceil((1.0 - kappa - eps) * n) - 1
    if m_hi < m_lo:
        raise ValueError(f"empty cone range at n={n}, eps={eps}")
    return m_lo, m_hi


def frontier_statistics(
    run: SimRun, theta: float, eps: float, n: int | None = None, i_max: int = 4,
    delay: int = 0,
) -> dict:
    """Per-layer infection proportions inside the cone at antidiagonal n.

    Layer i lives at time n + delay + i - 1 (``delay`` is the frontier lag
    K(n) of the run, nonzero for the single-individual start); the run must
    have those slices recorded.  Returns {layer: {"mean", "std", "count",
    "values"}} plus the m-range used.
    """
    if not run.slices:
        raise ValueError("run recorded no slices")
    times = [t for t, _, _ in run.slices]
    if n is None:
        n = max(times) - delay - (i_max - 1)
    if n < 1:
        raise ValueError("run too short for frontier statistics")
    m_lo, m_hi = cone_range(theta, n, eps)
    n_village = run.params.village_size
    out = {"n": n, "delay": delay, "m_range": (m_lo, m_hi), "layers": {}}
    for i in range(1, i_max + 1):
        t = n + delay + i - 1
        if t not in times:
            raise ValueError(f"slice {t} not recorded; run too short or band too narrow")
        i_field, _ = run.slice_at(t)
        vals = i_field.antidiagonal(n, m_lo, m_hi) / n_village
        out["layers"][i] = {
            "mean": float(vals.mean()),
            "std": float(vals.std()),
            "count": len(vals),
            "values": vals,
        }
    return out


def _delay_worker(args):
    theta, village_size, steps, seed, reps = args
    params = ModelParams(theta, village_size)
    out = []
    for rep in reps:
        run = sim_run(
            InitialCondition.unit(), params, steps, seed,
            record=RecordPolicy("none"), replicate=rep, track_delay=True,
        )
        if run.extinct_at is not None or not run.first_hit:
            out.append(None)
        else:
            n_star = run.largest_reached_diagonal()
            out.append(run.first_hit[n_star] - n_star)
    return out


def delay_distribution(
    params: ModelParams,
    n_reps: int,
    t_max: int,
    seed: int,
    i_max: int = 8,
    workers: int | None = None,
) -> MonteCarloReport:
    """Distribution of the frontier delay K over surviving replicates.

    K is measured at the largest antidiagonal reached by t_max; the
    theoretical reference for P(K = i) is layer level i+1 (an unconditional
    large-village limit, so the conditional estimates sit slightly above).
    Requires theta > 1.5 and the single-individual start.
    """
    if params.theta <= 1.5:
        raise ValueError("frontier delay needs theta > 1.5")
    chunks = _chunks(n_reps, (workers or os.cpu_count() or 1) * 4)
    args = [(params.theta, params.village_size, t_max, seed, reps) for reps in chunks]
    delays = [d for chunk in _pool_map(_delay_worker, args, workers) for d in chunk]
    surviving = [d for d in delays if d is not None]
    n_surv = len(surviving)
    if n_surv == 0:
        raise ValueError("no surviving replicates")
    estimates = {"surviving_fraction": _estimate_row(n_surv, n_reps)}
    for i in range(i_max + 1):
        count = sum(1 for d in surviving if d == i)
        estimates[f"K={i}"] = _estimate_row(count, n_surv)
    return MonteCarloReport(
        n_replicates=n_surv,
        estimates=estimates,
        extra={"delays": surviving, "total_replicates": n_reps},
    )


def _profile_worker(args):
    theta, village_size, ic_kind, gamma, steps, seed, reps, probes = args
    params = ModelParams(theta, village_size)
    ic = InitialCondition(ic_kind, gamma=gamma) if ic_kind != "unit" else InitialCondition.unit()
    out = []
    for rep in reps:
        run = sim_run(ic, params, steps, seed, record=RecordPolicy("final"), replicate=rep)
        t, i_f, r_f = run.slices[-1]
        survived = run.extinct_at is None
        vals = [int(i_f.get(x, y)) + int(r_f.get(x, y)) for x, y in probes]
        out.append((survived, vals))
    return out


def final_proportion_profile(
    params: ModelParams,
    ic: InitialCondition,
    t_max: int,
    n_reps: int,
    probe_sites: list,
    seed: int,
    condition_on_survival: bool | None = None,
    workers: int | None = None,
) -> MonteCarloReport:
    """Proportion ever infected, (I + R)/N at t_max, at chosen probe sites.

    For the single-individual start the estimates are conditioned on
    survival (rejection of extinct replicates) unless overridden.
    """
    if condition_on_survival is None:
        condition_on_survival = ic.kind == "unit"
    probes = [tuple(p) for p in probe_sites]
    chunks = _chunks(n_reps, (workers or os.cpu_count() or 1) * 4)
    args = [
        (params.theta, params.village_size, ic.kind, ic.gamma, t_max, seed, reps, probes)
        for reps in chunks
    ]
    rows = [r for chunk in _pool_map(_profile_worker, args, workers) for r in chunk]
    if condition_on_survival:
        rows = [r for r in rows if r[0]]
    if not rows:
        raise ValueError("no replicates left after conditioning")
    n_village = params.village_size
    estimates = {}
    per_probe = {}
    for j, probe in enumerate(probes):
        vals = np.array([r[1][j] for r in rows], dtype=np.float64) / n_village
        mean = float(vals.mean())
        ci = 1.96 * float(vals.std(ddof=1)) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
        estimates[f"R@{probe[0]},{probe[1]}"] = (mean, ci)
        per_probe[probe] = vals
    return MonteCarloReport(
        n_replicates=len(rows),
        estimates=estimates,
        extra={"per_probe": per_probe, "conditioned": condition_on_survival},
    )
