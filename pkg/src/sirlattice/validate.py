"""Desk-scale oracle suite: every subsystem checked against brute force.

Each check is a zero-argument callable returning (ok, detail); the CLI
renders them as PASS/FAIL lines and a machine-readable CSV.  The heavy
lifting lives in small exact-law helpers: a closed-form trajectory law for
the Markov chain on a micro box, exhaustive enumeration of percolation
edge configurations, and a pooled chi-square comparison.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.stats import chi2 as chi2_dist

from .det import det_run, cumulative_step, final_proportion_field, frontier_layer_sequences, realize_initial
from .fields import GridField, Window
from .params import InitialCondition, ModelParams
from .paths import (
    count_lrw,
    count_oriented_strip,
    count_srw,
    dp_lrw,
    dp_oriented_strip,
    dp_srw,
    growth_rate_check,
)
from .percolation import (
    OrientedPercolationSample,
    PercolationSample,
    bfs_levels,
    enumerate_edges,
    oriented_frontier,
    sir_from_percolation,
    sources_from_counts,
)
from .rng import step_generator
from .sim import RecordPolicy, sim_run, sim_step
from .solvers import (
    axis_fixed_point,
    cone_aperture,
    frontier_level,
    layer_levels,
    survival_probability,
)
from .speed import binary_entropy, direction_ratio, rate_functional, shape_curve, spreading_speed

__all__ = [
    "full_suite",
    "percolation_checks",
    "exact_chain_law",
    "exact_percolation_law",
    "chi_square_vs_exact",
]


# ---------------------------------------------------------------------------
# Exact-law helpers


def _binom_pmf(n, k, p):
    return math.comb(n, k) * p**k * (1.0 - p) ** (n - k)


def exact_chain_law(box: Window, village_size: int, p_edge: float, i0: dict) -> dict:
    """Exact distribution of the full trajectory (I_0, ..., I_last_nonzero)
    of the Markov chain on a finite box; keys are tuples of I-field tuples."""
    sites = list(box.sites())
    idx = {s: i for i, s in enumerate(sites)}
    i0_vec = tuple(i0.get(s, 0) for s in sites)
    law: dict = {}
    # depth-first over the trajectory tree
    stack = [((i0_vec,), i0_vec, tuple(0 for _ in sites), 1.0)]
    while stack:
        hist, i_vec, r_vec, prob = stack.pop()
        if all(v == 0 for v in i_vec):
            law[hist[:-1]] = law.get(hist[:-1], 0.0) + prob
            continue
        per_site = []
        for s in sites:
            j = idx[s]
            s_cnt = village_size - i_vec[j] - r_vec[j]
            itilde = sum(
                i_vec[idx[t]]
                for t in sites
                if abs(t[0] - s[0]) + abs(t[1] - s[1]) <= 1
            )
            q = -math.expm1(itilde * math.log1p(-p_edge)) if itilde else 0.0
            if s_cnt == 0 or q == 0.0:
                per_site.append([(0, 1.0)])
            else:
                per_site.append([(k, _binom_pmf(s_cnt, k, q)) for k in range(s_cnt + 1)])
        new_r = tuple(i + r for i, r in zip(i_vec, r_vec))
        for combo in itertools.product(*per_site):
            new_i = tuple(k for k, _ in combo)
            p = prob
            for _, pk in combo:
                p *= pk
            if p > 0.0:
                stack.append((hist + (new_i,), new_i, new_r, p))
    return law


def exact_percolation_law(box: Window, village_size: int, p_edge: float, i0_counts: GridField) -> dict:
    """Trajectory law of the graph layers by summing over all edge states."""
    template = PercolationSample(box, village_size, p_edge, seed=0)
    edges = enumerate_edges(template)
    sites = list(box.sites())
    law: dict = {}
    for bits in itertools.product((False, True), repeat=len(edges)):
        prob = 1.0
        for b in bits:
            prob *= p_edge if b else 1.0 - p_edge
        if prob == 0.0:
            continue
        sample = PercolationSample(
            box, village_size, p_edge, seed=0, forced=dict(zip(edges, bits))
        )
        traj = sir_from_percolation(sample, i0_counts)
        sig = tuple(
            tuple(int(f.get(*s)) for s in sites) for f, _ in traj
        )
        law[sig] = law.get(sig, 0.0) + prob
    return law


def chi_square_vs_exact(observed: dict, expected: dict, n: int, significance: float):
    """Pooled chi-square of observed counts against exact category
    probabilities (cells pooled so every expected count is >= 5)."""
    cats = sorted(expected, key=lambda c: -expected[c])
    pooled = []
    bucket_p, bucket_o = 0.0, 0
    for c in cats:
        bucket_p += expected[c]
        bucket_o += observed.get(c, 0)
        if bucket_p * n >= 5.0:
            pooled.append((bucket_o, bucket_p))
            bucket_p, bucket_o = 0.0, 0
    leftover_p = 1.0 - sum(p for _, p in pooled)
    leftover_o = n - sum(o for o, _ in pooled)
    if leftover_p * n >= 1.0 and pooled:
        o, p = pooled.pop()
        pooled.append((o + leftover_o, p + leftover_p))
    elif pooled:
        o, p = pooled.pop()
        pooled.append((o + leftover_o, p + leftover_p))
    stat = sum((o - n * p) ** 2 / (n * p) for o, p in pooled)
    df = max(len(pooled) - 1, 1)
    threshold = float(chi2_dist.ppf(1.0 - significance, df))
    return stat, threshold, df, stat < threshold


# ---------------------------------------------------------------------------
# Percolation cross-validation


def percolation_checks(
    seed=1, village_size=2, box_radius=1, theta=2.0, n_samples=20000, significance=0.001
):
    def check_enumeration():
        # N=1 on a 2x2 box: four edges, exhaustively enumerable
        box = Window(0, 1, 0, 1)
        p = 0.3
        i0 = GridField(box, np.array([[1, 0], [0, 0]], dtype=np.int64))
        perc = exact_percolation_law(box, 1, p, i0)
        chain = exact_chain_law(box, 1, p, {(0, 0): 1})
        keys = set(perc) | set(chain)
        worst = max(abs(perc.get(k, 0.0) - chain.get(k, 0.0)) for k in keys)
        ok = worst < 1e-12 and abs(sum(perc.values()) - 1.0) < 1e-12
        return ok, f"{len(keys)} trajectories, worst probability gap {worst:.2e}"

    def check_chi_square_unoriented():
        box = Window.square(box_radius)
        params = ModelParams(theta, village_size)
        p = params.p_edge
        n_vil = village_size
        i0 = GridField(box, dtype=np.int64)
        i0.set(0, 0, n_vil)
        # exact one-step law: neighbors of the origin, Bin(N, 1-(1-p)^N) each
        neigh = [s for s in box.sites() if abs(s[0]) + abs(s[1]) == 1]
        q = -math.expm1(n_vil * math.log1p(-p))
        pmf = [_binom_pmf(n_vil, k, q) for k in range(n_vil + 1)]
        expected = {
            combo: math.prod(pmf[k] for k in combo)
            for combo in itertools.product(range(n_vil + 1), repeat=len(neigh))
        }
        obs_sim: dict = {}
        obs_perc: dict = {}
        params_t = ModelParams(theta, n_vil)
        r0 = GridField(box, dtype=np.int64)
        for rep in range(n_samples):
            gen = step_generator(seed, rep, 0)
            i1, _ = sim_step(i0, r0, params_t, gen)
            key = tuple(int(i1.get(*s)) for s in neigh)
            obs_sim[key] = obs_sim.get(key, 0) + 1
            sample = PercolationSample(box, n_vil, p, seed=seed + 7_000_000 + rep)
            levels = bfs_levels(sample, sources_from_counts(i0))
            lv1 = levels[1] if len(levels) > 1 else GridField(box, dtype=np.int64)
            key = tuple(int(lv1.get(*s)) for s in neigh)
            obs_perc[key] = obs_perc.get(key, 0) + 1
        s1, t1, df1, ok1 = chi_square_vs_exact(obs_sim, expected, n_samples, significance)
        s2, t2, df2, ok2 = chi_square_vs_exact(obs_perc, expected, n_samples, significance)
        return ok1 and ok2, (
            f"simulator chi2 {s1:.1f} (df {df1}, crit {t1:.1f}); "
            f"graph chi2 {s2:.1f} (df {df2}, crit {t2:.1f})"
        )

    def check_chi_square_oriented():
        # W on the first diagonal steps vs the exact recursive law
        box = Window(0, 1, 0, 1)
        params = ModelParams(theta, village_size)
        p = params.p_edge
        n_vil = village_size
        line = GridField(box, dtype=np.int64)
        line.set(0, 0, n_vil)
        q1 = -math.expm1(n_vil * math.log1p(-p))
        expected: dict = {}
        for a in range(n_vil + 1):  # W(1,0)
            pa = _binom_pmf(n_vil, a, q1)
            for b in range(n_vil + 1):  # W(0,1)
                pb = _binom_pmf(n_vil, b, q1)
                qab = -math.expm1((a + b) * math.log1p(-p)) if a + b else 0.0
                for c in range(n_vil + 1):  # W(1,1)
                    pc = _binom_pmf(n_vil, c, qab) if qab or c == 0 else 0.0
                    if qab == 0.0:
                        pc = 1.0 if c == 0 else 0.0
                    expected[(a, b, c)] = expected.get((a, b, c), 0.0) + pa * pb * pc
        obs: dict = {}
        for rep in range(n_samples):
            sample = OrientedPercolationSample(box, n_vil, p, seed=seed + 9_000_000 + rep)
            w = oriented_frontier(sample, line)
            key = (int(w.get(1, 0)), int(w.get(0, 1)), int(w.get(1, 1)))
            obs[key] = obs.get(key, 0) + 1
        s, t, df, ok = chi_square_vs_exact(obs, expected, n_samples, significance)
        return ok, f"oriented chi2 {s:.1f} (df {df}, crit {t:.1f})"

    def check_monotone_in_sources():
        box = Window.square(2)
        params = ModelParams(theta, village_size)
        bad = 0
        for rep in range(200):
            sample = PercolationSample(box, village_size, params.p_edge, seed=seed + rep)
            small = GridField(box, dtype=np.int64)
            small.set(0, 0, 1)
            big = GridField(box, dtype=np.int64)
            big.set(0, 0, village_size)
            big.set(1, 0, 1)
            tr_small = sir_from_percolation(sample, small)
            tr_big = sir_from_percolation(sample, big)
            horizon = max(len(tr_small), len(tr_big))
            for t in range(horizon):
                r_small = tr_small[min(t, len(tr_small) - 1)]
                r_big = tr_big[min(t, len(tr_big) - 1)]
                # cumulative infected = I_n + R_n is monotone in the sources
                d_small = r_small[0].data + r_small[1].data
                d_big = r_big[0].data + r_big[1].data
                if (d_big < d_small).any():
                    bad += 1
                    break
        return bad == 0, f"{bad} of 200 seeds violated source monotonicity"

    return [
        ("percolation-enumeration-equality", check_enumeration),
        ("percolation-chi2-unoriented", check_chi_square_unoriented),
        ("percolation-chi2-oriented", check_chi_square_oriented),
        ("percolation-monotone-sources", check_monotone_in_sources),
    ]


# ---------------------------------------------------------------------------
# Full desk-scale suite


def full_suite(seed=1, chi2_samples=20000):
    checks = []

    def check_fixed_point_residuals():
        worst = 0.0
        for theta in [0.3, 1.0, 1.6, 2.0, 3.0, 4.5, 7.0]:
            i = survival_probability(theta)
            worst = max(worst, abs(1 - i - math.exp(-(1 + theta) * i)))
            if theta > 1.5:
                l = frontier_level(theta)
                worst = max(worst, abs(-math.expm1(-2 * (1 + theta) / 5 * l) - l))
            if 1.5 < theta < 4:
                k = cone_aperture(theta)
                worst = max(worst, abs(k**k * (1 - k) ** (1 - k) - (1 + theta) / 5))
            if theta > 4:
                g = axis_fixed_point(theta)
                worst = max(worst, abs(-math.expm1(-(1 + theta) / 5 * g) - g))
        return worst < 1e-12, f"worst residual {worst:.2e}"

    def check_iota_monotone():
        grid = [0.1 * k for k in range(1, 101)]
        vals = [survival_probability(t) for t in grid]
        mono = all(b > a for a, b in zip(vals, vals[1:]))
        above = all(v > t / (1 + t) for v, t in zip(vals, grid))
        return mono and above, "increasing and above theta/(1+theta) on the 0.1..10 grid"

    def check_layer_sum():
        worst = 0.0
        for theta in (1.6, 2.0, 3.0, 5.0):
            t = layer_levels(theta, 200)
            worst = max(worst, abs(t.partial_sums[-1] - t.iota))
        return worst < 1e-6, f"worst |sum - iota| = {worst:.2e}"

    def check_rate_endpoints():
        worst = 0.0
        for k in range(64):
            phi = 2 * math.pi * k / 64
            worst = max(worst, abs(rate_functional(1.0, phi) - binary_entropy(direction_ratio(phi))))
        v0 = abs(rate_functional(1e-6, math.pi / 4) - math.log(0.2))
        return worst < 1e-10 and v0 < 1e-3, f"endpoint gap {worst:.1e}, v->0 gap {v0:.1e}"

    def check_rate_monotone():
        for phi in (0.0, 0.3, math.pi / 4):
            vals = [rate_functional(v, phi) for v in np.linspace(0.02, 1.0, 50)]
            if not all(b > a for a, b in zip(vals, vals[1:])):
                return False, f"not increasing at phi={phi}"
        return True, "strictly increasing in v (50-point grid, 3 angles)"

    def check_speed_phases():
        ok = all(spreading_speed(5.0, phi) == 1.0 for phi in np.linspace(0, 2 * math.pi, 16))
        ok &= all(spreading_speed(1.0, phi) < 1.0 for phi in np.linspace(0, 2 * math.pi, 16))
        ok &= spreading_speed(2.0, math.pi / 4) == 1.0 and spreading_speed(2.0, 0.0) < 1.0
        return ok, "slow/coned/fast regimes at theta = 1, 2, 5"

    def check_shape_symmetry():
        sc = shape_curve(2.0, 120)
        ups = [u for _, u in sc.samples]
        worst = max(
            max(abs(ups[k] - ups[(120 - k) % 120]), abs(ups[k] - ups[(30 - k) % 120]))
            for k in range(120)
        )
        return worst < 1e-9, f"dihedral symmetry gap {worst:.1e}"

    def check_layers_vs_lattice():
        theta, i_max, n_max = 2.0, 4, 20
        mat = frontier_layer_sequences(theta, 1.0, i_max, n_max)
        traj = det_run(InitialCondition.diagonal_line(1.0), theta, n_max + i_max - 1, record="all")
        worst = 0.0
        for i in range(1, i_max + 1):
            for n in range(n_max + 1):
                worst = max(worst, abs(mat[i - 1, n] - traj[n + i - 1].I.get(n, 0)))
        return worst < 1e-12, f"reduced vs full recursion gap {worst:.1e}"

    def check_cumulative_recursion():
        theta = 2.0
        ic = InitialCondition.origin_fraction(0.5)
        traj = det_run(ic, theta, 30, record="all")
        i0 = realize_initial(ic, Window.square(0))
        d = GridField(i0.window, i0.data.copy())
        worst = 0.0
        for n in range(30):
            d = cumulative_step(d, i0, theta)
            ref = traj[n + 1]
            for x in range(-n - 1, n + 2):
                for y in range(-n - 1 + abs(x), n + 2 - abs(x)):
                    worst = max(worst, abs(d.get(x, y) - (ref.I.get(x, y) + ref.R.get(x, y))))
        return worst < 1e-12, f"cumulative vs slice sums gap {worst:.1e}"

    def check_final_proportion():
        i0 = realize_initial(InitialCondition.origin_fraction(0.2), Window.square(30))
        f, info = final_proportion_field(i0, 2.0, tol=1e-9)
        iota = info["iota"]
        ratio = (f.data - i0.data) / (1.0 - i0.data)
        ok = info["gap"] <= 1e-9 and float(ratio.min()) > iota - 2e-9
        mono = all(
            f.get(x, y) + 1e-12 >= max(f.get(x + 1, y), f.get(x, y + 1))
            for x in range(0, 29)
            for y in range(0, 29)
        )
        return ok and mono, (
            f"{info['sweeps']} sweeps, gap {info['gap']:.1e}, "
            f"boundary dev {info['boundary_dev']:.1e}"
        )

    def check_path_counts():
        for n in range(11):
            lrw = dp_lrw(n)
            srw = dp_srw(n)
            for m in range(-n, n + 1):
                for l in range(-(n - abs(m)), n - abs(m) + 1):
                    if count_lrw(m, l, n).value != lrw.get((m, l), 0):
                        return False, f"lazy count mismatch at {(m, l, n)}"
                    if count_srw(m, l, n).value != srw.get((m, l), 0):
                        return False, f"simple count mismatch at {(m, l, n)}"
        for n in range(15):
            total = sum(
                count_lrw(m, l, n).value
                for m in range(-n, n + 1)
                for l in range(-(n - abs(m)), n - abs(m) + 1)
            )
            if total != 5**n:
                return False, f"mass at n={n} is {total}, not 5^{n}"
        for k in range(1, 6):
            for n in range(11):
                table = dp_oriented_strip(n, k)
                for m in range(-k + 1, k):
                    if (n - m) % 2 == 0:
                        if count_oriented_strip(m, n, k).value != table.get(m, 0):
                            return False, f"strip mismatch at {(m, n, k)}"
        return True, "closed forms equal DP enumeration (walks n<=10, strips k<=5)"

    def check_growth_gap():
        rows = growth_rate_check(2.0, (1, 1), 0.5, [100, 200, 400])
        gaps = [r[3] for r in rows]
        return gaps[-1] < 0.05 and gaps[0] > gaps[-1], (
            "gaps " + ", ".join(f"{g:.4f}" for g in gaps)
        )

    def check_sim_determinism():
        params = ModelParams(2.0, 50)
        r1 = sim_run(InitialCondition.unit(), params, 25, seed=seed, record=RecordPolicy("final"))
        r2 = sim_run(InitialCondition.unit(), params, 25, seed=seed, record=RecordPolicy("final"))
        a, b = r1.slices[-1][1], r2.slices[-1][1]
        same = np.array_equal(a.data, b.data)
        return same, "identical slices for identical (seed, params, start)"

    def check_sim_invariants():
        params = ModelParams(2.0, 60)
        run = sim_run(InitialCondition.unit(), params, 20, seed=seed + 3, record=RecordPolicy("all"))
        for t, i_f, r_f in run.slices:
            s = params.village_size - i_f.data - r_f.data
            if s.min() < 0:
                return False, f"negative susceptible count at t={t}"
            xs, ys = np.nonzero(i_f.data)
            if len(xs):
                dist = np.abs(xs + i_f.window.x_lo) + np.abs(ys + i_f.window.y_lo)
                if dist.max() > t:
                    return False, f"infection beyond the speed-limit ball at t={t}"
        return True, "conservation and unit speed limit over 20 steps"

    def check_sim_one_step_law():
        # N=1, theta=1.5 puts probability exactly 0.5 on the neighbor
        params = ModelParams(1.5, 1)
        w = Window.square(1)
        count = 0
        n = chi2_samples
        for rep in range(n):
            i0 = GridField(w, dtype=np.int64)
            i0.set(0, 0, 1)
            i1, _ = sim_step(i0, GridField(w, dtype=np.int64), params, step_generator(seed, rep, 0))
            count += int(i1.get(1, 0))
        dev = abs(count / n - 0.5)
        lim = 3.0 * math.sqrt(0.25 / n)
        return dev < lim, f"frequency deviation {dev:.4f} (3 sigma = {lim:.4f})"

    def check_gw_mean_bound():
        # mean infected total under the one-individual start is at most (1+theta)^t
        params = ModelParams(2.0, 40)
        t_probe, n_reps = 3, 3000
        totals = []
        for rep in range(n_reps):
            run = sim_run(InitialCondition.unit(), params, t_probe, seed=seed + 11, replicate=rep, record=RecordPolicy("none"))
            totals.append(run.final_infected_total)
        mean = float(np.mean(totals))
        bound = (1.0 + params.theta) ** t_probe
        slack = 3.0 * float(np.std(totals)) / math.sqrt(n_reps)
        return mean <= bound + slack, f"mean {mean:.2f} vs branching bound {bound:.0f}"

    checks.extend(
        [
            ("solver-residuals", check_fixed_point_residuals),
            ("survival-monotone", check_iota_monotone),
            ("layer-sum-identity", check_layer_sum),
            ("rate-endpoints", check_rate_endpoints),
            ("rate-monotone", check_rate_monotone),
            ("speed-phase-transitions", check_speed_phases),
            ("shape-symmetry", check_shape_symmetry),
            ("layers-vs-lattice", check_layers_vs_lattice),
            ("cumulative-recursion", check_cumulative_recursion),
            ("ultimate-proportion", check_final_proportion),
            ("path-counts-exact", check_path_counts),
            ("growth-rate-gap", check_growth_gap),
            ("sim-determinism", check_sim_determinism),
            ("sim-invariants", check_sim_invariants),
            ("sim-one-step-law", check_sim_one_step_law),
            ("branching-mean-bound", check_gw_mean_bound),
        ]
    )
    checks.extend(percolation_checks(seed=seed, n_samples=chi2_samples))
    return checks
