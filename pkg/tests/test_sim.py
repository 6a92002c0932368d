"""Stochastic simulator: exact laws, determinism, invariants, estimators."""

import math

import numpy as np
import pytest
from scipy.stats import chi2 as chi2_dist

from sirlattice.fields import GridField, Window
from sirlattice.params import InitialCondition, ModelParams
from sirlattice.rng import step_generator
from sirlattice.sim import (
    MonteCarloReport,
    RecordPolicy,
    delay_distribution,
    estimate_survival,
    final_proportion_profile,
    frontier_statistics,
    realize_counts,
    sim_run,
    sim_step,
)
from sirlattice.solvers import survival_probability


class TestSimStep:
    def test_no_infected_neighbors_no_infection(self):
        params = ModelParams(2.0, 10)
        w = Window.square(3)
        i0 = GridField(w, dtype=np.int64)
        r0 = GridField(w, dtype=np.int64)
        r0.set(0, 0, 10)  # recovered mass only
        i1, r1 = sim_step(i0, r0, params, step_generator(1, 0, 0))
        assert not i1.data.any()
        assert r1.get(0, 0) == 10

    def test_no_susceptibles_no_infection(self):
        params = ModelParams(2.0, 5)
        w = Window.square(2)
        i0 = GridField(w, dtype=np.int64)
        i0.set(0, 0, 5)
        r0 = GridField(w, dtype=np.int64)
        r0.set(1, 0, 0)
        # neighbor (1,0) fully recovered: no trials there
        r0.set(1, 0, 5)
        i1, _ = sim_step(i0, r0, params, step_generator(1, 0, 0))
        assert i1.get(1, 0) == 0
        assert i1.get(0, 0) == 0  # origin itself fully infected: S=0

    def test_single_bernoulli_law(self):
        # N=1 and theta=1.5 make the per-pair probability exactly 0.5
        params = ModelParams(1.5, 1)
        w = Window.square(1)
        n = 60_000
        count = 0
        for rep in range(n):
            i0 = GridField(w, dtype=np.int64)
            i0.set(0, 0, 1)
            i1, _ = sim_step(i0, GridField(w, dtype=np.int64), params, step_generator(9, rep, 0))
            count += int(i1.get(1, 0))
        assert abs(count / n - 0.5) < 3.0 * math.sqrt(0.25 / n)

    def test_one_step_joint_law_chi_square(self):
        # N=3 at the origin: each of the four neighbors draws Bin(3, q)
        # independently; chi-square at significance 0.001
        n_vil, theta = 3, 2.0
        params = ModelParams(theta, n_vil)
        q = -math.expm1(n_vil * math.log1p(-params.p_edge))
        pmf = [math.comb(n_vil, k) * q**k * (1 - q) ** (n_vil - k) for k in range(n_vil + 1)]
        w = Window.square(1)
        neigh = [(1, 0), (-1, 0), (0, 1), (0, -1)]
        n = 20_000
        observed: dict = {}
        for rep in range(n):
            i0 = GridField(w, dtype=np.int64)
            i0.set(0, 0, n_vil)
            i1, _ = sim_step(i0, GridField(w, dtype=np.int64), params, step_generator(31, rep, 0))
            key = tuple(int(i1.get(*s)) for s in neigh)
            observed[key] = observed.get(key, 0) + 1
        stat = 0.0
        cells = 0
        import itertools

        for combo in itertools.product(range(n_vil + 1), repeat=4):
            p = math.prod(pmf[k] for k in combo)
            if p * n >= 5:
                o = observed.get(combo, 0)
                stat += (o - n * p) ** 2 / (n * p)
                cells += 1
        crit = float(chi2_dist.ppf(0.999, cells - 1))
        assert stat < crit, (stat, crit)


class TestSimRun:
    def test_bitwise_determinism(self):
        params = ModelParams(2.0, 80)
        runs = [
            sim_run(InitialCondition.unit(), params, 25, seed=42, record=RecordPolicy("all"))
            for _ in range(2)
        ]
        for (t1, i1, r1), (t2, i2, r2) in zip(runs[0].slices, runs[1].slices):
            assert t1 == t2
            assert np.array_equal(i1.data, i2.data)
            assert np.array_equal(r1.data, r2.data)

    def test_different_seed_differs(self):
        params = ModelParams(2.0, 80)
        a = sim_run(InitialCondition.unit(), params, 20, seed=1, record=RecordPolicy("final"))
        b = sim_run(InitialCondition.unit(), params, 20, seed=2, record=RecordPolicy("final"))
        ta, ia, ra = a.slices[-1]
        tb, ib, rb = b.slices[-1]
        same_shape = ia.data.shape == ib.data.shape
        assert not (same_shape and np.array_equal(ia.data, ib.data))

    def test_conservation_and_speed_limit(self):
        params = ModelParams(2.0, 60)
        run = sim_run(InitialCondition.origin_fraction(1.0), params, 18, seed=5, record=RecordPolicy("all"))
        for t, i_f, r_f in run.slices:
            s = params.village_size - i_f.data - r_f.data
            assert s.min() >= 0
            xs, ys = np.nonzero(i_f.data)
            if len(xs):
                dist = np.abs(xs + i_f.window.x_lo) + np.abs(ys + i_f.window.y_lo)
                assert dist.max() <= t

    def test_recovered_monotone(self):
        params = ModelParams(2.0, 40)
        run = sim_run(InitialCondition.unit(), params, 15, seed=8, record=RecordPolicy("all"))
        prev = None
        for t, i_f, r_f in run.slices:
            cur = GridField(r_f.window, r_f.data.copy())
            if prev is not None:
                grown = prev.grown((cur.window.x_hi - prev.window.x_hi))
                assert np.all(cur.data >= grown.data)
            prev = cur

    def test_extinction_flag(self):
        # theta tiny: one individual usually fails to spread
        params = ModelParams(0.05, 30)
        extinct = 0
        for rep in range(30):
            run = sim_run(InitialCondition.unit(), params, 60, seed=77, replicate=rep, record=RecordPolicy("none"))
            if run.extinct_at is not None:
                extinct += 1
                assert run.final_infected_total == 0
        assert extinct > 20

    def test_delay_tracking_consistent_with_slices(self):
        params = ModelParams(2.0, 100)
        run = sim_run(
            InitialCondition.unit(), params, 20, seed=12,
            record=RecordPolicy("all"), track_delay=True,
        )
        recomputed = {}
        for t, i_f, r_f in run.slices:
            xs, ys = np.nonzero(i_f.data)
            for n in np.unique(xs + i_f.window.x_lo + ys + i_f.window.y_lo):
                n = int(n)
                if n >= 1 and n not in recomputed:
                    recomputed[n] = t
        assert recomputed == run.first_hit
        delays = run.delays()
        assert all(v >= 0 for v in delays.values())

    def test_frontier_capture_matches_slices(self):
        params = ModelParams(2.0, 100)
        run = sim_run(
            InitialCondition.origin_fraction(1.0), params, 12, seed=3,
            record=RecordPolicy("all"), track_frontier=True,
        )
        for n in range(13):
            t, i_f, r_f = run.slices[n]
            expect = i_f.antidiagonal(n, 0, n)
            assert np.array_equal(run.frontier_w[n], expect)

    def test_record_policies(self):
        params = ModelParams(2.0, 30)
        ic = InitialCondition.unit()
        assert sim_run(ic, params, 10, 1, record=RecordPolicy("none")).slices == []
        assert len(sim_run(ic, params, 10, 1, record=RecordPolicy("all")).slices) == 11
        final = sim_run(ic, params, 10, 1, record=RecordPolicy("final")).slices
        assert [t for t, _, _ in final] == [10]
        band = sim_run(ic, params, 10, 1, record=RecordPolicy("band", band=3)).slices
        assert [t for t, _, _ in band] == [8, 9, 10]
        times = sim_run(ic, params, 10, 1, record=RecordPolicy("times", times=(4, 7))).slices
        assert [t for t, _, _ in times] == [4, 7, 10]

    def test_realize_counts_validation(self):
        params = ModelParams(2.0, 10)
        with pytest.raises(ValueError):
            realize_counts(InitialCondition.origin_fraction(0.05), params)  # floor = 0
        with pytest.raises(ValueError):
            realize_counts(InitialCondition.diagonal_line(1.0), params)  # needs radius
        f = GridField(Window.square(1), dtype=np.int64)
        f.set(0, 0, 11)
        with pytest.raises(ValueError):
            realize_counts(InitialCondition("custom", field=f), params)


class TestEstimators:
    def test_survival_macroscopic_start_survives(self):
        params = ModelParams(2.0, 100)
        rep = estimate_survival(params, InitialCondition.origin_fraction(1.0), 30, 60, seed=4)
        assert rep.estimates["survival"][0] >= 0.99
        assert rep.estimates["reference"][0] == 1.0

    def test_survival_weakly_supercritical_is_rare(self):
        params = ModelParams(0.1, 50)
        rep = estimate_survival(params, InitialCondition.unit(), 40, 200, seed=4)
        assert rep.estimates["survival"][0] < 0.5
        assert abs(rep.estimates["reference"][0] - survival_probability(0.1)) < 1e-12

    def test_parallel_matches_serial(self):
        params = ModelParams(2.0, 60)
        kw = dict(t_max=25, n_reps=40, seed=123)
        a = estimate_survival(params, InitialCondition.unit(), workers=1, **kw)
        b = estimate_survival(params, InitialCondition.unit(), workers=2, **kw)
        assert a.estimates["survival"] == b.estimates["survival"]
        assert a.extra["survived"] == b.extra["survived"]

    def test_delay_distribution_mass_and_tail(self):
        params = ModelParams(2.0, 300)
        rep = delay_distribution(params, 120, 50, seed=9, i_max=10, workers=1)
        mass = sum(rep.estimates[f"K={i}"][0] for i in range(11))
        assert abs(mass - 1.0) < 0.05  # nearly all delays are small
        tail = [rep.estimates[f"K={i}"][0] for i in range(3, 11)]
        assert all(b <= a + 0.02 for a, b in zip(tail, tail[1:]))

    def test_delay_needs_supercritical_cone(self):
        with pytest.raises(ValueError):
            delay_distribution(ModelParams(1.2, 100), 10, 10, seed=1)

    def test_final_profile_origin_fully_infected(self):
        params = ModelParams(2.0, 50)
        rep = final_proportion_profile(
            params, InitialCondition.origin_fraction(1.0), 15, 20, [(0, 0), (3, 0)], seed=6
        )
        est, ci = rep.estimates["R@0,0"]
        assert est == 1.0 and ci == 0.0

    def test_frontier_statistics_requires_slices(self):
        params = ModelParams(2.0, 100)
        run = sim_run(InitialCondition.origin_fraction(1.0), params, 12, seed=3, record=RecordPolicy("none"))
        with pytest.raises(ValueError):
            frontier_statistics(run, 2.0, 0.05)

    def test_report_csv(self, tmp_path):
        rep = MonteCarloReport(10, {"a": (0.5, 0.1), "b": (1.0, 0.0)})
        path = tmp_path / "r.csv"
        rep.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "name,estimate,ci95,n"
        assert lines[1] == "a,0.5,0.1,10"


class TestBranchingBound:
    def test_mean_growth_below_branching_envelope(self):
        # the expected infected total under the one-individual start never
        # exceeds (1+theta)^t
        params = ModelParams(2.0, 40)
        t_probe, n_reps = 3, 2500
        totals = [
            sim_run(
                InitialCondition.unit(), params, t_probe, seed=13, replicate=rep,
                record=RecordPolicy("none"),
            ).final_infected_total
            for rep in range(n_reps)
        ]
        mean = float(np.mean(totals))
        slack = 3.0 * float(np.std(totals)) / math.sqrt(n_reps)
        assert mean <= (1.0 + params.theta) ** t_probe + slack
