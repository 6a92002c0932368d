"""Command-line front end: constants, curves, simulations, cross-checks.

Subcommands: solve | shape | simulate | det | montecarlo | paths |
percolation-check | validate.  Parameters come from an INI-style config
file (one section per command, flat key = value) with sane desk-scale
defaults; --seed/--threads/--out override the corresponding keys.  Every
command writes CSV (and PGM where a field is involved) plus rendered PNG
figures, and a manifest listing each output with its checksum.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .det import (
    det_run,
    final_proportion_field,
    frontier_layer_sequences,
    realize_initial,
)
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
    growth_rows_to_csv,
)
from .percolation import PercolationSample, enumerate_edges, sir_from_percolation
from .sim import (
    MonteCarloReport,
    RecordPolicy,
    delay_distribution,
    estimate_survival,
    final_proportion_profile,
    frontier_statistics,
    sim_run,
)
from .solvers import (
    axis_fixed_point,
    cone_aperture,
    frontier_level,
    layer_levels,
    survival_probability,
)
from .speed import binary_entropy, direction_ratio, rate_functional, shape_curve, spreading_speed


class ConfigError(ValueError):
    pass


def _parse_floats(s):
    return [float(v) for v in str(s).replace(";", ",").split(",") if v.strip()]


def _parse_ints(s):
    return [int(v) for v in str(s).replace(";", ",").split(",") if v.strip()]


def _parse_grid(s):
    """'start:stop:step' inclusive grid, or a comma list."""
    s = str(s)
    if ":" in s:
        start, stop, step = (float(v) for v in s.split(":"))
        n = int(round((stop - start) / step))
        return [round(start + k * step, 10) for k in range(n + 1) if start + k * step <= stop + 1e-9]
    return _parse_floats(s)


def _parse_pairs(s):
    """'x1,y1;x2,y2;...' site list."""
    out = []
    for part in str(s).split(";"):
        part = part.strip()
        if not part:
            continue
        x, y = part.split(",")
        out.append((int(x), int(y)))
    return out


def _parse_bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# schema per command: key -> (converter, default)
_SCHEMAS = {
    "solve": {
        "theta_grid": (_parse_grid, [round(0.1 * k, 10) for k in range(1, 101)]),
        "ell_terms": (int, 12),
    },
    "shape": {
        "thetas": (_parse_floats, [1.0, 2.0, 5.0]),
        "samples": (int, 720),
        "overlay_time": (int, 0),
    },
    "simulate": {
        "theta": (float, 2.0),
        "village_size": (int, 200),
        "steps": (int, 300),
        "ic": (str, "unit"),
        "gamma": (float, 0.5),
        "snapshots": (_parse_ints, []),
        "seed": (int, 1),
    },
    "det": {
        "theta": (float, 2.0),
        "gamma": (float, 0.2),
        "steps": (int, 80),
        "layer_count": (int, 5),
        "layer_horizon": (int, 200),
        "box_radius": (int, 60),
        "tol": (float, 1e-9),
    },
    "montecarlo": {
        "mode": (str, "survival"),
        "theta": (float, 2.0),
        "village_size": (int, 200),
        "ic": (str, "unit"),
        "gamma": (float, 0.5),
        "t_max": (int, 100),
        "replicates": (int, 200),
        "layer_eps": (float, 0.05),
        "layer_count": (int, 4),
        "frontier_n": (int, 0),
        "delay_max": (int, 6),
        "probes": (_parse_pairs, [(5, 0), (10, 0), (20, 0)]),
        "seed": (int, 1),
    },
    "paths": {
        "theta": (float, 2.0),
        "direction": (_parse_ints, [1, 1]),
        "speed": (float, 0.5),
        "lengths": (_parse_ints, [100, 200, 400]),
    },
    "percolation-check": {
        "village_size": (int, 2),
        "box_radius": (int, 1),
        "theta": (float, 2.0),
        "samples": (int, 20000),
        "significance": (float, 0.001),
        "seed": (int, 1),
    },
    "validate": {
        "seed": (int, 1),
        "chi2_samples": (int, 20000),
    },
}


def load_config(command: str, path: str | None, overrides: dict) -> dict:
    schema = _SCHEMAS[command]
    values = {k: default for k, (_, default) in schema.items()}
    if path:
        cp = configparser.ConfigParser()
        read = cp.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in cp.sections():
            if section not in _SCHEMAS:
                raise ConfigError(f"unknown config section [{section}]")
        if cp.has_section(command):
            for key, raw in cp.items(command):
                if key not in schema:
                    raise ConfigError(f"unknown key {key!r} in section [{command}]")
                conv = schema[key][0]
                try:
                    values[key] = conv(raw)
                except Exception as exc:
                    raise ConfigError(
                        f"bad value for {key!r} in section [{command}]: {raw!r} ({exc})"
                    ) from exc
    for key, val in overrides.items():
        if key in schema and val is not None:
            values[key] = val
    return values


class OutputSink:
    """Collects produced files and writes the run manifest."""

    def __init__(self, outdir: str, command: str, meta: dict):
        self.outdir = outdir
        self.command = command
        self.meta = meta
        self.files: list = []
        self.t0 = time.time()
        os.makedirs(outdir, exist_ok=True)

    def path(self, name: str) -> str:
        full = os.path.join(self.outdir, name)
        self.files.append(full)
        return full

    def write_manifest(self, config: dict):
        lines = [
            f"command={self.command}",
            f"version={__version__}",
        ]
        for k, v in self.meta.items():
            lines.append(f"{k}={v}")
        for k, v in sorted(config.items()):
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            lines.append(f"config.{k}={v}")
        lines.append(f"wall_clock_s={time.time() - self.t0:.3f}")
        for f in self.files:
            digest = hashlib.sha256(open(f, "rb").read()).hexdigest()
            lines.append(f"sha256.{os.path.basename(f)}={digest}")
        with open(os.path.join(self.outdir, "manifest.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _fmt(x):
    return f"{x:.10g}"


# ---------------------------------------------------------------------------
# solve


def cmd_solve(cfg, sink, figures=True):
    thetas = cfg["theta_grid"]
    m = cfg["ell_terms"]
    rows = []
    for theta in thetas:
        iota = survival_probability(theta)
        herd = 1.0 - 1.0 / (1.0 + theta)
        kappa = _fmt(cone_aperture(theta)) if theta > 1.5 else ""
        gamma1 = _fmt(axis_fixed_point(theta)) if theta > 4.0 else ""
        if theta > 1.5:
            ells = [_fmt(v) for v in layer_levels(theta, m).values]
        else:
            ells = [_fmt(0.0)] * m
        rows.append([_fmt(theta), _fmt(iota), kappa, gamma1, _fmt(herd)] + ells)
    path = sink.path("constants.csv")
    header = ["theta", "iota", "kappa", "gamma1", "herd_immunity"] + [
        f"ell{i}" for i in range(1, m + 1)
    ]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(r) + "\n")
    if figures:
        from .figures import herd_immunity_figure

        herd_immunity_figure(
            thetas,
            [float(r[1]) for r in rows],
            [float(r[4]) for r in rows],
            sink.path("herd_immunity.png"),
        )
    print(f"solve: wrote {len(rows)} rows ({path})")
    return 0


# ---------------------------------------------------------------------------
# shape


def _overlay_points(theta, t, samples=360):
    curve = shape_curve(theta, samples)
    return [(t * u * math.cos(p), t * u * math.sin(p)) for p, u in curve.samples]


def cmd_shape(cfg, sink, figures=True):
    for theta in cfg["thetas"]:
        curve = shape_curve(theta, cfg["samples"])
        tag = f"{theta:g}".replace(".", "_")
        curve.to_csv(sink.path(f"shape_theta_{tag}.csv"))
        if cfg["overlay_time"] > 0:
            t = cfg["overlay_time"]
            with open(sink.path(f"overlay_theta_{tag}_t{t}.csv"), "w", newline="") as fh:
                fh.write("phi,x,y\n")
                for phi, u in curve.samples:
                    fh.write(
                        f"{phi:.12g},{t * u * math.cos(phi):.12g},{t * u * math.sin(phi):.12g}\n"
                    )
        if figures:
            from .figures import shape_figure

            shape_figure(curve, sink.path(f"shape_theta_{tag}.png"))
        print(f"shape: theta={theta:g}, {cfg['samples']} samples")
    return 0


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(cfg, sink, figures=True, paper_scale=False, threads=None):
    theta = cfg["theta"]
    n_village = cfg["village_size"]
    steps = cfg["steps"]
    if paper_scale:
        n_village, steps = 1000, 1000
        print(
            "simulate: paper-scale run (N=1000, T=1000) requested; "
            "expect a long wall-clock time",
            file=sys.stderr,
        )
    params = ModelParams(theta, n_village)
    if cfg["ic"] == "unit":
        ic = InitialCondition.unit()
    elif cfg["ic"] == "gamma":
        ic = InitialCondition.origin_fraction(cfg["gamma"])
    else:
        raise ConfigError(f"simulate supports ic = unit|gamma, got {cfg['ic']!r}")
    snapshots = [t for t in cfg["snapshots"] if 0 <= t <= steps] or [steps]
    run = sim_run(
        ic,
        params,
        steps,
        seed=cfg["seed"],
        record=RecordPolicy("times", times=tuple(snapshots)),
    )
    scale = 1.0 / n_village
    overlay_final = None
    for t, i_f, r_f in run.slices:
        for tagname, f in (("I", i_f), ("R", r_f)):
            base = f"{tagname}_t{t}"
            f.to_csv(sink.path(base + ".csv"))
            f.to_pgm(sink.path(base + ".pgm"), scale=scale)
        overlay = _overlay_points(theta, t)
        with open(sink.path(f"overlay_t{t}.csv"), "w", newline="") as fh:
            fh.write("x,y\n")
            for x, y in overlay:
                fh.write(f"{x:.6g},{y:.6g}\n")
        if figures:
            from .figures import field_figure

            field_figure(
                i_f, sink.path(f"I_t{t}.png"), scale=scale, overlay=overlay,
                title=f"infected / N at t={t}",
            )
            field_figure(
                r_f, sink.path(f"R_t{t}.png"), scale=scale, overlay=overlay,
                title=f"recovered / N at t={t}",
            )
    state = "extinct at %d" % run.extinct_at if run.extinct_at is not None else "alive"
    print(f"simulate: theta={theta:g} N={n_village} T={steps} ({state})")
    return 0


# ---------------------------------------------------------------------------
# det


def cmd_det(cfg, sink, figures=True):
    theta = cfg["theta"]
    gamma = cfg["gamma"]
    # trajectory snapshot
    traj = det_run(InitialCondition.origin_fraction(gamma), theta, cfg["steps"], record="final")
    final = traj[-1]
    final.I.to_csv(sink.path(f"det_I_t{final.t}.csv"))
    final.R.to_csv(sink.path(f"det_R_t{final.t}.csv"))
    final.I.to_pgm(sink.path(f"det_I_t{final.t}.pgm"))
    final.R.to_pgm(sink.path(f"det_R_t{final.t}.pgm"))
    # frontier layers (line start)
    k = cfg["layer_count"]
    horizon = cfg["layer_horizon"]
    mat = frontier_layer_sequences(theta, 1.0, k, horizon)
    with open(sink.path("layers.csv"), "w", newline="") as fh:
        fh.write("n," + ",".join(f"layer{i}" for i in range(1, k + 1)) + "\n")
        for n in range(horizon + 1):
            fh.write(str(n) + "," + ",".join(f"{mat[i - 1, n]:.12g}" for i in range(1, k + 1)) + "\n")
    # ultimate proportion profile
    i0 = realize_initial(
        InitialCondition.origin_fraction(gamma), Window.square(cfg["box_radius"])
    )
    f, info = final_proportion_field(i0, theta, tol=cfg["tol"])
    f.to_pgm(sink.path("ultimate_proportion.pgm"))
    iota = info["iota"]
    rows = []
    for r in range(cfg["box_radius"] + 1):
        rows.append(("axis", r, float(f.get(r, 0))))
    for r in range(cfg["box_radius"] + 1):
        rows.append(("diagonal", 2 * r, float(f.get(r, r))))
    with open(sink.path("ultimate_profile.csv"), "w", newline="") as fh:
        fh.write("direction,distance,value,gap_to_iota\n")
        for d, r, v in rows:
            fh.write(f"{d},{r},{v:.12g},{v - iota:.6g}\n")
    if figures:
        from .figures import field_figure, radial_profile_figure

        field_figure(final.I, sink.path(f"det_I_t{final.t}.png"), title=f"limit infection, t={final.t}")
        radial_profile_figure(rows, iota, sink.path("ultimate_profile.png"))
    print(
        f"det: theta={theta:g} steps={cfg['steps']}; ultimate-proportion solve "
        f"converged in {info['sweeps']} sweeps (gap {info['gap']:.2e})"
    )
    return 0


# ---------------------------------------------------------------------------
# montecarlo


def _report_figure(report, path, reference_names=()):
    pass  # figures for specific modes are rendered inline below


def cmd_montecarlo(cfg, sink, figures=True, threads=None):
    mode = cfg["mode"]
    theta = cfg["theta"]
    params = ModelParams(theta, cfg["village_size"])
    seed = cfg["seed"]
    if cfg["ic"] == "unit":
        ic = InitialCondition.unit()
    elif cfg["ic"] == "gamma":
        ic = InitialCondition.origin_fraction(cfg["gamma"])
    else:
        raise ConfigError(f"montecarlo supports ic = unit|gamma, got {cfg['ic']!r}")

    if mode == "survival":
        report = estimate_survival(params, ic, cfg["t_max"], cfg["replicates"], seed, workers=threads)
        report.to_csv(sink.path("survival.csv"))
        est, ci = report.estimates["survival"]
        ref = report.estimates["reference"][0]
        print(f"montecarlo survival: {est:.4f} +- {ci:.4f} (reference {ref:.4f})")
    elif mode == "delay":
        report = delay_distribution(
            params, cfg["replicates"], cfg["t_max"], seed, i_max=cfg["delay_max"], workers=threads
        )
        table = layer_levels(theta, cfg["delay_max"] + 2)
        report.estimates.update(
            {f"ref_K={i}": (table.values[i], 0.0) for i in range(cfg["delay_max"] + 1)}
        )
        report.to_csv(sink.path("delay.csv"))
        if figures:
            from .figures import layer_comparison_figure

            ks = list(range(cfg["delay_max"] + 1))
            emp = [report.estimates[f"K={i}"][0] for i in ks]
            err = [report.estimates[f"K={i}"][1] for i in ks]
            ref = [table.values[i] for i in ks]
            layer_comparison_figure(ks, emp, ref, sink.path("delay.png"), err=err)
        print(
            "montecarlo delay: P(K=0) = %.4f (reference %.4f), %d surviving runs"
            % (report.estimates["K=0"][0], table.values[0], report.n_replicates)
        )
    elif mode == "layers":
        i_max = cfg["layer_count"]
        delay_room = 8 if ic.kind == "unit" else 0
        n = cfg["frontier_n"] or (cfg["t_max"] - i_max + 1 - delay_room)
        run = sim_run(
            ic, params, n + delay_room + i_max - 1, seed,
            record=RecordPolicy("band", band=i_max + delay_room + 2),
            track_delay=(ic.kind == "unit"),
        )
        delay = 0
        if ic.kind == "unit":
            if n not in run.first_hit:
                raise ConfigError(
                    f"frontier never reached antidiagonal {n}; raise t_max or replicate"
                )
            delay = run.first_hit[n] - n
        stats = frontier_statistics(run, theta, cfg["layer_eps"], n=n, i_max=i_max, delay=delay)
        table = layer_levels(theta, i_max)
        with open(sink.path("layers_report.csv"), "w", newline="") as fh:
            fh.write("name,estimate,ci95,n\n")
            for i in range(1, i_max + 1):
                st = stats["layers"][i]
                ci = 1.96 * st["std"] / math.sqrt(st["count"])
                fh.write(f"layer{i},{st['mean']:.10g},{ci:.10g},{st['count']}\n")
                fh.write(f"ref_layer{i},{table.values[i - 1]:.10g},0,{st['count']}\n")
        if figures:
            from .figures import layer_comparison_figure

            layers = list(range(1, i_max + 1))
            layer_comparison_figure(
                layers,
                [stats["layers"][i]["mean"] for i in layers],
                [table.values[i - 1] for i in layers],
                sink.path("layers_report.png"),
            )
        print(
            "montecarlo layers: n=%d cone means %s"
            % (stats["n"], [round(stats["layers"][i]["mean"], 4) for i in range(1, i_max + 1)])
        )
    elif mode == "final":
        report = final_proportion_profile(
            params, ic, cfg["t_max"], cfg["replicates"], cfg["probes"], seed, workers=threads
        )
        report.estimates["reference_iota"] = (survival_probability(theta), 0.0)
        report.to_csv(sink.path("final_proportion.csv"))
        print(
            "montecarlo final: %s"
            % {k: round(v[0], 4) for k, v in report.estimates.items() if k.startswith("R@")}
        )
    else:
        raise ConfigError(f"unknown montecarlo mode {mode!r}")
    return 0


# ---------------------------------------------------------------------------
# paths


def cmd_paths(cfg, sink, figures=True):
    rows = growth_rate_check(
        cfg["theta"], tuple(cfg["direction"]), cfg["speed"], cfg["lengths"]
    )
    growth_rows_to_csv(rows, sink.path("growth_check.csv"))
    if figures:
        from .figures import growth_gap_figure

        growth_gap_figure(rows, sink.path("growth_check.png"))
    final_gap = rows[-1][3]
    print(f"paths: growth-rate gap at n={rows[-1][0]} is {final_gap:.4f}")
    return 0


# ---------------------------------------------------------------------------
# percolation-check and validate share the check-suite machinery


def _run_checks(checks, sink, name):
    results = []
    for label, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"exception: {exc}"
        results.append((label, ok, detail))
        print(f"  [{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    path = sink.path(name)
    with open(path, "w", newline="") as fh:
        fh.write("check,status,detail\n")
        for label, ok, detail in results:
            fh.write(f"{label},{'pass' if ok else 'fail'},\"{detail}\"\n")
    return 0 if all(ok for _, ok, _ in results) else 1


def cmd_percolation_check(cfg, sink, figures=True):
    from .validate import percolation_checks

    checks = percolation_checks(
        seed=cfg["seed"],
        village_size=cfg["village_size"],
        box_radius=cfg["box_radius"],
        theta=cfg["theta"],
        n_samples=cfg["samples"],
        significance=cfg["significance"],
    )
    return _run_checks(checks, sink, "percolation_report.csv")


def cmd_validate(cfg, sink, figures=True):
    from .validate import full_suite

    checks = full_suite(seed=cfg["seed"], chi2_samples=cfg["chi2_samples"])
    return _run_checks(checks, sink, "validate_report.csv")


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sirlattice",
        description="Spatial SIR epidemics on the village lattice: constants, "
        "curves, simulations and cross-validation.",
    )
    parser.add_argument("command", choices=list(_SCHEMAS.keys()))
    parser.add_argument("--config", help="INI config file (one section per command)")
    parser.add_argument("--seed", type=int, help="override the command's seed")
    parser.add_argument("--threads", type=int, help="worker cap for replicate pools")
    parser.add_argument("--out", default="out", help="output directory (default ./out)")
    parser.add_argument(
        "--paper-scale", action="store_true",
        help="restore the full-scale simulation parameters (simulate only)",
    )
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.command, args.config, {"seed": args.seed})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    meta = {
        "seed": cfg.get("seed", ""),
        "threads": args.threads or "",
        "paper_scale": args.paper_scale,
    }
    sink = OutputSink(args.out, args.command, meta)
    figures = not args.no_figures

    try:
        if args.command == "solve":
            rc = cmd_solve(cfg, sink, figures)
        elif args.command == "shape":
            rc = cmd_shape(cfg, sink, figures)
        elif args.command == "simulate":
            rc = cmd_simulate(cfg, sink, figures, paper_scale=args.paper_scale, threads=args.threads)
        elif args.command == "det":
            rc = cmd_det(cfg, sink, figures)
        elif args.command == "montecarlo":
            rc = cmd_montecarlo(cfg, sink, figures, threads=args.threads)
        elif args.command == "paths":
            rc = cmd_paths(cfg, sink, figures)
        elif args.command == "percolation-check":
            rc = cmd_percolation_check(cfg, sink, figures)
        else:
            rc = cmd_validate(cfg, sink, figures)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    sink.write_manifest(cfg)
    return rc


if __name__ == "__main__":
    sys.exit(main())
