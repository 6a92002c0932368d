"""Command-line front end: outputs, manifests, config validation."""

import os

import numpy as np
import pytest

from sirlattice.cli import main


def read_manifest(outdir):
    lines = (outdir / "manifest.txt").read_text().strip().splitlines()
    return dict(l.split("=", 1) for l in lines)


def manifest_checksums(outdir):
    return {k: v for k, v in read_manifest(outdir).items() if k.startswith("sha256.")}


class TestSolve:
    def test_constants_table(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[solve]\ntheta_grid = 1.0,2.0,5.0\nell_terms = 3\n")
        out = tmp_path / "out"
        assert main(["solve", "--config", str(cfg), "--out", str(out), "--no-figures"]) == 0
        lines = (out / "constants.csv").read_text().strip().splitlines()
        assert lines[0] == "theta,iota,kappa,gamma1,herd_immunity,ell1,ell2,ell3"
        rows = {l.split(",")[0]: l.split(",") for l in lines[1:]}
        # theta = 1: no cone, no axis fixed point, zero layer levels
        assert rows["1"][2] == "" and rows["1"][3] == ""
        assert float(rows["1"][5]) == 0.0
        # theta = 2 row reproduces the headline comparison
        assert abs(float(rows["2"][1]) - 0.94) < 5e-3
        assert abs(float(rows["2"][4]) - 2.0 / 3.0) < 1e-9
        # theta = 5 has an axis fixed point
        assert float(rows["5"][3]) > 0.0

    def test_monotone_iota_column(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[solve]\ntheta_grid = 0.5:3.0:0.5\nell_terms = 1\n")
        out = tmp_path / "out"
        assert main(["solve", "--config", str(cfg), "--out", str(out), "--no-figures"]) == 0
        lines = (out / "constants.csv").read_text().strip().splitlines()[1:]
        iotas = [float(l.split(",")[1]) for l in lines]
        assert all(b > a for a, b in zip(iotas, iotas[1:]))

    def test_figures_rendered(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[solve]\ntheta_grid = 1.0,2.0\nell_terms = 1\n")
        out = tmp_path / "out"
        assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
        png = out / "herd_immunity.png"
        assert png.exists() and png.stat().st_size > 1000
        assert "sha256.herd_immunity.png" in manifest_checksums(out)


class TestShape:
    def test_phase_transition_files(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[shape]\nthetas = 1.0,5.0\nsamples = 16\n")
        out = tmp_path / "out"
        assert main(["shape", "--config", str(cfg), "--out", str(out), "--no-figures"]) == 0
        slow = (out / "shape_theta_1.csv").read_text().strip().splitlines()
        fast = (out / "shape_theta_5.csv").read_text().strip().splitlines()
        assert slow[0] == "phi,upsilon"
        assert all(float(l.split(",")[1]) < 1.0 for l in slow[1:])
        assert all(float(l.split(",")[1]) == 1.0 for l in fast[1:])

    def test_overlay_points(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[shape]\nthetas = 5.0\nsamples = 8\noverlay_time = 10\n")
        out = tmp_path / "out"
        assert main(["shape", "--config", str(cfg), "--out", str(out), "--no-figures"]) == 0
        lines = (out / "overlay_theta_5_t10.csv").read_text().strip().splitlines()
        assert lines[0] == "phi,x,y"
        x0 = float(lines[1].split(",")[1])
        assert abs(x0 - 10.0) < 1e-9  # speed one at phi = 0, scaled by t


class TestSimulate:
    def _cfg(self, tmp_path, extra=""):
        cfg = tmp_path / "c.ini"
        cfg.write_text(
            "[simulate]\ntheta = 2.0\nvillage_size = 30\nsteps = 12\n"
            "snapshots = 6,12\nseed = 7\n" + extra
        )
        return cfg

    def test_snapshots_and_pgm(self, tmp_path):
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(self._cfg(tmp_path)), "--out", str(out), "--no-figures"]) == 0
        for t in (6, 12):
            assert (out / f"I_t{t}.csv").exists()
            tokens = (out / f"I_t{t}.pgm").read_text().split()
            assert tokens[0] == "P2" and int(tokens[3]) == 255
        assert (out / "overlay_t12.csv").exists()

    def test_reruns_reproduce_checksums(self, tmp_path):
        cfg = self._cfg(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(cfg), "--out", str(out1), "--no-figures"]) == 0
        assert main(["simulate", "--config", str(cfg), "--out", str(out2), "--no-figures"]) == 0
        assert manifest_checksums(out1) == manifest_checksums(out2)

    def test_seed_flag_changes_output(self, tmp_path):
        cfg = self._cfg(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(cfg), "--out", str(out1), "--no-figures"]) == 0
        assert main(["simulate", "--config", str(cfg), "--out", str(out2), "--seed", "8", "--no-figures"]) == 0
        assert manifest_checksums(out1) != manifest_checksums(out2)


class TestDet:
    def test_outputs(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(
            "[det]\ntheta = 2.0\ngamma = 0.2\nsteps = 10\nlayer_count = 2\n"
            "layer_horizon = 20\nbox_radius = 15\ntol = 1e-9\n"
        )
        out = tmp_path / "out"
        assert main(["det", "--config", str(cfg), "--out", str(out), "--no-figures"]) == 0
        layers = (out / "layers.csv").read_text().strip().splitlines()
        assert layers[0] == "n,layer1,layer2"
        assert len(layers) == 22
        profile = (out / "ultimate_profile.csv").read_text().strip().splitlines()
        assert profile[0] == "direction,distance,value,gap_to_iota"
        # far field approaches the survival probability
        last_axis = [l for l in profile[1:] if l.startswith("axis")][-1]
        assert abs(float(last_axis.split(",")[3])) < 1e-6


class TestMontecarlo:
    def test_survival_report(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(
            "[montecarlo]\nmode = survival\ntheta = 2.0\nvillage_size = 50\n"
            "t_max = 15\nreplicates = 30\nseed = 3\n"
        )
        out = tmp_path / "out"
        assert main(["montecarlo", "--config", str(cfg), "--out", str(out), "--no-figures"]) == 0
        lines = (out / "survival.csv").read_text().strip().splitlines()
        assert lines[0] == "name,estimate,ci95,n"
        rows = {l.split(",")[0]: l.split(",") for l in lines[1:]}
        assert 0.0 <= float(rows["survival"][1]) <= 1.0
        assert int(rows["survival"][3]) == 30


class TestPaths:
    def test_growth_csv(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[paths]\ntheta = 2.0\ndirection = 1,1\nspeed = 0.5\nlengths = 40,80\n")
        out = tmp_path / "out"
        assert main(["paths", "--config", str(cfg), "--out", str(out), "--no-figures"]) == 0
        lines = (out / "growth_check.csv").read_text().strip().splitlines()
        assert lines[0] == "n,lhs,rhs,gap"
        assert len(lines) == 3


class TestValidateCommand:
    def test_reduced_suite_passes_and_exits_zero(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[validate]\nchi2_samples = 2500\nseed = 1\n")
        out = tmp_path / "out"
        rc = main(["validate", "--config", str(cfg), "--out", str(out), "--no-figures"])
        assert rc == 0
        lines = (out / "validate_report.csv").read_text().strip().splitlines()
        assert lines[0] == "check,status,detail"
        assert all(",pass," in l for l in lines[1:])

    def test_percolation_check_command(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[percolation-check]\nsamples = 2000\n")
        out = tmp_path / "out"
        rc = main(["percolation-check", "--config", str(cfg), "--out", str(out), "--no-figures"])
        assert rc == 0
        assert (out / "percolation_report.csv").exists()


class TestConfigValidation:
    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[solve]\nbogus_key = 1\n")
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_unknown_section_rejected(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[nonsense]\nx = 1\n")
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_bad_value_rejected(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[simulate]\nsteps = banana\n")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["solve", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path / "o")]) == 2

    def test_domain_error_surfaces(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[simulate]\ntheta = 2.0\nvillage_size = 0\n")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
