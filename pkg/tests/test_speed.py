"""Speed functional and shape curve: endpoint identities, oracles, symmetry."""

import math

import numpy as np
import pytest

from sirlattice.solvers import cone_aperture
from sirlattice.speed import (
    binary_entropy,
    direction_ratio,
    rate_functional,
    shape_curve,
    spreading_speed,
)


def grid_scan_oracle(v, a, points=1_000_000):
    """Dense-grid minimization of the inner objective, independent of the
    library's bracketing/golden-section path."""
    t = np.linspace(v, 1.0, points + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = lambda u: np.where(u > 0, u * np.log(u), 0.0) + np.where(
            u < 1, (1.0 - u) * np.log(1.0 - u), 0.0
        )
        u1 = np.clip(0.5 - v / (2.0 * t), 0.0, 1.0)
        u2 = np.clip(0.5 - (1.0 - 2.0 * a) * v / (2.0 * t), 0.0, 1.0)
        vals = h(t) + t * (h(u1) + h(u2))
    return float(vals.min())


class TestBinaryEntropy:
    def test_endpoints_exact(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_symmetric_minimum(self):
        assert abs(binary_entropy(0.5) + math.log(2.0)) < 1e-15

    def test_quarter_point(self):
        expected = 0.25 * math.log(0.25) + 0.75 * math.log(0.75)
        assert abs(binary_entropy(0.25) - expected) < 1e-15

    def test_domain_error(self):
        with pytest.raises(ValueError):
            binary_entropy(-0.01)
        with pytest.raises(ValueError):
            binary_entropy(1.01)


class TestDirectionRatio:
    def test_axis(self):
        assert direction_ratio(0.0) == 0.0

    def test_diagonal(self):
        assert abs(direction_ratio(math.pi / 4) - 0.5) < 1e-15

    def test_thirty_degrees(self):
        assert abs(direction_ratio(math.pi / 6) - 1.0 / (1.0 + math.sqrt(3.0))) < 1e-15

    def test_eightfold_symmetry(self):
        for phi in np.linspace(0.05, 2.0 * math.pi, 37):
            a = direction_ratio(phi)
            for image in (math.pi / 2 - phi, -phi, math.pi + phi, math.pi / 2 + phi):
                assert abs(direction_ratio(image) - a) < 1e-12


class TestRateFunctional:
    def test_endpoint_identity_at_v_one(self):
        for phi in np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False):
            a = direction_ratio(phi)
            assert abs(rate_functional(1.0, phi) - binary_entropy(a)) < 1e-10

    def test_limit_at_v_zero(self):
        assert abs(rate_functional(1e-6, math.pi / 4) - math.log(0.2)) < 1e-3

    def test_grid_scan_oracle(self):
        a = direction_ratio(math.pi / 4)
        oracle = grid_scan_oracle(0.5, a)
        assert abs(rate_functional(0.5, math.pi / 4) - oracle) < 1e-9

    def test_strictly_increasing_in_v(self):
        # the defining infimum rises from log(1/5) at v -> 0 to h(a) at v = 1
        for phi in np.linspace(0.0, math.pi / 4, 16):
            vals = [rate_functional(v, phi) for v in np.linspace(0.01, 1.0, 100)]
            assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_depends_on_phi_only_through_ratio(self):
        for phi in np.linspace(0.03, math.pi / 4, 9):
            base = rate_functional(0.37, phi)
            for image in (math.pi / 2 - phi, -phi, math.pi + phi):
                assert abs(rate_functional(0.37, image) - base) < 1e-12

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            rate_functional(0.0, 0.3)
        with pytest.raises(ValueError):
            rate_functional(1.2, 0.3)


class TestSpreadingSpeed:
    def test_fast_regime_everywhere_one(self):
        for phi in np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False):
            assert spreading_speed(5.0, phi) == 1.0

    def test_slow_regime_everywhere_below_one(self):
        for phi in np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False):
            assert spreading_speed(1.0, phi) < 1.0

    def test_intermediate_regime(self):
        assert spreading_speed(2.0, math.pi / 4) == 1.0
        v_axis = spreading_speed(2.0, 0.0)
        assert v_axis < 1.0
        # the axis speed solves rate = log(0.6): independent bisection
        target = math.log(0.6)
        lo, hi = 1e-9, 1.0 - 1e-9
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if rate_functional(mid, 0.0) <= target:
                lo = mid
            else:
                hi = mid
        assert abs(v_axis - 0.5 * (lo + hi)) < 1e-9

    def test_nondecreasing_in_theta(self):
        for phi in (0.0, 0.2, math.pi / 4):
            vals = [spreading_speed(t, phi) for t in np.linspace(0.2, 6.0, 30)]
            assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_cone_boundary_matches_aperture(self):
        # speed is 1 exactly when the axis ratio is at least kappa
        for theta in (1.75, 2.0, 3.0, 3.9):
            kappa = cone_aperture(theta)
            for phi in np.linspace(0.0, math.pi / 2, 181):
                c = abs(math.cos(phi))
                s = abs(math.sin(phi))
                ratio = c / (c + s)
                in_cone = kappa <= ratio <= 1.0 - kappa
                at_one = spreading_speed(theta, phi) == 1.0
                if abs(ratio - kappa) > 1e-3 and abs(ratio - (1.0 - kappa)) > 1e-3:
                    assert at_one == in_cone, (theta, phi, ratio, kappa)


class TestShapeCurve:
    def test_sample_count_and_range(self):
        sc = shape_curve(2.0, 360)
        assert len(sc.samples) == 360
        assert all(0.0 < u <= 1.0 for _, u in sc.samples)

    def test_slow_curve_all_below_one(self):
        sc = shape_curve(1.0, 8)
        assert all(u < 1.0 for _, u in sc.samples)

    def test_fast_curve_all_one(self):
        sc = shape_curve(5.0, 8)
        assert all(u == 1.0 for _, u in sc.samples)

    def test_intermediate_has_flat_arcs_and_dips(self):
        sc = shape_curve(2.0, 360)
        ups = [u for _, u in sc.samples]
        assert any(u == 1.0 for u in ups)
        assert any(u < 1.0 for u in ups)
        # dips sit at the axes: phi = 0 sample is a strict minimum region
        assert ups[0] == min(ups)

    def test_dihedral_symmetry(self):
        sc = shape_curve(2.0, 360)
        ups = np.array([u for _, u in sc.samples])
        n = 360
        # phi -> -phi and phi -> pi/2 - phi
        for k in range(n):
            assert abs(ups[k] - ups[(n - k) % n]) < 1e-9
            assert abs(ups[k] - ups[(90 - k) % n]) < 1e-9

    def test_csv_serialization(self, tmp_path):
        sc = shape_curve(2.0, 16)
        path = tmp_path / "shape.csv"
        sc.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "phi,upsilon"
        assert len(lines) == 17
        phi0, ups0 = lines[1].split(",")
        assert float(phi0) == 0.0
        assert 0.0 < float(ups0) <= 1.0
