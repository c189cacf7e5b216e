import math

import numpy as np
import pytest

from homsim import imperfections as imp


class TestBesselJ1:
    def test_zero(self):
        assert imp.bessel_j1(0.0) == 0.0

    def test_global_maximum(self):
        # cross-check against a high-precision series summation
        import mpmath
        x = 1.8411837813406593
        assert imp.bessel_j1(x) == pytest.approx(float(mpmath.besselj(1, x)), abs=1e-14)
        assert imp.bessel_j1(x) == pytest.approx(0.5819, abs=1e-4)

    def test_first_zero(self):
        assert abs(imp.bessel_j1(imp.J1_FIRST_ZERO)) < 1e-12
        # root bracketing: sign change around the zero
        assert imp.bessel_j1(3.8) * imp.bessel_j1(3.9) < 0

    def test_against_series_oracle_dense(self):
        import mpmath
        mpmath.mp.dps = 40
        for x in np.linspace(-20, 20, 161):
            exact = float(mpmath.besselj(1, mpmath.mpf(float(x))))
            assert abs(imp.bessel_j1(float(x)) - exact) < 1e-12

    def test_odd_function(self):
        for x in (0.3, 2.7, 11.4):
            assert imp.bessel_j1(-x) == -imp.bessel_j1(x)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            imp.bessel_j1(float("nan"))


class TestBeamSplitter:
    def test_balanced_gives_unity(self):
        assert imp.bs_visibility_factor(imp.BeamSplitter(0.5, 0.5)) == 1.0

    def test_measured_splitter(self):
        got = imp.bs_visibility_factor(imp.BeamSplitter(0.474, 0.526))
        assert got == pytest.approx(0.9946, abs=1e-4)

    def test_forty_sixty(self):
        got = imp.bs_visibility_factor(imp.BeamSplitter(0.4, 0.6))
        assert got == pytest.approx(2 * 0.24 / 0.52, rel=1e-12)

    def test_at_most_one_with_equality_iff_balanced(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            r = rng.uniform(0.01, 0.99)
            f = imp.bs_visibility_factor(imp.BeamSplitter(r, 1.0 - r))
            assert f <= 1.0
            if abs(r - 0.5) > 1e-6:
                assert f < 1.0

    def test_invariant_enforced(self):
        with pytest.raises(ValueError):
            imp.BeamSplitter(0.5, 0.6)
        with pytest.raises(ValueError):
            imp.BeamSplitter(-0.1, 1.1)


class TestSpatialOverlap:
    def test_zero_angle(self):
        geom = imp.SpatialGeometry(5e-3, 1.55e-6, 0.0)
        assert imp.spatial_overlap(geom) == 1.0

    def test_first_bessel_zero_kills_overlap(self):
        # choose theta so that pi d sin(theta) / lambda hits the first J1 zero
        d, lam = 5e-3, 1.55e-6
        theta = math.asin(imp.J1_FIRST_ZERO * lam / (math.pi * d))
        assert imp.spatial_overlap(imp.SpatialGeometry(d, lam, theta)) < 1e-20

    def test_even_and_decreasing(self):
        d, lam = 5e-3, 1.55e-6
        thetas = np.linspace(1e-6, 2e-4, 40)
        vals = [imp.spatial_overlap(imp.SpatialGeometry(d, lam, t)) for t in thetas]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        for t in (1e-5, 7e-5):
            assert imp.spatial_overlap(imp.SpatialGeometry(d, lam, t)) == \
                imp.spatial_overlap(imp.SpatialGeometry(d, lam, -t))

    def test_against_disk_quadrature_oracle(self):
        # brute-force evaluation of the aperture integral: the normalized
        # overlap equals |int_disk exp(i k x) dA / (pi a^2)|^2 per arm;
        # evaluate the disk integral on a fine polar grid
        d, lam, theta = 5e-3, 1.55e-6, 30e-6
        a = d / 2.0
        k = 2.0 * math.pi * math.sin(theta) / lam
        nr, nphi = 400, 400
        r = (np.arange(nr) + 0.5) * (a / nr)
        phi = (np.arange(nphi) + 0.5) * (2 * math.pi / nphi)
        R, PHI = np.meshgrid(r, phi, indexing="ij")
        dA = (a / nr) * (2 * math.pi / nphi)
        disk = np.sum(np.exp(1j * k * R * np.cos(PHI)) * R * dA)
        oracle = abs(disk / (math.pi * a**2)) ** 2
        got = imp.spatial_overlap(imp.SpatialGeometry(d, lam, theta))
        assert got == pytest.approx(oracle, rel=1e-6)


class TestAngleInversion:
    def test_round_trip_identity(self):
        d, lam = 5e-3, 1.55e-6
        for target in (0.05, 0.3, 0.7, 0.943, 0.999):
            theta = imp.solve_angle_for_overlap(target, d, lam)
            achieved = imp.spatial_overlap(imp.SpatialGeometry(d, lam, theta))
            assert abs(achieved - target) < 1e-10

    def test_high_target_small_angle(self):
        d, lam = 5e-3, 1.55e-6
        t1 = imp.solve_angle_for_overlap(0.999, d, lam)
        t2 = imp.solve_angle_for_overlap(0.9999, d, lam)
        assert 0 < t2 < t1

    def test_reference_inversion(self):
        # the computed angle for a 0.943 overlap with d = 5 mm, 1.55 um;
        # reported value, not forced to any external figure
        theta = imp.solve_angle_for_overlap(0.943, 5e-3, 1.55e-6)
        assert theta == pytest.approx(47.69e-6, abs=0.05e-6)

    def test_rejects_bad_target(self):
        for target in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                imp.solve_angle_for_overlap(target, 5e-3, 1.55e-6)


def test_visibility_budget_multiplies():
    bs = imp.BeamSplitter(0.474, 0.526)
    geom = imp.SpatialGeometry(5e-3, 1.55e-6, 30e-6)
    v = imp.visibility_budget(1.0, bs=bs, geom=geom)
    assert v == pytest.approx(imp.bs_visibility_factor(bs) * imp.spatial_overlap(geom), rel=1e-14)
