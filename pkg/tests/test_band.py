import numpy as np
import pytest

from traject import (
    DegenerateSignalError,
    Trajectory,
    UsageError,
    deviation_profile,
    extract_band,
    otsu_threshold,
    savgol_smooth,
    velocity_profile,
)

from .conftest import fig5_style_trajectory, random_trajectory
from .oracles import otsu_reference, perp_distance_rejection, savgol_center_kernel


class TestDeviationProfile:
    def test_collinear_all_zero(self):
        pts = np.array([[float(i), float(i)] for i in range(6)])
        np.testing.assert_allclose(deviation_profile(pts), np.zeros(6), atol=1e-12)

    def test_triangle_hand_case(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
        np.testing.assert_allclose(deviation_profile(pts), [0.0, 1.0, 0.0])

    def test_matches_projection_oracle(self, rng):
        pts = rng.standard_normal((10, 6))
        dev = deviation_profile(pts)
        for l in range(1, 9):
            expected = perp_distance_rejection(pts[l], pts[0], pts[-1])
            assert dev[l] == pytest.approx(expected, abs=1e-10)


class TestVelocityProfile:
    def test_constant_trajectory_zero(self):
        pts = np.ones((5, 3))
        np.testing.assert_array_equal(velocity_profile(pts), np.zeros(5))

    def test_three_four_five(self):
        pts = np.array([[0.0, 0.0], [3.0, 4.0], [3.0, 4.0]])
        np.testing.assert_allclose(velocity_profile(pts), [5.0, 0.0, 0.0])

    def test_matches_norm_of_difference(self, rng):
        pts = rng.standard_normal((8, 4))
        vel = velocity_profile(pts)
        for l in range(7):
            assert vel[l] == pytest.approx(float(np.linalg.norm(pts[l + 1] - pts[l])), abs=1e-12)
        assert vel[7] == vel[6]


class TestSavgolSmooth:
    def test_reproduces_polynomials_exactly(self):
        x = np.arange(20, dtype=float)
        for coeffs in ([3.0], [1.0, -2.0], [0.5, 1.5, -0.25]):
            signal = np.polynomial.polynomial.polyval(x, coeffs)
            smoothed = savgol_smooth(signal, window=5, polyorder=2)
            np.testing.assert_allclose(smoothed, signal, atol=1e-9)

    def test_constant_unchanged(self):
        signal = np.full(11, 7.25)
        np.testing.assert_allclose(savgol_smooth(signal), signal, atol=1e-12)

    def test_interior_kernel_window5_order2(self):
        # smoothing response to unit impulses reads off the kernel row
        expected = np.array([-3, 12, 17, 12, -3]) / 35.0
        kernel = np.empty(5)
        for j in range(5):
            impulse = np.zeros(5)
            impulse[j] = 1.0
            kernel[j] = savgol_smooth(impulse, window=5, polyorder=2)[2]
        np.testing.assert_allclose(kernel, expected, atol=1e-12)
        np.testing.assert_allclose(kernel, savgol_center_kernel(5, 2), atol=1e-12)

    def test_invalid_parameters_rejected(self):
        signal = np.arange(6, dtype=float)
        with pytest.raises(UsageError):
            savgol_smooth(signal, window=4, polyorder=2)
        with pytest.raises(UsageError):
            savgol_smooth(signal, window=7, polyorder=2)
        with pytest.raises(UsageError):
            savgol_smooth(signal, window=5, polyorder=5)


class TestOtsuThreshold:
    def test_perfect_bimodal_split(self):
        signal = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
        assert otsu_threshold(signal, bins=2) == pytest.approx(0.5)

    def test_matches_exhaustive_scan(self, rng):
        for _ in range(30):
            signal = rng.random(rng.integers(5, 40))
            got = otsu_threshold(signal, bins=64)
            assert got == pytest.approx(otsu_reference(signal, 64), abs=1e-12)

    def test_linear_ramp_threshold_near_half(self):
        signal = np.linspace(0.0, 1.0, 64)
        tau = otsu_threshold(signal, bins=64)
        assert abs(tau - 0.5) <= 1.0 / 64 + 1e-12

    def test_mapped_back_to_original_scale(self):
        signal = np.array([10.0, 10.0, 10.0, 30.0, 30.0, 30.0])
        assert otsu_threshold(signal, bins=2) == pytest.approx(20.0)

    def test_constant_signal_degenerate(self):
        with pytest.raises(DegenerateSignalError):
            otsu_threshold(np.full(6, 3.0))


class TestExtractBand:
    def bump_trajectory(self, L=30):
        # straight line with a smooth bump over layers 10..20
        pts = np.zeros((L, 2))
        pts[:, 0] = np.arange(L)
        for l in range(10, 21):
            pts[l, 1] = 4.0 * np.sin(np.pi * (l - 10) / 10.0)
        return Trajectory(pts)

    def test_band_covers_bump_and_excludes_flat_ends(self):
        report = extract_band(self.bump_trajectory())
        lo, hi = report.band
        assert not report.degenerate
        # bump support is [10, 20]; smoothing smears at most window//2 = 2
        assert 8 <= lo <= hi <= 22
        assert lo > 0 and hi < 29

    def test_alpha_endpoints_reduce_to_single_profile(self):
        traj = self.bump_trajectory()
        dev_only = extract_band(traj, alpha=1.0)
        vel_only = extract_band(traj, alpha=0.0)
        dev = dev_only.dev
        vel = vel_only.vel
        np.testing.assert_allclose(
            dev_only.raw_signal, (dev - dev.min()) / (dev.max() - dev.min()), atol=1e-12
        )
        np.testing.assert_allclose(
            vel_only.raw_signal, (vel - vel.min()) / (vel.max() - vel.min()), atol=1e-12
        )

    def test_mix_is_convex(self, rng):
        traj = random_trajectory(rng, 12, 4)
        report = extract_band(traj, alpha=0.3)
        dev_n = (report.dev - report.dev.min()) / (report.dev.max() - report.dev.min())
        vel_n = (report.vel - report.vel.min()) / (report.vel.max() - report.vel.min())
        lo = np.minimum(dev_n, vel_n) - 1e-12
        hi = np.maximum(dev_n, vel_n) + 1e-12
        assert (report.raw_signal >= lo).all() and (report.raw_signal <= hi).all()

    def test_scale_invariance_of_band(self):
        traj = fig5_style_trajectory()
        bands = set()
        for c in (0.01, 1.0, 1000.0):
            report = extract_band(Trajectory(c * traj.points))
            bands.add(report.band)
        assert len(bands) == 1

    def test_fig5_style_band_strictly_interior(self):
        traj = fig5_style_trajectory()
        report = extract_band(traj)
        lo, hi = report.band
        assert 0 < lo <= hi < traj.n_layers - 1

    def test_degenerate_constant_trajectory_falls_back(self):
        pts = np.ones((8, 3))
        report = extract_band(Trajectory(pts))
        assert report.degenerate
        assert report.band == (0, 7)

    def test_band_is_contiguous_run_above_tau(self):
        report = extract_band(self.bump_trajectory())
        lo, hi = report.band
        assert (report.smoothed[lo : hi + 1] > report.tau).all()

    def test_smoothed_constant_signal_stays_constant(self):
        signal = np.full(9, 0.4)
        np.testing.assert_allclose(savgol_smooth(signal), signal, atol=1e-12)

    def test_threshold_on_raw_flag(self):
        traj = self.bump_trajectory()
        report = extract_band(traj, threshold_on="raw")
        lo, hi = report.band
        assert (report.raw_signal[lo : hi + 1] > report.tau).all()

    def test_bad_alpha_rejected(self):
        with pytest.raises(UsageError):
            extract_band(self.bump_trajectory(), alpha=1.5)
