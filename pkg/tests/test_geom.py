import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tidyplan.geom import (
    EllipseFit,
    aligned_rotation_bin,
    alignment_rotation,
    fit_ellipse,
    footprint_points,
)
from tidyplan.world import ObjectInstance

from conftest import square


def ellipse_points(center, a, b, angle_deg, n=24, phase=0.1):
    """Exact points on an ellipse boundary, no noise."""
    t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False) + phase
    rad = math.radians(angle_deg)
    rot = np.array([[math.cos(rad), -math.sin(rad)], [math.sin(rad), math.cos(rad)]])
    pts = np.column_stack([a * np.cos(t), b * np.sin(t)]) @ rot.T
    return pts + np.asarray(center)


def rect(hx, hy, theta, x=0.5, y=0.5):
    return ObjectInstance(id=1, category="book", half_extents=(hx, hy), pose=(x, y, theta))


class TestFitEllipse:
    def test_recovers_two_to_one_ellipse(self):
        fit = fit_ellipse(ellipse_points((0.3, 0.2), a=0.2, b=0.1, angle_deg=30.0))
        assert math.isclose(fit.center[0], 0.3, abs_tol=1e-9)
        assert math.isclose(fit.center[1], 0.2, abs_tol=1e-9)
        assert math.isclose(fit.semi_axes[0], 0.2, abs_tol=1e-9)
        assert math.isclose(fit.semi_axes[1], 0.1, abs_tol=1e-9)
        assert abs(fit.angle - 30.0) < 1e-6
        assert fit.eccentricity_ok

    def test_circle_not_eccentric(self):
        fit = fit_ellipse(ellipse_points((0.0, 0.0), a=0.1, b=0.1, angle_deg=0.0))
        assert not fit.eccentricity_ok
        assert alignment_rotation(fit) == 0.0

    def test_axis_aligned_exact(self):
        fit = fit_ellipse(ellipse_points((0.1, -0.4), a=0.3, b=0.05, angle_deg=0.0))
        assert min(fit.angle, 180.0 - fit.angle) < 1e-6

    def test_one_percent_noise_within_two_degrees(self):
        rng = np.random.default_rng(0)
        pts = ellipse_points((0.0, 0.0), a=0.2, b=0.1, angle_deg=70.0, n=64)
        noisy = pts * (1.0 + rng.normal(0.0, 0.01, size=pts.shape))
        fit = fit_ellipse(noisy)
        assert abs(fit.angle - 70.0) < 2.0

    @given(st.floats(min_value=0.0, max_value=179.0))
    @settings(max_examples=40, deadline=None)
    def test_rotation_equivariance(self, phi):
        base = fit_ellipse(ellipse_points((0.0, 0.0), a=0.2, b=0.1, angle_deg=0.0))
        turned = fit_ellipse(ellipse_points((0.0, 0.0), a=0.2, b=0.1, angle_deg=phi))
        diff = (turned.angle - base.angle - phi) % 180.0
        assert min(diff, 180.0 - diff) < 1e-5
        assert math.isclose(turned.semi_axes[0], base.semi_axes[0], abs_tol=1e-8)
        assert math.isclose(turned.semi_axes[1], base.semi_axes[1], abs_tol=1e-8)

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="degenerate point set"):
            fit_ellipse(ellipse_points((0, 0), 0.2, 0.1, 0.0)[:5])

    def test_collinear_points(self):
        pts = np.column_stack([np.linspace(0, 1, 10), np.linspace(0, 2, 10)])
        with pytest.raises(ValueError, match="degenerate point set"):
            fit_ellipse(pts)

    def test_coincident_points(self):
        with pytest.raises(ValueError, match="degenerate point set"):
            fit_ellipse(np.ones((8, 2)))

    def test_validation_of_fit_fields(self):
        with pytest.raises(ValueError, match="semi-axes"):
            EllipseFit(center=(0, 0), semi_axes=(0.1, 0.2), angle=0.0, eccentricity_ok=True)
        with pytest.raises(ValueError, match="angle"):
            EllipseFit(center=(0, 0), semi_axes=(0.2, 0.1), angle=180.0, eccentricity_ok=True)


class TestAlignmentRotation:
    def fit_at(self, angle, ok=True):
        return EllipseFit(center=(0, 0), semi_axes=(0.2, 0.1), angle=angle, eccentricity_ok=ok)

    @pytest.mark.parametrize(
        "angle,expect",
        [(10.0, -10.0), (80.0, 10.0), (100.0, -10.0), (170.0, 10.0), (0.0, 0.0), (90.0, 0.0)],
    )
    def test_nearest_axis(self, angle, expect):
        assert alignment_rotation(self.fit_at(angle)) == expect

    def test_forty_five_tie_positive(self):
        assert alignment_rotation(self.fit_at(45.0)) == 45.0
        assert alignment_rotation(self.fit_at(135.0)) == 45.0

    def test_round_object_stays_put(self):
        assert alignment_rotation(self.fit_at(37.0, ok=False)) == 0.0

    @given(st.floats(min_value=0.0, max_value=179.999))
    @settings(max_examples=60, deadline=None)
    def test_bounded_and_lands_on_axis(self, angle):
        rot = alignment_rotation(self.fit_at(angle))
        assert -45.0 < rot <= 45.0
        landed = (angle + rot) % 90.0
        assert min(landed, 90.0 - landed) < 1e-9


class TestFootprintPoints:
    def test_eight_samples_are_corners_and_midpoints(self):
        pts = footprint_points(rect(0.1, 0.1, 0.0, x=0.0, y=0.0), samples=8)
        expect = {
            (0.1, 0.1), (0.0, 0.1), (-0.1, 0.1), (-0.1, 0.0),
            (-0.1, -0.1), (0.0, -0.1), (0.1, -0.1), (0.1, 0.0),
        }
        got = {(round(px, 12), round(py, 12)) for px, py in pts}
        assert got == expect

    def test_translation_moves_points(self):
        at_origin = np.asarray(footprint_points(rect(0.1, 0.05, 0.0, x=0.0, y=0.0), 16))
        moved = np.asarray(footprint_points(rect(0.1, 0.05, 0.0, x=0.3, y=0.2), 16))
        assert np.allclose(moved - at_origin, [0.3, 0.2], atol=1e-12)

    def test_quarter_turn_lands_on_swapped_rectangle(self):
        # a 90-degree turn of a 0.2x0.1 rectangle occupies the 0.1x0.2 boundary
        turned = footprint_points(rect(0.2, 0.1, 90.0, x=0.0, y=0.0), 32)
        for px, py in turned:
            assert abs(px) <= 0.1 + 1e-12 and abs(py) <= 0.2 + 1e-12
            on_edge = math.isclose(abs(px), 0.1, abs_tol=1e-12) or math.isclose(
                abs(py), 0.2, abs_tol=1e-12
            )
            assert on_edge

    def test_minimum_sample_count(self):
        with pytest.raises(ValueError, match="samples must be >= 8"):
            footprint_points(rect(0.1, 0.1, 0.0), samples=7)


class TestRectangleOrientation:
    def test_fit_tracks_rectangle_angle(self):
        for theta in (0.0, 25.0, 70.0, 155.0):
            fit = fit_ellipse(footprint_points(rect(0.15, 0.05, theta), 64))
            diff = abs(fit.angle - theta % 180.0)
            assert min(diff, 180.0 - diff) < 1.0

    def test_alignment_composition_lands_on_axis(self):
        obj = rect(0.15, 0.05, 70.0)
        fit = fit_ellipse(footprint_points(obj, 64))
        rot = alignment_rotation(fit)
        aligned = ObjectInstance(
            id=1, category="book", half_extents=obj.half_extents,
            pose=(obj.pose[0], obj.pose[1], (obj.pose[2] + rot) % 360.0),
        )
        refit = fit_ellipse(footprint_points(aligned, 64))
        assert abs(alignment_rotation(refit)) < 1.0


class TestAlignedRotationBin:
    def test_seventy_degrees_rounds_to_quarter_turn(self):
        assert aligned_rotation_bin(rect(0.15, 0.05, 70.0), rotation_bins=4) == 1

    def test_ten_degrees_rounds_to_zero(self):
        assert aligned_rotation_bin(rect(0.15, 0.05, 10.0), rotation_bins=4) == 0

    def test_wraps_past_full_turn(self):
        assert aligned_rotation_bin(rect(0.15, 0.05, 350.0), rotation_bins=4) == 0

    def test_round_object_keeps_nearest_bin(self):
        # circularly symmetric: no alignment, bin is just the nearest
        assert aligned_rotation_bin(rect(0.1, 0.1, 87.0), rotation_bins=4) == 1
