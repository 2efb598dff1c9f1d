import numpy as np
import pytest

from boxloss.geometry import (
    Box,
    center_dist_sq,
    enclosing,
    iou,
    raster_iou_oracle,
)


def rand_box(rng, lo=0.0, hi=20.0, side=(0.5, 10.0)):
    return Box(
        rng.uniform(lo, hi),
        rng.uniform(lo, hi),
        rng.uniform(*side),
        rng.uniform(*side),
    )


class TestBox:
    def test_rejects_nonpositive_sides(self):
        with pytest.raises(ValueError, match="width"):
            Box(0, 0, 0.0, 1.0)
        with pytest.raises(ValueError, match="height"):
            Box(0, 0, 1.0, -2.0)

    def test_corners_roundtrip(self):
        b = Box(3.0, -1.0, 2.0, 5.0)
        assert b.corners() == (2.0, -3.5, 4.0, 1.5)
        assert Box.from_corners(*b.corners()) == b

    def test_from_corners_rejects_disordered(self):
        with pytest.raises(ValueError, match="corners"):
            Box.from_corners(1.0, 0.0, 1.0, 2.0)

    def test_area_and_array(self):
        b = Box(1.0, 2.0, 3.0, 4.0)
        assert b.area() == 12.0
        assert b.as_array().tolist() == [1.0, 2.0, 3.0, 4.0]
        assert b.as_array().dtype == np.float64


class TestIou:
    def test_identical_boxes(self):
        b = Box(5.0, 5.0, 3.0, 2.0)
        assert iou(b, b) == 1.0

    def test_half_offset_pair(self):
        # 2x2 boxes offset by 1 in x: inter 2, union 6.
        a = Box(0.0, 0.0, 2.0, 2.0)
        b = Box(1.0, 0.0, 2.0, 2.0)
        assert iou(a, b) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_disjoint_and_touching_are_zero(self):
        a = Box(0.0, 0.0, 2.0, 2.0)
        assert iou(a, Box(10.0, 0.0, 2.0, 2.0)) == 0.0
        assert iou(a, Box(2.0, 0.0, 2.0, 2.0)) == 0.0  # shared edge only

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            a, b = rand_box(rng), rand_box(rng)
            v = iou(a, b)
            assert v == iou(b, a)
            assert 0.0 <= v <= 1.0

    def test_scale_and_translation_invariance(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            a, b = rand_box(rng), rand_box(rng)
            base = iou(a, b)
            s = rng.uniform(0.1, 10.0)
            dx, dy = rng.uniform(-50, 50, 2)
            a2 = Box(a.cx * s, a.cy * s, a.w * s, a.h * s)
            b2 = Box(b.cx * s, b.cy * s, b.w * s, b.h * s)
            assert iou(a2, b2) == pytest.approx(base, rel=1e-12)
            a3 = Box(a.cx + dx, a.cy + dy, a.w, a.h)
            b3 = Box(b.cx + dx, b.cy + dy, b.w, b.h)
            assert iou(a3, b3) == pytest.approx(base, rel=1e-12)

    def test_containment_is_area_ratio(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            outer = rand_box(rng, side=(4.0, 10.0))
            inner = Box(
                outer.cx + rng.uniform(-0.2, 0.2),
                outer.cy + rng.uniform(-0.2, 0.2),
                outer.w * rng.uniform(0.2, 0.5),
                outer.h * rng.uniform(0.2, 0.5),
            )
            assert iou(outer, inner) == pytest.approx(
                inner.area() / outer.area(), rel=1e-12
            )


class TestEnclosing:
    def test_contains_both_boxes(self):
        rng = np.random.default_rng(14)
        for _ in range(200):
            a, b = rand_box(rng), rand_box(rng)
            enc = enclosing(a, b)
            ax1, ay1, ax2, ay2 = a.corners()
            bx1, by1, bx2, by2 = b.corners()
            assert enc.width == pytest.approx(max(ax2, bx2) - min(ax1, bx1))
            assert enc.height == pytest.approx(max(ay2, by2) - min(ay1, by1))
            assert enc.width >= max(a.w, b.w) - 1e-9
            assert enc.height >= max(a.h, b.h) - 1e-9
            assert enc.diag_sq == enc.width * enc.width + enc.height * enc.height

    def test_identical_boxes(self):
        b = Box(1.0, 2.0, 3.0, 4.0)
        enc = enclosing(b, b)
        assert (enc.width, enc.height) == (3.0, 4.0)

    def test_center_dist_sq(self):
        a = Box(0.0, 0.0, 1.0, 1.0)
        b = Box(3.0, 4.0, 1.0, 1.0)
        assert center_dist_sq(a, b) == 25.0
        assert center_dist_sq(a, a) == 0.0


class TestRasterOracle:
    def test_rejects_low_resolution(self):
        b = Box(0.0, 0.0, 2.0, 2.0)
        with pytest.raises(ValueError, match="resolution"):
            raster_iou_oracle(b, b, 8)

    def test_half_offset_pair(self):
        a = Box(0.0, 0.0, 2.0, 2.0)
        b = Box(1.0, 0.0, 2.0, 2.0)
        assert raster_iou_oracle(a, b, 2048) == pytest.approx(1.0 / 3.0, abs=1e-2)

    def test_matches_iou_on_random_overlapping_pairs(self):
        rng = np.random.default_rng(15)
        checked = 0
        while checked < 50:
            a, b = rand_box(rng), rand_box(rng)
            if iou(a, b) <= 0.0:
                continue
            assert abs(iou(a, b) - raster_iou_oracle(a, b, 1024)) < 2e-2
            checked += 1

    def test_disjoint_is_zero(self):
        a = Box(0.0, 0.0, 1.0, 1.0)
        b = Box(10.0, 10.0, 1.0, 1.0)
        assert raster_iou_oracle(a, b, 64) == 0.0
