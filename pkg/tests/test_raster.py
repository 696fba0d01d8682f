import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from arc.errors import InvalidChannels, OutOfBounds
from arc.raster import (
    AxisRect,
    _rotate_bilinear,
    crop,
    decode_image,
    encode_png,
    pad_square,
    pad_square_resize,
    resize_bilinear,
    rotate,
    to_luma,
)


def rgb(h, w, seed=0):
    return np.random.default_rng(seed).integers(0, 256, (h, w, 3), dtype=np.uint8)


class TestToLuma:
    def test_white_is_255(self):
        img = np.full((2, 2, 3), 255, np.uint8)
        assert (to_luma(img) == 255).all()

    def test_black_is_0(self):
        img = np.zeros((2, 2, 3), np.uint8)
        assert (to_luma(img) == 0).all()

    def test_pure_red(self):
        img = np.zeros((1, 1, 3), np.uint8)
        img[0, 0, 0] = 255
        assert to_luma(img)[0, 0] == 76  # round(0.299 * 255)

    def test_matches_scalar_oracle(self):
        img = rgb(13, 17, seed=3)
        out = to_luma(img)
        for r in range(13):
            for c in range(17):
                assert out[r, c] == oracles.luma_scalar(*img[r, c])

    def test_rejects_single_channel(self):
        with pytest.raises(InvalidChannels):
            to_luma(np.zeros((4, 4), np.uint8))

    @given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255), st.integers(0, 2), st.integers(1, 40))
    def test_monotone_in_each_channel(self, r, g, b, ch, bump):
        base = np.array([[[r, g, b]]], np.uint8)
        raised = base.copy()
        raised[0, 0, ch] = min(255, int(raised[0, 0, ch]) + bump)
        assert to_luma(raised)[0, 0] >= to_luma(base)[0, 0]


class TestRotate:
    def test_angle_zero_identity(self):
        img = rgb(5, 7)
        out = rotate(img, 0)
        assert np.array_equal(out, img)
        assert out is not img

    def test_90_matches_permutation_oracle(self):
        img = rgb(2, 3, seed=1)
        out = rotate(img, 90)
        assert out.shape == (3, 2, 3)
        assert np.array_equal(out, oracles.rot90_ccw_scalar(img))

    def test_180_twice_is_identity(self):
        img = rgb(6, 9, seed=2)
        assert np.array_equal(rotate(rotate(img, 180), 180), img)

    @given(st.integers(-4, 4), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31 - 1))
    @settings(max_examples=40)
    def test_exact_path_involution(self, k, h, w, seed):
        img = np.random.default_rng(seed).integers(0, 256, (h, w, 3), dtype=np.uint8)
        assert np.array_equal(rotate(rotate(img, 90.0 * k), -90.0 * k), img)

    def test_bilinear_at_90_matches_exact_path(self):
        img = rgb(8, 11, seed=4)
        assert np.array_equal(_rotate_bilinear(img, 90.0), rotate(img, 90))

    def test_fill_value_in_corners(self):
        img = np.full((10, 10, 3), 200, np.uint8)
        out = rotate(img, 45, fill=7)
        assert out[0, 0, 0] == 7
        assert out[-1, -1, 0] == 7

    def test_output_bounds_cover_rotated_box(self):
        out = rotate(rgb(10, 20), 30)
        # 20*cos30 + 10*sin30 = 22.3 -> 23; 20*sin30 + 10*cos30 = 18.7 -> 19
        assert out.shape == (19, 23, 3)

    def test_gray_supported(self):
        img = np.random.default_rng(0).integers(0, 256, (5, 6), dtype=np.uint8)
        assert rotate(img, 90).shape == (6, 5)


class TestCrop:
    def test_full_rect_identity(self):
        img = rgb(8, 5)
        assert np.array_equal(crop(img, AxisRect(0, 0, 5, 8)), img)

    def test_single_pixel(self):
        img = rgb(4, 4, seed=5)
        assert np.array_equal(crop(img, AxisRect(0, 0, 1, 1))[0, 0], img[0, 0])

    def test_belt_region(self):
        img = rgb(480, 640, seed=6)
        belt = AxisRect(40, 30, 560, 420)
        out = crop(img, belt)
        assert out.shape == (420, 560, 3)
        assert np.array_equal(out, img[30:450, 40:600])

    def test_out_of_bounds(self):
        with pytest.raises(OutOfBounds):
            crop(rgb(4, 4), AxisRect(2, 2, 4, 4))

    def test_rect_validation(self):
        with pytest.raises(ValueError):
            AxisRect(0, 0, 0, 4)


class TestPadSquareResize:
    def test_square_input_identity(self):
        img = rgb(150, 150, seed=7)
        assert np.array_equal(pad_square_resize(img, 150), img)

    def test_wide_input_centered_bands(self):
        img = np.full((150, 300, 3), 9, np.uint8)
        canvas = pad_square(img)
        assert canvas.shape == (300, 300, 3)
        assert (canvas[:75] == 0).all() and (canvas[225:] == 0).all()
        assert (canvas[75:225] == 9).all()

    def test_aspect_ratio_preserved(self):
        img = np.full((50, 100, 3), 200, np.uint8)
        out = pad_square_resize(img, 150)
        assert out.shape == (150, 150, 3)
        # content occupies a 75-row central band, zero bands above and below
        assert (out[:36] == 0).all() and (out[114:] == 0).all()
        assert (out[40:110, :] > 0).any(axis=2).all()

    @given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 64))
    @settings(max_examples=60)
    def test_output_square_with_zero_corners(self, h, w, side):
        img = np.full((h, w, 3), 255, np.uint8)
        out = pad_square_resize(img, side)
        assert out.shape == (side, side, 3)
        if abs(h - w) >= 2:
            big, top = max(h, w), abs(h - w) // 2
            # corner samples stay inside the zero band when upsampling (the
            # sample clamps to the canvas edge) or when the band spans the
            # corner sample's bilinear support after downsampling
            if side >= big or 0.5 * big / side + 1 <= top:
                assert (out[0, 0] == 0).all() and (out[-1, -1] == 0).all()

    def test_resize_identity_is_exact(self):
        img = rgb(31, 31, seed=8)
        assert np.array_equal(resize_bilinear(img, 31, 31), img)


class TestCodec:
    def test_png_round_trip(self):
        img = rgb(9, 13, seed=9)
        assert np.array_equal(decode_image(encode_png(img)), img)

    def test_jpeg_write_read(self, tmp_path):
        from arc.raster import read_image, write_jpeg

        img = np.full((16, 16, 3), 128, np.uint8)
        path = tmp_path / "x.jpg"
        write_jpeg(path, img)
        back = read_image(path)
        assert back.shape == (16, 16, 3)
        assert np.abs(back.astype(int) - 128).max() <= 4  # lossy but close

    def test_bad_bytes(self):
        from arc.errors import BadImage

        with pytest.raises(BadImage):
            decode_image(b"not an image")
