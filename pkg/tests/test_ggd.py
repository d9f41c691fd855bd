import math

import numpy as np
import pytest

from svtv.ggd import (ParamMaps, build_ratio_lookup, estimate_global_shape,
                      estimate_maps, estimate_scale_map, estimate_shape_map,
                      gg_ratio, prefilter_impulses, window_max, window_sums)
from svtv.operators import grad_magnitude

from helpers import prefilter_oracle


class TestGgRatio:
    def test_exponential_identity(self):
        # Gamma(1) Gamma(3) / Gamma(2)^2 = 1 * 2 / 1
        assert gg_ratio(1.0) == pytest.approx(2.0, abs=1e-10)

    def test_gaussian_identity(self):
        # Gamma(1/2) Gamma(3/2) / Gamma(1)^2 = sqrt(pi) * sqrt(pi)/2
        assert gg_ratio(2.0) == pytest.approx(math.pi / 2.0, abs=1e-10)

    def test_half_shape_from_factorials(self):
        # Gamma(2) Gamma(6) / Gamma(4)^2 = 1! * 5! / (3!)^2 = 120 / 36
        assert gg_ratio(0.5) == pytest.approx(math.factorial(5) / 36.0, rel=1e-12)

    def test_small_shape_does_not_overflow(self):
        assert np.isfinite(gg_ratio(0.05))

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            gg_ratio(0.0)
        with pytest.raises(ValueError):
            gg_ratio(np.array([1.0, -2.0]))


class TestRatioLookup:
    def test_strictly_decreasing(self):
        lut = build_ratio_lookup()
        assert np.all(np.diff(lut.h) < 0.0)

    def test_endpoint_nodes_reproduced(self):
        lut = build_ratio_lookup()
        assert lut.h[-1] == pytest.approx(math.pi / 2.0, abs=1e-10)
        i_one = int(np.argmin(np.abs(lut.z - 1.0)))
        assert lut.z[i_one] == 1.0
        assert lut.h[i_one] == pytest.approx(2.0, abs=1e-10)

    def test_invert_exponential_point(self):
        lut = build_ratio_lookup()
        assert lut.invert(2.0) == pytest.approx(1.0, abs=1e-3)

    def test_clamps_below_gaussian_ratio(self):
        lut = build_ratio_lookup()
        assert lut.invert(1.0) == 2.0
        assert lut.invert(0.0) == 2.0

    def test_clamps_above_floor_ratio(self):
        lut = build_ratio_lookup(p_min=0.1)
        assert lut.invert(2.0 * gg_ratio(0.1)) == pytest.approx(0.1)

    def test_roundtrip_accuracy(self):
        lut = build_ratio_lookup(p_min=0.1)
        rhos = np.geomspace(1.6, gg_ratio(0.1), 100)
        back = gg_ratio(lut.invert(rhos))
        assert np.max(np.abs(back - rhos) / rhos) < 1e-3

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            build_ratio_lookup(p_min=2.5)
        with pytest.raises(ValueError):
            build_ratio_lookup(n_nodes=16)


class TestWindowReductions:
    @pytest.mark.parametrize("s", [3, 5, 10, 11])
    def test_window_sums_match_roll_loop(self, s):
        rng = np.random.default_rng(30)
        x = rng.random((17, 23))
        lo, hi = (s - 1) // 2, s // 2
        expected = np.zeros_like(x)
        for a in range(-lo, hi + 1):
            for b in range(-lo, hi + 1):
                expected += np.roll(x, (-a, -b), axis=(0, 1))
        np.testing.assert_allclose(window_sums(x, s), expected, atol=1e-10)

    def test_window_max_exact_on_zero_windows(self):
        x = np.zeros((12, 12))
        x[2, 3] = 1.0
        wm = window_max(x, 3)
        assert wm[8, 8] == 0.0
        assert wm[2, 2] == 1.0
        assert wm[1, 2] == 1.0


class TestShapeMap:
    def test_identical_samples_clamp_to_two(self):
        lut = build_ratio_lookup()
        shape = estimate_shape_map(np.full((8, 8), 0.7), 3, lut)
        np.testing.assert_array_equal(shape, 2.0)

    def test_all_zero_window_goes_to_floor(self):
        lut = build_ratio_lookup()
        shape = estimate_shape_map(np.zeros((8, 8)), 3, lut)
        np.testing.assert_array_equal(shape, lut.p_min)

    def test_half_laplace_monte_carlo(self):
        # window covers the whole 21x21 torus: 441 i.i.d. exponential samples
        lut = build_ratio_lookup()
        estimates = []
        for seed in range(50):
            gen = np.random.Generator(np.random.Philox(seed))
            m = -np.log(1.0 - gen.random((21, 21)))
            estimates.append(estimate_shape_map(m, 21, lut)[0, 0])
        assert 0.85 <= np.median(estimates) <= 1.15

    def test_scale_equivariance(self):
        rng = np.random.default_rng(31)
        m = rng.random((16, 16))
        lut = build_ratio_lookup()
        a = estimate_shape_map(m, 5, lut)
        b = estimate_shape_map(123.456 * m, 5, lut)
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_range_invariant(self):
        rng = np.random.default_rng(32)
        m = np.abs(rng.standard_normal((20, 20))) ** 3
        lut = build_ratio_lookup()
        shape = estimate_shape_map(m, 3, lut)
        assert shape.min() >= lut.p_min
        assert shape.max() <= 2.0


class TestScaleMap:
    def test_exponential_shape_gives_reciprocal_mean(self):
        m = np.full((9, 9), 0.25)
        shape = np.ones((9, 9))
        scale = estimate_scale_map(m, shape, 3)
        np.testing.assert_allclose(scale, 1.0 / 0.25, rtol=1e-12)

    def test_gaussian_shape_all_ones(self):
        m = np.ones((9, 9))
        shape = np.full((9, 9), 2.0)
        scale = estimate_scale_map(m, shape, 3)
        np.testing.assert_allclose(scale, 2.0 ** -0.5, rtol=1e-12)

    def test_beats_grid_likelihood(self):
        # stationarity of the windowed log-likelihood n*log(a) - sum (a x)^p
        rng = np.random.default_rng(33)
        for _ in range(50):
            x = rng.random(25) + 1e-3
            p = rng.uniform(0.2, 2.0)
            ahat = (p * np.sum(x**p) / x.size) ** (-1.0 / p)
            def loglik(a):
                return x.size * np.log(a) - np.sum((a * x) ** p)
            grid = ahat * np.geomspace(0.5, 2.0, 200)
            best_grid = max(loglik(a) for a in grid)
            assert loglik(ahat) >= best_grid - 1e-9

    def test_scale_covariance(self):
        rng = np.random.default_rng(34)
        m = rng.random((12, 12)) + 0.1
        shape = np.full((12, 12), 1.3)
        a = estimate_scale_map(m, shape, 3)
        b = estimate_scale_map(4.0 * m, shape, 3)
        np.testing.assert_allclose(b, a / 4.0, rtol=1e-10)

    def test_degenerate_window_capped(self):
        scale = estimate_scale_map(np.zeros((8, 8)), np.ones((8, 8)), 3,
                                   alpha_max=1e4)
        np.testing.assert_array_equal(scale, 1e4)

    def test_cap_applies_to_tiny_magnitudes(self):
        scale = estimate_scale_map(np.full((8, 8), 1e-9), np.ones((8, 8)), 3,
                                   alpha_max=1e4)
        np.testing.assert_array_equal(scale, 1e4)


class TestPrefilter:
    def test_empty_mask_is_identity(self):
        rng = np.random.default_rng(35)
        g = rng.random((10, 10))
        out = prefilter_impulses(g, np.zeros((10, 10), dtype=bool))
        np.testing.assert_array_equal(out, g)

    def test_single_pixel_filled_from_neighbors(self):
        g = np.full((9, 9), 0.5)
        g[4, 4] = 1.0
        mask = np.zeros((9, 9), dtype=bool)
        mask[4, 4] = True
        out = prefilter_impulses(g, mask)
        assert out[4, 4] == pytest.approx(0.5)

    def test_window_grows_when_too_masked(self):
        # 3x3 around the target keeps 2/9 clear < 0.4, the 5x5 window must be used
        g = np.zeros((11, 11))
        mask = np.zeros((11, 11), dtype=bool)
        center = (5, 5)
        mask[4:7, 4:7] = True
        mask[4, 4] = mask[6, 6] = False
        g[4, 4], g[6, 6] = 0.2, 0.4
        ring = [(r, c) for r in range(3, 8) for c in range(3, 8)
                if max(abs(r - 5), abs(c - 5)) == 2]
        for idx, (r, c) in enumerate(ring):
            g[r, c] = 0.1 + 0.05 * idx
        out = prefilter_impulses(g, mask, 0.4)
        clear5 = [(r, c) for r in range(3, 8) for c in range(3, 8)
                  if not mask[r, c]]
        expected = np.mean([g[r, c] for r, c in clear5])
        assert out[center] == pytest.approx(expected, rel=1e-12)

    def test_fully_masked_raises(self):
        with pytest.raises(ValueError):
            prefilter_impulses(np.zeros((4, 4)), np.ones((4, 4), dtype=bool))

    def test_unmasked_pixels_untouched(self):
        rng = np.random.default_rng(36)
        g = rng.random((12, 12))
        mask = rng.random((12, 12)) < 0.3
        mask[0, 0] = False
        out = prefilter_impulses(g, mask)
        np.testing.assert_array_equal(out[~mask], g[~mask])

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_per_pixel_oracle(self, seed):
        rng = np.random.default_rng(seed)
        g = rng.random((12, 14))
        mask = rng.random((12, 14)) < rng.uniform(0.2, 0.8)
        if mask.all():
            mask[0, 0] = False
        expected = prefilter_oracle(g, mask, 0.4)
        out = prefilter_impulses(g, mask, 0.4)
        np.testing.assert_allclose(out, expected, atol=1e-12)


class TestEstimateMaps:
    def test_contract_on_noisy_constant(self):
        gen = np.random.Generator(np.random.Philox(99))
        g = 0.5 + 0.01 * gen.standard_normal((32, 32))
        maps = estimate_maps(g, "awgn", window=3)
        maps.validate()
        assert maps.shape.shape == g.shape

    def test_spn_empty_mask_equals_awgn_path(self):
        rng = np.random.default_rng(37)
        g = rng.random((16, 16))
        a = estimate_maps(g, "awgn", window=3)
        b = estimate_maps(g, "spn", mask=np.zeros_like(g, dtype=bool), window=3)
        np.testing.assert_array_equal(a.shape, b.shape)
        np.testing.assert_array_equal(a.scale, b.scale)

    def test_spn_requires_mask(self):
        with pytest.raises(ValueError):
            estimate_maps(np.zeros((8, 8)), "spn", window=3)

    def test_flat_regions_sparser_than_edges(self):
        u = np.full((64, 64), 0.2)
        u[16:48, 16:48] = 0.8
        maps = estimate_maps(u, "awgn", window=3)
        edge_band = grad_magnitude(u) > 0.0
        flat = ~edge_band
        assert (np.median(maps.shape[flat])
                < np.median(maps.shape[edge_band]))

    def test_global_shape_of_exponential_field(self):
        gen = np.random.Generator(np.random.Philox(7))
        m = -np.log(1.0 - gen.random((128, 128)))
        from svtv.ggd import build_ratio_lookup
        lut = build_ratio_lookup()
        assert estimate_global_shape(m, lut) == pytest.approx(1.0, abs=0.05)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            estimate_maps(np.zeros((8, 8)), "speckle")

    def test_param_maps_validation(self):
        maps = ParamMaps(shape=np.full((4, 4), 3.0), scale=np.ones((4, 4)),
                         window=3, global_shape=1.0)
        with pytest.raises(ValueError):
            maps.validate()
