import numpy as np
import pytest

from svtv.degrade import (NoiseSpec, add_awgn, add_awln, add_spn, corrupt,
                          laplace_scale_for_bsnr, sigma_for_bsnr)
from svtv.metrics import bsnr


@pytest.fixture
def blurred():
    rng = np.random.default_rng(20)
    return rng.random((256, 256))


def ramp(d1=64, d2=64):
    return np.tile(np.linspace(0.1, 0.9, d2), (d1, 1))


class TestAwgn:
    def test_seed_reproducibility(self, blurred):
        a = add_awgn(blurred, 0.05, seed=7)
        b = add_awgn(blurred, 0.05, seed=7)
        np.testing.assert_array_equal(a.observed, b.observed)

    def test_different_seed_differs(self, blurred):
        a = add_awgn(blurred, 0.05, seed=7)
        b = add_awgn(blurred, 0.05, seed=8)
        assert not np.array_equal(a.observed, b.observed)

    def test_sample_std_matches_sigma(self, blurred):
        rec = add_awgn(blurred, 0.05, seed=3)  # n = 65536
        std = (rec.observed - blurred).std()
        assert abs(std - 0.05) <= 0.02 * 0.05

    def test_no_clipping(self):
        rec = add_awgn(np.zeros((64, 64)), 1.0, seed=1)
        assert rec.observed.min() < 0.0

    def test_rejects_nonpositive_sigma(self, blurred):
        with pytest.raises(ValueError):
            add_awgn(blurred, 0.0, seed=0)


class TestAwln:
    def test_mean_abs_matches_scale(self, blurred):
        scale = 0.08
        rec = add_awln(blurred, scale, seed=5)
        mean_abs = np.abs(rec.observed - blurred).mean()
        assert abs(mean_abs - scale) <= 0.02 * scale

    def test_std_matches_scale_sqrt2(self, blurred):
        scale = 0.08
        rec = add_awln(blurred, scale, seed=5)
        std = (rec.observed - blurred).std()
        assert abs(std - scale * np.sqrt(2)) <= 0.03 * scale * np.sqrt(2)

    def test_seed_reproducibility(self, blurred):
        a = add_awln(blurred, 0.1, seed=9)
        b = add_awln(blurred, 0.1, seed=9)
        np.testing.assert_array_equal(a.observed, b.observed)


class TestSpn:
    def test_gamma_zero_is_identity(self, blurred):
        rec = add_spn(blurred, 0.0, seed=1)
        np.testing.assert_array_equal(rec.observed, blurred)
        assert not rec.mask.any()

    def test_gamma_one_corrupts_everything(self, blurred):
        rec = add_spn(blurred, 1.0, seed=1)
        assert rec.mask.all()
        assert np.all(np.isin(rec.observed, (0.0, 1.0)))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_corrupted_fraction_concentrates(self, blurred, seed):
        rec = add_spn(blurred, 0.35, seed=seed)
        assert 0.33 <= rec.mask.mean() <= 0.37

    def test_exact_off_mask(self, blurred):
        rec = add_spn(blurred, 0.3, seed=2)
        np.testing.assert_array_equal(rec.observed[~rec.mask], blurred[~rec.mask])
        assert np.all(np.isin(rec.observed[rec.mask], (0.0, 1.0)))

    def test_extremes_balanced(self, blurred):
        rec = add_spn(blurred, 0.5, seed=3)
        on_mask = rec.observed[rec.mask]
        assert abs((on_mask == 1.0).mean() - 0.5) < 0.02

    def test_rejects_out_of_range_input(self):
        with pytest.raises(ValueError):
            add_spn(np.full((4, 4), 1.5), 0.1, seed=0)


class TestBsnrCalibration:
    def test_zero_db_matches_signal_variance(self):
        u = ramp()
        sigma = sigma_for_bsnr(u, 0.0)
        signal_var = np.sum((u - u.mean()) ** 2) / u.size
        assert sigma**2 == pytest.approx(signal_var, rel=1e-12)

    def test_realized_bsnr_near_target(self):
        u = ramp()
        sigma = sigma_for_bsnr(u, 20.0)
        for seed in range(10):
            rec = add_awgn(u, sigma, seed=seed)
            assert abs(bsnr(rec.observed, u) - 20.0) <= 0.3

    def test_doubling_sigma_costs_six_db(self):
        u = ramp()
        sigma = sigma_for_bsnr(u, 20.0)
        one = bsnr(add_awgn(u, sigma, seed=4).observed, u)
        two = bsnr(add_awgn(u, 2 * sigma, seed=4).observed, u)
        assert one - two == pytest.approx(20 * np.log10(2), abs=1e-9)

    def test_rejects_constant_image(self):
        with pytest.raises(ValueError):
            sigma_for_bsnr(np.full((8, 8), 0.4), 20.0)

    def test_laplace_calibration_energy(self):
        u = ramp()
        scale = laplace_scale_for_bsnr(u, 20.0)
        assert scale * np.sqrt(2) == pytest.approx(sigma_for_bsnr(u, 20.0),
                                                   rel=1e-12)


class TestNoiseSpecAndDispatch:
    def test_identical_spec_identical_record(self, blurred):
        spec = NoiseSpec(kind="awln", level=0.07, seed=11)
        a, b = corrupt(blurred, spec), corrupt(blurred, spec)
        np.testing.assert_array_equal(a.observed, b.observed)
        assert a.realized == b.realized

    def test_target_bsnr_resolution(self):
        u = ramp()
        spec = NoiseSpec(kind="awgn", level=None, seed=0, target_bsnr=20.0)
        rec = corrupt(u, spec)
        assert rec.level == pytest.approx(sigma_for_bsnr(u, 20.0), rel=1e-12)

    def test_spn_rejects_target_bsnr_resolution(self):
        with pytest.raises(ValueError):
            corrupt(ramp(), NoiseSpec(kind="spn", level=0.1, seed=0,
                                      target_bsnr=20.0))

    @pytest.mark.parametrize("kind,level", [("awgn", -1.0), ("awln", 0.0),
                                            ("spn", 1.5), ("spn", None),
                                            ("poisson", 0.1)])
    def test_spec_validation(self, kind, level):
        with pytest.raises(ValueError):
            NoiseSpec(kind=kind, level=level, seed=0)
