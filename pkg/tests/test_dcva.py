import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdconf.dcva import (
    ChangeResult,
    MagnitudeMap,
    detect,
    detect_pair,
    hypervector,
    magnitude,
    otsu_bin,
    otsu_threshold,
    threshold_labels,
)
from cdconf.errors import DimsMismatch
from cdconf.features import ExtractorSpec
from cdconf.raster import Raster

from oracles import otsu_bin_bruteforce, otsu_tau_bruteforce


def _mm(values) -> MagnitudeMap:
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return MagnitudeMap(arr)


class TestHypervector:
    def test_identical_stacks_zero(self):
        f = np.random.default_rng(0).normal(size=(4, 4, 3)).astype(np.float32)
        assert np.all(hypervector(f, f.copy()) == 0)

    def test_subtraction(self):
        f1 = np.array([[[1.0, 2.0]]], dtype=np.float32)
        f2 = np.array([[[4.0, 6.0]]], dtype=np.float32)
        assert np.array_equal(hypervector(f1, f2)[0, 0], [3.0, 4.0])

    def test_antisymmetric(self):
        rng = np.random.default_rng(1)
        f1 = rng.normal(size=(3, 5, 4)).astype(np.float32)
        f2 = rng.normal(size=(3, 5, 4)).astype(np.float32)
        assert np.array_equal(hypervector(f1, f2), -hypervector(f2, f1))

    def test_dims_mismatch(self):
        with pytest.raises(DimsMismatch):
            hypervector(np.zeros((2, 2, 3), np.float32), np.zeros((2, 2, 2), np.float32))


class TestMagnitude:
    def test_three_four_five(self):
        g = np.array([[[3.0, 4.0]]], dtype=np.float32)
        assert magnitude(g).rho[0, 0] == 5.0

    def test_zero(self):
        assert magnitude(np.zeros((2, 2, 8), np.float32)).rho.max() == 0.0

    def test_unit_dims(self):
        g = np.ones((1, 1, 4), dtype=np.float32)
        assert magnitude(g).rho[0, 0] == 2.0

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_nonneg_and_zero_iff_identical(self, seed):
        rng = np.random.Generator(np.random.Philox(key=seed))
        g = rng.normal(size=(5, 5, 3)).astype(np.float32)
        g[1, 2] = 0
        g[3, 4] = 0
        m = magnitude(g)
        assert (m.rho >= 0).all()
        identical = np.all(g == 0, axis=-1)
        assert np.array_equal(m.rho == 0, identical)


class TestOtsu:
    def test_two_mass_example(self):
        values = np.array([0.0] * 50 + [1.0] * 50)
        tau = otsu_threshold(_mm(values))
        assert tau == pytest.approx(1 / 256)
        assert 0 <= tau < 1

    def test_constant_map(self):
        m = _mm(np.full(40, 0.7))
        tau = otsu_threshold(m)
        assert tau == np.float32(0.7)
        assert threshold_labels(m, tau).changed.sum() == 0

    def test_lowest_tie_bin(self):
        # empty bins between the two masses leave a run of tied thresholds;
        # the lowest bin index must win
        values = np.array([0.0] * 50 + [1.0] * 50)
        assert otsu_bin(_mm(values)) == 0

    def test_matches_bruteforce_on_mixtures(self):
        rng = np.random.Generator(np.random.Philox(key=99))
        for _ in range(40):
            kind = rng.integers(3)
            if kind == 0:
                v = rng.uniform(0, 1, size=500)
            elif kind == 1:
                v = np.abs(rng.normal(0, 1, size=500))
            else:
                v = np.concatenate(
                    [rng.normal(0.2, 0.05, 300), rng.normal(0.9, 0.1, 200)]
                )
            v = np.abs(v).astype(np.float32)
            assert otsu_bin(_mm(v)) == otsu_bin_bruteforce(v)
            assert otsu_threshold(_mm(v)) == pytest.approx(otsu_tau_bruteforce(v), abs=1e-12)

    def test_few_bins(self):
        v = np.array([0.0, 0.1, 0.2, 0.9, 1.0], dtype=np.float32)
        assert otsu_bin(_mm(v), bins=4) == otsu_bin_bruteforce(v, bins=4)

    def test_bins_validation(self):
        with pytest.raises(ValueError):
            otsu_threshold(_mm([0.0, 1.0]), bins=1)


class TestDetect:
    def test_identical_stacks_all_unchanged(self):
        f = np.random.default_rng(3).normal(size=(6, 6, 4)).astype(np.float32)
        res = detect(f, f.copy())
        assert res.tau == 0.0
        assert res.labels.changed.sum() == 0

    def test_planted_block_recovered_exactly(self):
        f1 = np.zeros((16, 16, 2), dtype=np.float32)
        f2 = np.zeros((16, 16, 2), dtype=np.float32)
        f2[4:8, 6:10] = (3.0, 4.0)
        res = detect(f1, f2)
        want = np.zeros((16, 16), dtype=bool)
        want[4:8, 6:10] = True
        assert np.array_equal(res.labels.changed, want)
        assert res.magnitude.rho[5, 7] == 5.0

    def test_labels_recomputable_from_rho_and_tau(self):
        rng = np.random.default_rng(4)
        f1 = rng.normal(size=(9, 9, 3)).astype(np.float32)
        f2 = rng.normal(size=(9, 9, 3)).astype(np.float32)
        res = detect(f1, f2)
        assert np.array_equal(res.labels.changed, res.magnitude.rho > np.float64(res.tau))

    @pytest.mark.parametrize("scale", [0.5, 4.0, 3.7])
    def test_positive_scale_leaves_labels(self, scale):
        rng = np.random.default_rng(5)
        f1 = rng.normal(size=(12, 12, 3)).astype(np.float32)
        f2 = rng.normal(size=(12, 12, 3)).astype(np.float32)
        base = detect(f1, f2)
        scaled = detect(f1 * np.float32(scale), f2 * np.float32(scale))
        assert np.array_equal(base.labels.changed, scaled.labels.changed)

    def test_scale_scales_rho_exactly_for_pow2(self):
        rng = np.random.default_rng(6)
        f1 = rng.normal(size=(7, 7, 3)).astype(np.float32)
        f2 = rng.normal(size=(7, 7, 3)).astype(np.float32)
        base = detect(f1, f2)
        scaled = detect(f1 * np.float32(4.0), f2 * np.float32(4.0))
        assert np.array_equal(scaled.magnitude.rho, base.magnitude.rho * np.float32(4.0))

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        f1 = rng.normal(size=(8, 8, 5)).astype(np.float32)
        f2 = rng.normal(size=(8, 8, 5)).astype(np.float32)
        a = detect(f1, f2)
        b = detect(f1, f2)
        assert a.tau == b.tau
        assert np.array_equal(a.magnitude.rho, b.magnitude.rho)
        assert np.array_equal(a.labels.changed, b.labels.changed)

    def test_partition_exhaustive_exclusive(self):
        rng = np.random.default_rng(8)
        f1 = rng.normal(size=(10, 10, 2)).astype(np.float32)
        f2 = rng.normal(size=(10, 10, 2)).astype(np.float32)
        res = detect(f1, f2)
        changed = res.labels.changed
        unchanged = res.magnitude.rho <= np.float64(res.tau)
        assert np.array_equal(changed, ~unchanged)


class TestDetectPair:
    def test_identical_rasters_all_unchanged(self):
        rng = np.random.Generator(np.random.Philox(key=21))
        x = Raster(rng.uniform(size=(3, 10, 10)).astype(np.float32))
        spec = ExtractorSpec(depth=3, taps=(1, 3), channels=4, seed=2)
        res = detect_pair(x, Raster(x.data.copy()), spec)
        assert res.labels.changed.sum() == 0
        assert res.magnitude.rho.max() == 0.0


class TestChangeResultType:
    def test_rejects_negative_rho(self):
        with pytest.raises(ValueError):
            MagnitudeMap(np.array([[-1.0]], dtype=np.float32))

    def test_holds_components(self):
        m = _mm([0.0, 1.0])
        res = ChangeResult(magnitude=m, tau=0.5, labels=threshold_labels(m, 0.5))
        assert res.labels.changed[0, 1]
        assert not res.labels.changed[0, 0]
