import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import direct_cvm
from cvmcp import core
from cvmcp.errors import DegenerateSample, NonFinite, SplitOutOfRange, TiesPresent, TooShort

distinct = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=40, unique=True)


class TestValidate:
    def test_plain(self):
        s = core.validate_sample([3.0, 1.0, 2.0])
        assert s.n == 3
        assert s.ranks.tolist() == [3, 1, 2]
        assert not s.values.flags.writeable

    @pytest.mark.parametrize("raw,err", [
        ([1.0], TooShort),
        ([], TooShort),
        ([1.0, np.nan, 2.0], NonFinite),
        ([1.0, np.inf], NonFinite),
    ])
    def test_rejects(self, raw, err):
        with pytest.raises(err):
            core.validate_sample(raw)

    def test_ties_reported_with_count(self):
        with pytest.raises(TiesPresent) as info:
            core.validate_sample([1.0, 2.0, 2.0, 3.0, 3.0, 3.0])
        assert info.value.n_tied == 5
        assert "5 tied" in str(info.value)

    def test_jitter_touches_only_ties(self):
        raw = np.array([5.0, 1.0, 1.0, 9.0, 4.0, 4.0])
        s = core.validate_sample(raw, ties="jitter", jitter_seed=7)
        assert np.unique(s.values).size == raw.size
        untied = [0, 3]
        assert np.array_equal(s.values[untied], raw[untied])
        assert np.all(np.abs(s.values - raw) <= 1e-9 * np.ptp(raw))
        assert s.metadata["jitter_seed"] == 7 and s.metadata["jittered"] == 4

    def test_jitter_is_seeded(self):
        raw = [1.0, 1.0, 2.0, 2.0]
        a = core.validate_sample(raw, ties="jitter", jitter_seed=3)
        b = core.validate_sample(raw, ties="jitter", jitter_seed=3)
        assert np.array_equal(a.values, b.values)

    def test_jitter_without_seed_records_one(self):
        s = core.validate_sample([2.0, 2.0, 1.0], ties="jitter")
        assert isinstance(s.metadata["jitter_seed"], int)


class TestTwoSample:
    def test_n2_exact(self):
        assert core.two_sample_cvm(core.validate_sample([0.1, 0.7]), 1) == 0.25
        assert core.two_sample_cvm(core.validate_sample([0.7, 0.1]), 1) == 0.25

    @pytest.mark.parametrize("c", [0, 5, -1])
    def test_split_range(self, c):
        with pytest.raises(SplitOutOfRange):
            core.two_sample_cvm(core.validate_sample([1.0, 2.0, 3.0, 4.0, 5.0]), c)

    @pytest.mark.parametrize("n", [2, 3, 7, 19, 30])
    def test_matches_direct_definition(self, n, rng):
        x = rng.standard_normal(n)
        s = core.validate_sample(x)
        for c in range(1, n):
            ref = direct_cvm(x, c)
            assert core.two_sample_cvm(s, c) == pytest.approx(ref, rel=1e-12, abs=1e-15)

    def test_hand_value(self):
        # head {1, 2}, tail {3, 4}: F - G = 1/2, 1, 1/2, 0 on the pooled points
        s = core.validate_sample([1.0, 2.0, 3.0, 4.0])
        assert core.two_sample_cvm(s, 2) == pytest.approx(2 * 2 / 4 * (0.25 + 1 + 0.25) / 4)


class TestScan:
    @pytest.mark.parametrize("n", [2, 5, 30, 257])
    def test_scan_equals_single_splits(self, n, rng):
        s = core.validate_sample(rng.random(n))
        res = core.scan(s)
        assert res.w.shape == (n - 1,)
        ref = np.array([core.two_sample_cvm(s, c) for c in range(1, n)])
        np.testing.assert_allclose(res.w, ref, rtol=1e-12, atol=1e-15)
        assert res.wbar == pytest.approx(math.fsum(ref) / (n - 1), rel=1e-12)
        assert res.wmax == ref.max()
        assert res.c_hat == int(np.argmax(ref)) + 1

    def test_large_n_exact_path(self, rng):
        # beyond the int64 range of the kernel the combination is done in Python ints
        n = 4500
        x = rng.random(n)
        res = core.scan(core.validate_sample(x))
        for c in (1, 17, 2250, n - 1):
            assert res.w[c - 1] == pytest.approx(direct_cvm(x, c), rel=1e-11)

    def test_tied_maximum_flag(self):
        # reversal-symmetric data gives W(c) = W(n - c)
        res = core.scan(core.validate_sample([2.0, 1.0, 3.0, 4.0]))
        assert res.c_hat == int(np.argmax(res.w)) + 1

    def test_batch_matches_scan(self, rng):
        rows = np.array([rng.permutation(50) + 1 for _ in range(20)])
        wbar, wmax, chat = core.scan_batch(rows)
        for r, a, b, c in zip(rows, wbar, wmax, chat):
            res = core.scan(core.validate_sample(r.astype(float)))
            assert a == res.wbar and b == res.wmax and c == res.c_hat

    def test_monotone_trend_peaks_in_middle(self):
        res = core.scan(core.validate_sample(np.arange(100.0)))
        assert res.c_hat == 50

    @settings(max_examples=60, deadline=None)
    @given(distinct)
    def test_nonnegative_and_ordered(self, xs):
        res = core.scan(core.validate_sample(xs))
        assert np.all(res.w >= 0)
        assert res.wbar <= res.wmax + 1e-15

    @settings(max_examples=60, deadline=None)
    @given(distinct)
    def test_rank_invariance(self, xs):
        x = np.array(xs)
        y = np.arctan(x / 1e3) * 7 + 2
        assume(np.unique(y).size == x.size)
        a = core.scan(core.validate_sample(x))
        b = core.scan(core.validate_sample(y))
        np.testing.assert_array_equal(a.w, b.w)

    @settings(max_examples=60, deadline=None)
    @given(distinct)
    def test_reversal_symmetry(self, xs):
        x = np.array(xs)
        a = core.scan(core.validate_sample(x)).w
        b = core.scan(core.validate_sample(x[::-1])).w
        np.testing.assert_allclose(a, b[::-1], rtol=1e-12, atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(distinct)
    def test_negation_symmetry(self, xs):
        x = np.array(xs)
        np.testing.assert_allclose(core.scan(core.validate_sample(x)).w, core.scan(core.validate_sample(-x)).w,
                                   rtol=1e-12, atol=1e-15)


class TestMeanChange:
    def test_too_short(self):
        with pytest.raises(TooShort):
            core.mean_change_scan(core.validate_sample([1.0, 2.0]))

    def test_two_level_sequence_degenerate(self):
        # X_i = a on both sides: no variability at all
        s = core.Sample(np.full(10, 3.0))
        with pytest.raises(DegenerateSample):
            core.mean_change_scan(s)

    def test_direct_formula(self, rng):
        x = rng.standard_normal(25)
        res = core.mean_change_scan(core.validate_sample(x))
        n = x.size
        for c in (1, 9, 24):
            d = n - c
            ref = (x[:c].mean() - x[c:].mean()) * math.sqrt(c * d / n)
            assert res.t[c - 1] == pytest.approx(ref, rel=1e-10, abs=1e-12)
        assert res.s1sq == pytest.approx(np.sum(np.diff(x) ** 2) / (2 * (n - 1)))
        assert res.ts2 == pytest.approx(res.tbar2 / res.s1sq)

    def test_location_scale_invariance(self, rng):
        x = rng.standard_normal(40)
        a = core.mean_change_scan(core.validate_sample(x))
        b = core.mean_change_scan(core.validate_sample(3 * x + 11))
        np.testing.assert_allclose(b.t, 3 * a.t, rtol=1e-9)
        assert b.ts2 == pytest.approx(a.ts2, rel=1e-10)

    def test_batch_matches(self, rng):
        x = rng.standard_normal((5, 30))
        tbar2, s1sq, ts2 = core.mean_change_batch(x)
        for row, a, b, c in zip(x, tbar2, s1sq, ts2):
            res = core.mean_change_scan(core.validate_sample(row))
            assert a == pytest.approx(res.tbar2, rel=1e-12)
            assert b == pytest.approx(res.s1sq, rel=1e-12)
            assert c == pytest.approx(res.ts2, rel=1e-12)
