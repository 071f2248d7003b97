import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogsim.workload import (Catalog, DemandProfile, Phase, WorkloadError,
                             demand_snapshot, sample_arrivals, sample_contents,
                             zipf_pmf)


class TestZipf:
    def test_exact_values_three_contents(self):
        # ranks 1..3, s=2: weights 1, 1/4, 1/9 -> normalizer 49/36
        cat = Catalog(3, zipf_s=2.0)
        assert zipf_pmf(cat, 1) == pytest.approx(36 / 49, abs=1e-15)
        assert zipf_pmf(cat, 2) == pytest.approx(9 / 49, abs=1e-15)
        assert zipf_pmf(cat, 3) == pytest.approx(4 / 49, abs=1e-15)

    def test_normalized_and_decreasing(self):
        for size, s in [(1, 1.1), (10, 1.2), (500, 2.5)]:
            pmf = zipf_pmf(Catalog(size, s))
            assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(np.diff(pmf) <= 0)

    @given(size=st.integers(1, 200), s=st.floats(1.01, 4.0))
    @settings(max_examples=50, deadline=None)
    def test_normalization_property(self, size, s):
        pmf = zipf_pmf(Catalog(size, s))
        assert abs(pmf.sum() - 1.0) < 1e-12
        assert np.all(pmf > 0)

    def test_rank_out_of_range(self):
        with pytest.raises(WorkloadError):
            zipf_pmf(Catalog(3, 1.5), 0)
        with pytest.raises(WorkloadError):
            zipf_pmf(Catalog(3, 1.5), 4)

    def test_catalog_validation(self):
        with pytest.raises(WorkloadError):
            Catalog(0, 1.5)
        with pytest.raises(WorkloadError):
            Catalog(5, 1.0)  # skew must exceed 1

    def test_empirical_frequencies_match_pmf(self):
        cat = Catalog(20, 1.3)
        rng = np.random.default_rng(0)
        draws = sample_contents(cat, 100_000, rng)
        freq = np.bincount(draws, minlength=cat.size) / len(draws)
        assert np.max(np.abs(freq - zipf_pmf(cat))) < 0.01


class TestArrivals:
    def profile(self, rate=3.0):
        return DemandProfile([Phase(0, rate)], Catalog(10, 1.2))

    def test_poisson_mean(self):
        rate = 3.0
        rng = np.random.default_rng(1)
        prof = self.profile(rate)
        counts = [len(sample_arrivals(prof, 0, t, rng)) for t in range(10_000)]
        assert np.mean(counts) == pytest.approx(rate, rel=0.025)

    def test_request_fields(self):
        rng = np.random.default_rng(2)
        prof = self.profile(5.0)
        reqs = sample_arrivals(prof, 7, 42, rng)
        times = [r.arrival_time for r in reqs]
        assert times == sorted(times)
        for r in reqs:
            assert 42 <= r.arrival_time < 43
            assert r.ingress == 7
            assert 0 <= r.content < 10

    def test_zero_rate(self):
        prof = DemandProfile([Phase(0, 0.0)], Catalog(5, 1.2))
        assert sample_arrivals(prof, 0, 0, np.random.default_rng(0)) == []

    def test_deterministic_for_seed(self):
        prof = self.profile()
        a = [sample_arrivals(prof, 0, t, np.random.default_rng(9))
             for t in range(20)]
        b = [sample_arrivals(prof, 0, t, np.random.default_rng(9))
             for t in range(20)]
        assert a == b


class TestProfile:
    def test_phase_selection_and_shifts(self):
        prof = DemandProfile(
            [Phase(0, 1.0), Phase(100, 2.0), Phase(500, 3.0)],
            Catalog(5, 1.2))
        assert prof.phase_at(0).base_rate == 1.0
        assert prof.phase_at(99).base_rate == 1.0
        assert prof.phase_at(100).base_rate == 2.0
        assert prof.phase_at(499).base_rate == 2.0
        assert prof.phase_at(10_000).base_rate == 3.0
        assert prof.shift_slots() == [100, 500]

    def test_validation(self):
        with pytest.raises(WorkloadError):
            DemandProfile([], Catalog(5, 1.2))
        with pytest.raises(WorkloadError):
            DemandProfile([Phase(10, 1.0), Phase(5, 1.0)], Catalog(5, 1.2))
        with pytest.raises(WorkloadError):
            DemandProfile([Phase(0, -1.0)], Catalog(5, 1.2))

    def test_node_multipliers(self):
        p = Phase(0, 2.0, {3: 1.5})
        assert p.rate(3) == 3.0
        assert p.rate(0) == 2.0

    def test_demand_snapshot(self):
        cat = Catalog(4, 1.5)
        prof = DemandProfile([Phase(0, 2.0, {1: 0.5}), Phase(50, 4.0)], cat)
        snap = demand_snapshot(prof, 0, [0, 1])
        pmf = zipf_pmf(cat)
        assert np.allclose(snap[0], 2.0 * pmf)
        assert np.allclose(snap[1], 1.0 * pmf)
        snap2 = demand_snapshot(prof, 50, [0, 1])
        assert np.allclose(snap2, 4.0 * pmf[None, :])
        # each row sums to the node's arrival rate
        assert snap.sum(axis=1) == pytest.approx([2.0, 1.0])
