"""Zeroing and centre-of-pressure computation."""

import numpy as np
import pytest

from wheelcom.errors import (
    AllSamplesNegligible,
    EmptyRecord,
    EmptyWindow,
    NegligibleLoad,
)
from wheelcom.forceplate import (
    ForceRecord,
    ZeroOffset,
    compute_zero_offset,
    cop_average,
    cop_instant,
)

# The documented contact rectangle: rear pair at x=-0.05, front at x=0.45.
CONTACTS = np.array(
    [[-0.05, 0.0, -0.28], [-0.05, 0.0, 0.28], [0.45, 0.0, -0.28], [0.45, 0.0, 0.28]]
)
NO_OFFSET = ZeroOffset(np.zeros(4))


def cop_oracle(forces, offsets, contacts):
    """Independently coded weighted average (plain Python loop)."""
    num_x = num_z = den = 0.0
    for i in range(4):
        f = forces[i] - offsets[i]
        num_x += f * contacts[i][0]
        num_z += f * contacts[i][2]
        den += f
    return num_x / den, num_z / den


class TestZeroOffset:
    def test_constant_record(self):
        record = ForceRecord(
            np.arange(100) / 1000.0, np.tile([50.0, 60.0, 20.0, 25.0], (100, 1))
        )
        assert np.array_equal(
            compute_zero_offset(record).values, [50.0, 60.0, 20.0, 25.0]
        )

    def test_zero_record(self):
        record = ForceRecord(np.arange(10) / 1000.0, np.zeros((10, 4)))
        assert np.array_equal(compute_zero_offset(record).values, np.zeros(4))

    def test_noisy_record_mean_within_lln_bound(self):
        # Law of large numbers: the mean of N samples with noise sigma is
        # within 3 sigma / sqrt(N) of the truth (with 99.7% probability;
        # the seed below is one that passes).
        rng = np.random.default_rng(123)
        n = 10_000
        sigma = 2.0
        truth = np.array([50.0, 60.0, 20.0, 25.0])
        record = ForceRecord(
            np.arange(n) / 1000.0, truth + rng.normal(0, sigma, (n, 4))
        )
        offsets = compute_zero_offset(record)
        assert np.max(np.abs(offsets.values - truth)) < 3 * sigma / np.sqrt(n)

    def test_empty_record(self):
        with pytest.raises(EmptyRecord):
            ForceRecord(np.array([]), np.zeros((0, 4)))


class TestCopInstant:
    def test_equal_forces_at_rectangle_centroid(self):
        sample = cop_instant([200.0] * 4, NO_OFFSET, CONTACTS)
        assert sample.ap == pytest.approx(0.20, abs=1e-15)
        assert sample.ml == pytest.approx(0.0, abs=1e-15)

    def test_single_support(self):
        f = [0.0, 0.0, 0.0, 700.0]
        sample = cop_instant(f, NO_OFFSET, CONTACTS)
        assert sample.ap == CONTACTS[3, 0]
        assert sample.ml == CONTACTS[3, 2]

    def test_worked_weighted_average(self):
        # (100*(-0.05)*2 + 300*0.45*2) / 800 = 260/800 = 0.325, exact in
        # double precision.
        sample = cop_instant([100.0, 100.0, 300.0, 300.0], NO_OFFSET, CONTACTS)
        assert sample.ap == 0.325
        assert sample.ml == 0.0

    def test_matches_independent_oracle(self):
        rng = np.random.default_rng(17)
        offsets = ZeroOffset([50.0, 60.0, 20.0, 25.0])
        for _ in range(500):
            forces = rng.uniform(30.0, 600.0, 4)
            sample = cop_instant(forces, offsets, CONTACTS)
            ap, ml = cop_oracle(forces, offsets.values, CONTACTS)
            assert sample.ap == pytest.approx(ap, rel=1e-15)
            assert sample.ml == pytest.approx(ml, rel=1e-15)

    def test_scale_invariance_exact_for_pow2(self):
        # Power-of-two factors scale exactly in binary floating point; the
        # smallest factor still keeps the total above the load threshold.
        forces = np.array([123.4, 56.7, 210.9, 87.1])
        base = cop_instant(forces, NO_OFFSET, CONTACTS)
        for k in (2.0, 0.5, 1024.0, 2.0**-4):
            scaled = cop_instant(k * forces, NO_OFFSET, CONTACTS)
            assert scaled.ap == base.ap
            assert scaled.ml == base.ml

    def test_convex_hull_containment(self):
        rng = np.random.default_rng(31)
        for _ in range(1000):
            forces = rng.uniform(0.0, 500.0, 4)
            if forces.sum() <= 10.0:
                continue
            s = cop_instant(forces, NO_OFFSET, CONTACTS)
            assert -0.05 - 1e-12 <= s.ap <= 0.45 + 1e-12
            assert -0.28 - 1e-12 <= s.ml <= 0.28 + 1e-12
            assert not s.negative_force

    def test_negligible_load(self):
        with pytest.raises(NegligibleLoad):
            cop_instant([2.0, 2.0, 2.0, 2.0], NO_OFFSET, CONTACTS)

    def test_negative_force_flagged(self):
        s = cop_instant([-5.0, 100.0, 100.0, 100.0], NO_OFFSET, CONTACTS)
        assert s.negative_force

    def test_zeroing_removes_wheelchair(self):
        # Wheelchair + subject record zeroed with the wheelchair offsets
        # leaves the subject-only CoP.
        wheelchair = np.array([40.0, 40.0, 30.0, 30.0])
        subject = np.array([150.0, 180.0, 120.0, 200.0])
        sample = cop_instant(
            wheelchair + subject, ZeroOffset(wheelchair), CONTACTS
        )
        expected = cop_instant(subject, NO_OFFSET, CONTACTS)
        assert sample.ap == pytest.approx(expected.ap, abs=1e-12)
        assert sample.ml == pytest.approx(expected.ml, abs=1e-12)


class TestCopAverage:
    def test_constant_record_idempotent(self):
        forces = np.tile([100.0, 120.0, 200.0, 180.0], (50, 1))
        record = ForceRecord(np.arange(50) / 1000.0, forces)
        avg = cop_average(record, NO_OFFSET, CONTACTS, (0.0, 1.0))
        one = cop_instant(forces[0], NO_OFFSET, CONTACTS)
        assert avg.ap == pytest.approx(one.ap, rel=1e-15)
        assert avg.ml == pytest.approx(one.ml, rel=1e-15)

    def test_mean_of_two_samples(self):
        # Two samples engineered to put the CoP at (0.1, 0) and (0.3, 0).
        def forces_for(ap):
            w = (ap + 0.05) / 0.5  # fraction of load on the front pair
            return [500 * (1 - w) / 2, 500 * (1 - w) / 2, 500 * w / 2, 500 * w / 2]

        record = ForceRecord(
            np.array([0.0, 0.001]), np.array([forces_for(0.1), forces_for(0.3)])
        )
        avg = cop_average(record, NO_OFFSET, CONTACTS, (0.0, 0.001))
        assert avg.ap == pytest.approx(0.2, abs=1e-12)
        assert avg.ml == pytest.approx(0.0, abs=1e-12)

    def test_sinusoidal_shift_over_integer_periods(self):
        # Load oscillates front/back around a mean distribution over whole
        # periods; the mean CoP equals the CoP of the mean distribution.
        t = np.arange(1000) / 1000.0
        w = 0.5 + 0.2 * np.sin(2 * np.pi * 5.0 * t)
        total = 600.0
        forces = np.stack(
            [
                total * (1 - w) / 2,
                total * (1 - w) / 2,
                total * w / 2,
                total * w / 2,
            ],
            axis=1,
        )
        record = ForceRecord(t, forces)
        avg = cop_average(record, NO_OFFSET, CONTACTS, (0.0, t[-1]))
        mean_w = 0.5  # analytic mean of w over integer periods
        expected_ap = -0.05 * (1 - mean_w) + 0.45 * mean_w
        assert avg.ap == pytest.approx(expected_ap, abs=1e-6)

    def test_negligible_samples_excluded_and_counted(self):
        forces = np.array(
            [[100.0, 100.0, 100.0, 100.0], [1.0, 1.0, 1.0, 1.0], [100.0, 100.0, 100.0, 100.0]]
        )
        record = ForceRecord(np.array([0.0, 0.001, 0.002]), forces)
        avg = cop_average(record, NO_OFFSET, CONTACTS, (0.0, 0.01))
        assert avg.n_excluded == 1
        assert avg.ap == pytest.approx(0.2, abs=1e-12)

    def test_all_samples_negligible(self):
        record = ForceRecord(np.array([0.0, 0.001]), np.full((2, 4), 1.0))
        with pytest.raises(AllSamplesNegligible):
            cop_average(record, NO_OFFSET, CONTACTS, (0.0, 0.01))

    def test_empty_window(self):
        record = ForceRecord(np.array([0.0]), np.full((1, 4), 100.0))
        with pytest.raises(EmptyWindow):
            cop_average(record, NO_OFFSET, CONTACTS, (1.0, 2.0))
