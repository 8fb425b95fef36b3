import numpy as np
import pytest
from scipy.stats import kstest

from chainlab.dynamics import ChainParams, ChainState, regenerate, simulate
from chainlab.errors import DomainViolationError
from chainlab.perturbation import (ExplicitSchedule, generate_schedule,
                                   simulate_perturbed)

STABLE = ChainParams(r_x=0.8, r_y=0.76, K_x=0.95, K_y=1.0, a_yx=-0.1, a_xy=0.0)
INITIAL = ChainState(0.5, 0.5)


class TestGenerateSchedule:
    def test_same_seed_identical(self):
        a = generate_schedule("r_x", 0.05, 0.5, 1.5, seed=3, horizon=5000)
        b = generate_schedule("r_x", 0.05, 0.5, 1.5, seed=3, horizon=5000)
        assert a.events == b.events
        assert a.waiting_times == b.waiting_times

    def test_different_seeds_differ(self):
        a = generate_schedule("r_x", 0.05, 0.5, 1.5, seed=3, horizon=5000)
        b = generate_schedule("r_x", 0.05, 0.5, 1.5, seed=4, horizon=5000)
        assert a.events != b.events

    def test_indices_strictly_increasing(self):
        sch = generate_schedule("K_y", 2.0, 0.9, 1.1, seed=11, horizon=2000)
        idx = [it for it, _ in sch.events]
        assert all(b > a for a, b in zip(idx, idx[1:]))

    def test_values_within_bounds(self):
        sch = generate_schedule("a_yx", 0.5, -0.2, -0.05, seed=1, horizon=2000)
        assert all(-0.2 <= v <= -0.05 for _, v in sch.events)

    def test_tiny_rate_gives_empty_schedule(self):
        sch = generate_schedule("r_x", 1e-9, 0.5, 1.5, seed=0, horizon=10_000)
        assert sch.events == ()

    def test_event_count_concentration(self):
        # mean 1/rate = 100 iterations; expect horizon*rate = 10000 events
        # within 3 standard deviations for each of 100 seeds
        for seed in range(100):
            sch = generate_schedule("K_x", 0.01, 0.9, 1.1, seed=seed,
                                    horizon=1_000_000)
            assert abs(len(sch.waiting_times) - 10_000) <= 300, seed

    def test_waiting_times_exponential(self):
        sch = generate_schedule("r_x", 1.0, 0.5, 1.5, seed=42, horizon=11_000)
        w = np.asarray(sch.waiting_times)
        assert len(w) >= 10_000
        assert kstest(w[:10_000], "expon", args=(0, 1.0)).pvalue > 0.01

    def test_validation(self):
        with pytest.raises(DomainViolationError):
            generate_schedule("bogus", 0.1, 0.0, 1.0, seed=0, horizon=10)
        with pytest.raises(DomainViolationError):
            generate_schedule("r_x", -0.1, 0.0, 1.0, seed=0, horizon=10)
        with pytest.raises(DomainViolationError):
            generate_schedule("r_x", 0.1, 1.0, 0.5, seed=0, horizon=10)


class TestSimulatePerturbed:
    def test_empty_schedule_matches_plain_simulate(self):
        sch = ExplicitSchedule("r_x", ())
        traj, applied = simulate_perturbed(INITIAL, STABLE, [sch], 2000)
        plain = simulate(INITIAL, STABLE, 2000)
        assert applied == []
        assert np.array_equal(traj.xs, plain.xs)
        assert np.array_equal(traj.ys, plain.ys)

    def test_noop_shock_matches_plain_simulate(self):
        sch = ExplicitSchedule("r_x", ((100, STABLE.r_x),))
        traj, applied = simulate_perturbed(INITIAL, STABLE, [sch], 2000)
        plain = simulate(INITIAL, STABLE, 2000)
        assert len(applied) == 1
        assert np.array_equal(traj.xs, plain.xs)
        assert np.array_equal(traj.ys, plain.ys)

    def test_seeded_run_bit_identical(self):
        sch = generate_schedule("K_y", 0.02, 0.9, 1.1, seed=5, horizon=3000)
        t1, _ = simulate_perturbed(INITIAL, STABLE, [sch], 3000)
        t2, _ = simulate_perturbed(INITIAL, STABLE, [sch], 3000)
        assert np.array_equal(t1.xs, t2.xs)
        assert np.array_equal(t1.ys, t2.ys)

    def test_reconverges_to_moving_fixed_point(self):
        # a K_x shock moves the interior fixed point to K_x - a_yx*K_y
        sch = ExplicitSchedule("K_x", ((100, 1.1), (5000, 0.9)))
        traj, applied = simulate_perturbed(INITIAL, STABLE, [sch], 10_000)
        assert [e.iteration for e in applied] == [100, 5000]
        assert abs(traj.final.x - (0.9 + 0.1 * 1.0)) < 1e-3
        assert abs(traj.final.y - 1.0) < 1e-3

    def test_shocked_values_stay_in_bounds(self):
        sch = generate_schedule("r_x", 0.05, 0.3, 1.5, seed=9, horizon=4000)
        _, applied = simulate_perturbed(INITIAL, STABLE, [sch], 4000)
        assert applied
        assert all(0.3 <= e.value <= 1.5 for e in applied)

    def test_events_beyond_run_not_applied(self):
        sch = ExplicitSchedule("K_x", ((50, 1.05), (500, 1.2)))
        _, applied = simulate_perturbed(INITIAL, STABLE, [sch], 100)
        assert [e.iteration for e in applied] == [50]

    def test_distinct_targets_required(self):
        a = ExplicitSchedule("r_x", ((10, 1.0),))
        b = ExplicitSchedule("r_x", ((20, 1.2),))
        with pytest.raises(DomainViolationError):
            simulate_perturbed(INITIAL, STABLE, [a, b], 100)

    def test_same_iteration_applies_in_canonical_order(self):
        a = ExplicitSchedule("K_x", ((10, 1.05),))
        b = ExplicitSchedule("r_x", ((10, 0.9),))
        _, applied = simulate_perturbed(INITIAL, STABLE, [b, a], 100)
        assert [(e.iteration, e.target) for e in applied] == \
            [(10, "r_x"), (10, "K_x")]

    def test_regenerate_from_provenance(self):
        sch = generate_schedule("K_y", 0.02, 0.9, 1.1, seed=5, horizon=3000)
        traj, _ = simulate_perturbed(INITIAL, STABLE, [sch], 3000)
        again = regenerate(traj)
        assert np.array_equal(traj.xs, again.xs)
        assert np.array_equal(traj.ys, again.ys)
