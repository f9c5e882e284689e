from __future__ import annotations

import numpy as np
import pytest

from ocbarank.core import (
    AllocationState,
    SeedSpec,
    draw_sample,
    draw_samples,
    estimated_best,
    init_state,
    make_instance,
)
from ocbarank.errors import ConfigError, InstanceError, StateError
from ocbarank.tests.conftest import make_state


def test_make_instance_finds_best_of_builtin_shapes() -> None:
    mu = list(range(1, 11))
    assert make_instance(mu, list(range(1, 11))).best == 9
    assert make_instance(mu, list(range(10, 0, -1))).best == 9
    assert make_instance([0, 1], [1, 1]).best == 1


@pytest.mark.parametrize(
    ("mu", "sigma"),
    [
        ([0, 1], [1, 1, 1]),
        ([0, 1], [1, 0]),
        ([0, 1], [1, -2]),
        ([1, 1], [1, 1]),
        ([3, 1, 3], [1, 1, 1]),
        ([1], [1]),
        ([0, float("nan")], [1, 1]),
    ],
)
def test_make_instance_rejects_invalid_input(mu, sigma) -> None:
    with pytest.raises(InstanceError):
        make_instance(mu, sigma)


def test_instance_gaps_and_others() -> None:
    inst = make_instance([1, 4, 2], [1, 1, 1])
    assert inst.best == 1
    assert inst.gaps.tolist() == [3.0, 0.0, 2.0]
    assert list(inst.others()) == [0, 2]


def test_same_seed_spec_replays_identical_variates(two_designs) -> None:
    a = SeedSpec(12345, 7).stream()
    b = SeedSpec(12345, 7).stream()
    xs = [draw_sample(two_designs, i % 2, a) for i in range(20)]
    ys = [draw_sample(two_designs, i % 2, b) for i in range(20)]
    assert xs == ys


def test_replication_streams_differ(two_designs) -> None:
    a = draw_samples(two_designs, 0, 5, SeedSpec(1, 0).stream())
    b = draw_samples(two_designs, 0, 5, SeedSpec(1, 1).stream())
    assert not np.array_equal(a, b)


@pytest.mark.parametrize(("master", "rep"), [(-1, 0), (2**64, 0), (0, -1)])
def test_seed_spec_validation(master, rep) -> None:
    with pytest.raises(ConfigError):
        SeedSpec(master, rep)


def test_draw_sample_rejects_out_of_range_design(two_designs) -> None:
    with pytest.raises(StateError):
        draw_sample(two_designs, 2, SeedSpec(0, 0).stream())


def test_init_state_totals() -> None:
    inst = make_instance(list(range(1, 11)), list(range(1, 11)))
    state = init_state(inst, 5, SeedSpec(0, 0).stream())
    assert state.total == 50
    assert state.counts.tolist() == [5] * 10
    assert state.t == 0


def test_init_state_two_designs_has_means(two_designs) -> None:
    state = init_state(two_designs, 2, SeedSpec(3, 0).stream())
    assert state.total == 4
    assert np.all(np.isfinite(state.means()))


def test_init_state_replays(two_designs) -> None:
    a = init_state(two_designs, 5, SeedSpec(99, 4).stream())
    b = init_state(two_designs, 5, SeedSpec(99, 4).stream())
    assert a.sums.tolist() == b.sums.tolist()
    assert a.sumsq.tolist() == b.sumsq.tolist()


def test_init_state_rejects_small_n0(two_designs) -> None:
    with pytest.raises(StateError):
        init_state(two_designs, 1, SeedSpec(0, 0).stream())


def test_allocation_state_add_and_conservation() -> None:
    state = AllocationState.empty(3)
    state.add(0, np.array([1.0, 3.0]))
    state.add(1, np.array([2.0]))
    state.add(2, np.array([4.0, 4.0, 4.0]))
    assert state.total == int(state.counts.sum()) == 6
    assert state.means().tolist() == [2.0, 2.0, 4.0]
    assert state.sumsq.tolist() == [10.0, 4.0, 48.0]
    assert state.alloc.sum() == pytest.approx(1.0)


def test_mean_of_unsampled_design_is_an_error() -> None:
    state = AllocationState.empty(2)
    state.add(0, np.array([1.0]))
    with pytest.raises(StateError):
        state.means()
    with pytest.raises(StateError):
        state.mean(1)
    with pytest.raises(StateError):
        state.add(5, np.array([1.0]))


def test_estimated_best_argmax_and_tie_break() -> None:
    assert estimated_best(make_state([3, 3, 3], [0.1, 0.9, 0.5])) == 1
    assert estimated_best(make_state([3, 3], [0.5, 0.5])) == 0


def test_copy_is_independent() -> None:
    state = make_state([2, 2], [0.0, 1.0], t=4)
    other = state.copy()
    other.add(0, np.array([5.0]))
    assert state.counts.tolist() == [2, 2]
    assert other.t == 4


def test_sample_means_converge_under_round_robin() -> None:
    inst = make_instance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    stream = SeedSpec(2024, 0).stream()
    state = AllocationState.empty(3)
    n = 100_000
    for design in range(3):
        state.add(design, draw_samples(inst, design, n, stream))
    tol = 5 * inst.sigma_array / np.sqrt(n)
    assert np.all(np.abs(state.means() - inst.mu_array) < tol)
