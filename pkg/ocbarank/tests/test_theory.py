from __future__ import annotations

import math

import numpy as np
import pytest

from ocbarank.core import make_instance
from ocbarank.errors import InstanceError, StateError
from ocbarank.harness.instances import builtin_instance
from ocbarank.theory import (
    gaussian_kl,
    gordon_tail_bounds,
    kl_to_best,
    linear_regret_rate,
    ocba1_allocation,
    ocba1_residuals,
    ocba2_allocation,
    ocba2_residuals,
    pairwise_false_prob,
    pfs_bounds,
    rate_constants,
    std_normal_cdf,
    theory_report,
    um_constants,
)
from ocbarank.tests.conftest import load_resource

PHI_MINUS_ONE = 0.158655253931457


def _random_instances(n: int, k_range=(2, 12), seed: int = 7):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        k = int(rng.integers(*k_range))
        mu = rng.uniform(-5.0, 5.0, size=k)
        sigma = rng.uniform(0.2, 5.0, size=k)
        gaps = np.sort(mu)[-1] - np.sort(mu)[-2]
        if gaps < 0.05:
            continue
        out.append(make_instance(mu, sigma))
    return out


def test_ocba1_two_designs_closed_forms() -> None:
    assert ocba1_allocation([0, 1], [1, 1], 1) == pytest.approx([0.5, 0.5], abs=1e-15)
    assert ocba1_allocation([0, 1], [1, 2], 1) == pytest.approx([1 / 3, 2 / 3], abs=1e-15)


def test_ocba1_matches_fixture(builtin_data) -> None:
    alpha = ocba1_allocation(builtin_data["mu"], builtin_data["sigma"], builtin_data["best"])
    assert alpha == pytest.approx(builtin_data["alpha_star"], rel=1e-11)
    assert alpha.sum() == pytest.approx(1.0, abs=1e-14)


def test_ocba1_residuals_vanish(builtin_data) -> None:
    mu, sigma, best = builtin_data["mu"], builtin_data["sigma"], builtin_data["best"]
    assert ocba1_residuals(ocba1_allocation(mu, sigma, best), mu, sigma, best).worst < 1e-10


def test_ocba1_rejects_zero_gap() -> None:
    with pytest.raises(InstanceError):
        ocba1_allocation([1, 1, 0], [1, 1, 1], 0)


def test_ocba2_two_designs_equal_sigma() -> None:
    assert ocba2_allocation([0, 1], [1, 1], 1) == pytest.approx([0.5, 0.5], abs=1e-9)


def test_ocba2_matches_fixture(builtin_data) -> None:
    mu, sigma, best = builtin_data["mu"], builtin_data["sigma"], builtin_data["best"]
    alpha = ocba2_allocation(mu, sigma, best)
    assert alpha == pytest.approx(builtin_data["alpha_star2"], rel=1e-8, abs=1e-12)
    assert ocba2_residuals(alpha, mu, sigma, best).worst < 1e-8
    assert np.all(alpha > 0)


def test_ocba2_three_designs_fixture() -> None:
    data = load_resource("three_designs")
    alpha = ocba2_allocation(data["mu"], data["sigma"], data["best"])
    assert alpha == pytest.approx(data["alpha_star2"], abs=1e-9)
    inst = make_instance(data["mu"], data["sigma"])
    assert rate_constants(inst, alpha) == pytest.approx(data["eta_star2"], rel=1e-9)


def test_residuals_on_random_instances() -> None:
    for inst in _random_instances(100):
        mu, sigma, best = inst.mu, inst.sigma, inst.best
        assert ocba1_residuals(ocba1_allocation(mu, sigma, best), mu, sigma, best).worst < 1e-10
        assert ocba2_residuals(ocba2_allocation(mu, sigma, best), mu, sigma, best).worst < 1e-8


def _grid_search_k3(inst, resolution: float = 1e-4) -> np.ndarray:
    """Maximise the smallest pairwise rate over the 2-simplex: coarse grid, then a fine one."""
    mu, sigma, b = inst.mu_array, inst.sigma_array, inst.best
    others = inst.others()

    def best_point(a0: np.ndarray, a1: np.ndarray) -> np.ndarray:
        a2 = 1.0 - a0 - a1
        ok = a2 > 0
        alpha = np.stack([a0[ok], a1[ok], a2[ok]])
        rates = np.min(
            [
                (mu[b] - mu[i]) ** 2 / (sigma[i] ** 2 / alpha[i] + sigma[b] ** 2 / alpha[b])
                for i in others
            ],
            axis=0,
        )
        return alpha[:, int(np.argmax(rates))]

    coarse = np.arange(1e-3, 1.0, 1e-3)
    a0, a1 = np.meshgrid(coarse, coarse, indexing="ij")
    center = best_point(a0.ravel(), a1.ravel())
    fine0 = np.arange(center[0] - 2e-3, center[0] + 2e-3, resolution)
    fine1 = np.arange(center[1] - 2e-3, center[1] + 2e-3, resolution)
    a0, a1 = np.meshgrid(fine0[fine0 > 0], fine1[fine1 > 0], indexing="ij")
    return best_point(a0.ravel(), a1.ravel())


def test_ocba2_agrees_with_grid_search_three_designs() -> None:
    inst = make_instance([0.0, 0.5, 1.0], [1.0, 1.0, 1.0])
    alpha = ocba2_allocation(inst.mu, inst.sigma, inst.best)
    assert alpha == pytest.approx(_grid_search_k3(inst), abs=1e-3)


@pytest.mark.slow
def test_ocba2_agrees_with_grid_search_random() -> None:
    for inst in _random_instances(20, k_range=(3, 4), seed=11):
        alpha = ocba2_allocation(inst.mu, inst.sigma, inst.best)
        assert alpha == pytest.approx(_grid_search_k3(inst), abs=1e-3)


def test_ocba2_approaches_ocba1_as_best_noise_vanishes() -> None:
    # Scaling every gap by a common factor leaves both allocations unchanged; the two systems
    # meet when sigma_b^2/alpha_b is negligible against sigma_i^2/alpha_i.
    mu = np.arange(1.0, 6.0)
    diffs = []
    for sigma_b in (1.0, 0.1, 0.01):
        sigma = np.array([1.0, 2.0, 1.5, 3.0, sigma_b])
        a1 = ocba1_allocation(mu, sigma, 4)
        a2 = ocba2_allocation(mu, sigma, 4)
        diffs.append(np.max(np.abs(a1 - a2) / a1))
    assert diffs[0] > diffs[1] > diffs[2]
    assert ocba1_allocation(mu * 10, sigma, 4) == pytest.approx(a1, rel=1e-12)


def test_ocba2_rate_at_least_ocba1_rate(builtin_data) -> None:
    inst = builtin_instance(builtin_data["name"])
    eta1 = rate_constants(inst, ocba1_allocation(inst.mu, inst.sigma, inst.best))
    eta2 = rate_constants(inst, ocba2_allocation(inst.mu, inst.sigma, inst.best))
    assert eta1 == pytest.approx(builtin_data["eta_star"], rel=1e-10)
    assert eta2 == pytest.approx(builtin_data["eta_star2"], rel=1e-8)
    assert eta2 >= eta1


@pytest.mark.parametrize(
    ("sigma", "expected"),
    [
        ([1.0, 50.0], [1 / 51, 50 / 51]),
        ([1.0, 100.0], [1 / 101, 100 / 101]),
        ([100.0, 1.0], [100 / 101, 1 / 101]),
    ],
)
def test_ocba2_two_designs_with_lopsided_noise(sigma, expected) -> None:
    # With two designs the balance condition alone fixes alpha_b/alpha_i = sigma_b/sigma_i.
    assert ocba2_allocation([0.0, 1.0], sigma, 1) == pytest.approx(expected, rel=1e-9)


def test_ocba2_solves_lopsided_noise_with_several_designs() -> None:
    for mu, sigma in (
        ([0.0, 0.5, 1.0], [1.0, 0.01, 100.0]),
        ([0.0, 0.2, 0.9, 1.0], [0.2, 0.2, 0.5, 200.0]),
    ):
        best = int(np.argmax(mu))
        alpha = ocba2_allocation(mu, sigma, best)
        assert np.all(alpha > 0)
        assert alpha.sum() == pytest.approx(1.0, abs=1e-12)
        assert ocba2_residuals(alpha, mu, sigma, best).worst < 1e-8


def test_theory_report_with_lopsided_noise() -> None:
    report = theory_report(make_instance([0.0, 1.0], [1.0, 50.0]))
    assert report.alpha_star2 == pytest.approx([1 / 51, 50 / 51], rel=1e-9)
    assert report.eta_star2 > 0


def test_gaussian_kl_examples() -> None:
    assert gaussian_kl(0.3, 1.7, 0.3, 1.7) == 0.0
    assert gaussian_kl(1.0, 1.0, 0.0, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert gaussian_kl(0.0, 2.0, 0.0, 1.0) == pytest.approx(1.5 - math.log(2), abs=1e-15)


def test_gaussian_kl_is_never_negative() -> None:
    rng = np.random.default_rng(3)
    n = 10_000
    mu_i, mu_b = rng.uniform(-10.0, 10.0, size=(2, n))
    sigma_i, sigma_b = rng.uniform(1e-3, 10.0, size=(2, n))
    # Near-identical pairs sit where rounding could go below zero.
    mu_b[: n // 10] = mu_i[: n // 10]
    sigma_b[: n // 10] = sigma_i[: n // 10] * (1.0 + 1e-12)
    assert np.all(gaussian_kl(mu_i, sigma_i, mu_b, sigma_b) >= 0.0)
    with pytest.raises(InstanceError):
        gaussian_kl(0.0, 0.0, 0.0, 1.0)


def test_kl_fixture(builtin_data) -> None:
    inst = builtin_instance(builtin_data["name"])
    assert kl_to_best(inst) == pytest.approx(builtin_data["kl"], rel=1e-12)


def test_rate_constants_two_designs(two_designs) -> None:
    assert rate_constants(two_designs, [0.5, 0.5]) == pytest.approx(0.25)
    assert rate_constants(two_designs, [0.5, 0.5], delta=10) == pytest.approx(2.5)
    with pytest.raises(StateError):
        rate_constants(two_designs, [1.0, 0.0])


def test_um_constants_two_designs(two_designs) -> None:
    um = um_constants(two_designs)
    assert um.lai_robbins_const == pytest.approx(2.0)
    assert um.h_star == pytest.approx(4.0)
    # sum of betas is 2
    assert um.rho_star == pytest.approx(2.0)


def test_um_constants_fixture(builtin_data) -> None:
    um = um_constants(builtin_instance(builtin_data["name"]))
    assert um.lai_robbins_const == pytest.approx(builtin_data["lai_robbins_const"], rel=1e-11)
    assert um.h_star == pytest.approx(builtin_data["h_star"], rel=1e-11)
    assert um.rho_star == pytest.approx(builtin_data["rho_star"], rel=1e-11)


def test_linear_regret_rate_fixture(builtin_data) -> None:
    inst = builtin_instance(builtin_data["name"])
    rate = linear_regret_rate(inst, builtin_data["alpha_star"])
    assert rate == pytest.approx(builtin_data["linear_regret_rate"], rel=1e-10)


def test_std_normal_cdf() -> None:
    assert float(std_normal_cdf(0.0)) == 0.5
    assert float(std_normal_cdf(-1.0)) == pytest.approx(PHI_MINUS_ONE, abs=1e-15)
    assert float(std_normal_cdf(-30.0)) > 0.0


def test_pairwise_false_prob() -> None:
    assert pairwise_false_prob(0.0, 1.0, 1.0, 3, 3) == 0.5
    assert pairwise_false_prob(1e6, 1.0, 1.0, 3, 3) == pytest.approx(0.0, abs=1e-300)
    assert pairwise_false_prob(1.0, 1.0, 1.0, 2, 2) == pytest.approx(PHI_MINUS_ONE, abs=1e-15)
    with pytest.raises(StateError):
        pairwise_false_prob(1.0, 1.0, 1.0, 0, 2)


def test_pfs_bounds_two_designs_collapse(two_designs) -> None:
    lower, upper = pfs_bounds(two_designs, [2, 2])
    assert lower == upper == pytest.approx(PHI_MINUS_ONE, abs=1e-15)


def test_pfs_bounds_instance1_shrink_with_counts() -> None:
    inst = builtin_instance("instance1")
    lower, upper = pfs_bounds(inst, [100] * 10)
    assert 0.0 < lower <= upper == pytest.approx(9 * lower)
    lower2, upper2 = pfs_bounds(inst, [200] * 10)
    assert lower2 < lower
    assert upper2 < upper
    with pytest.raises(StateError):
        pfs_bounds(inst, [0] + [100] * 9)


@pytest.mark.parametrize(
    ("name", "counts"),
    [("instance1", [4] * 10), ("instance1", [2, 2, 3, 5, 8, 12, 20, 40, 90, 80]), ("instance2", [3] * 10)],
)
def test_pfs_bounds_hold_for_frozen_counts(name, counts) -> None:
    inst = builtin_instance(name)
    counts = np.asarray(counts)
    reps = 100_000
    rng = np.random.default_rng(17)
    means = rng.normal(inst.mu_array, inst.sigma_array / np.sqrt(counts), size=(reps, inst.k))
    pfs = float(np.mean(np.argmax(means, axis=1) != inst.best))
    se = math.sqrt(max(pfs * (1.0 - pfs), 1.0 / reps) / reps)
    lower, upper = pfs_bounds(inst, counts)
    assert lower - 3 * se <= pfs <= upper + 3 * se


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 4.0])
def test_gordon_tail_bounds_bracket_the_tail(x) -> None:
    lower, upper = gordon_tail_bounds(x)
    assert lower <= float(std_normal_cdf(-x)) <= upper


def test_theory_report_fields(instance1_data) -> None:
    report = theory_report(builtin_instance("instance1"))
    assert report.alpha_star == pytest.approx(instance1_data["alpha_star"], rel=1e-11)
    assert report.alpha_star2 == pytest.approx(instance1_data["alpha_star2"], rel=1e-8)
    assert report.eta_star == pytest.approx(instance1_data["eta_star"], rel=1e-10)
    assert report.h_star == pytest.approx(instance1_data["h_star"], rel=1e-11)
    assert report.rho_star == pytest.approx(instance1_data["rho_star"], rel=1e-11)
    assert len(report.kl) == 9
