from __future__ import annotations

import math

import numpy as np

from ocbarank.core import AllocationState
from ocbarank.policies.base import GAP_FLOOR, Branch, Policy, StepDecision


def _estimated_gaps(means: np.ndarray, best_hat: int, gap_floor: float) -> np.ndarray:
    """``max(mu_hat[best_hat] - mu_hat[i], gap_floor)`` for every design (0 at best_hat)."""
    gaps = np.maximum(means[best_hat] - means, gap_floor)
    gaps[best_hat] = 0.0
    return gaps


def plugin_allocation(
    means: np.ndarray, sigma: np.ndarray, best_hat: int, gap_floor: float = GAP_FLOOR
) -> np.ndarray:
    """OCBA-1 closed-form allocation evaluated at the sample means."""
    gaps = _estimated_gaps(means, best_hat, gap_floor)
    others = np.arange(means.size) != best_hat
    beta = np.empty(means.size)
    beta[others] = sigma[others] ** 2 / gaps[others] ** 2
    beta[best_hat] = sigma[best_hat] * math.sqrt(
        float(np.sum(sigma[others] ** 2 / gaps[others] ** 4))
    )
    return beta / beta.sum()


def ocba1_step(
    state: AllocationState, sigma, delta: int = 1, gap_floor: float = GAP_FLOOR
) -> StepDecision:
    sigma = np.asarray(sigma, dtype=float)
    means = state.means()
    best_hat = int(np.argmax(means))
    target = plugin_allocation(means, sigma, best_hat, gap_floor) * (1 + state.total)
    design = int(np.argmax(target - state.counts))
    return StepDecision(design=design, branch=Branch.DEFICIT, batch=delta)


def ocba2_balance(state: AllocationState, sigma, best_hat: int) -> float:
    ratios = (state.counts / np.asarray(sigma, dtype=float)) ** 2
    return float(ratios[best_hat] - (ratios.sum() - ratios[best_hat]))


def ocba2_step(state: AllocationState, sigma, delta: int = 1) -> StepDecision:
    # Squared raw gaps feed the rates directly; a tie gives rate 0, never a division by zero.
    sigma = np.asarray(sigma, dtype=float)
    means = state.means()
    best_hat = int(np.argmax(means))
    if ocba2_balance(state, sigma, best_hat) < 0:
        return StepDecision(design=best_hat, branch=Branch.BALANCE, batch=delta)

    others = np.array([i for i in range(state.k) if i != best_hat])
    counts = state.counts
    rates = (means[best_hat] - means[others]) ** 2 / (
        sigma[others] ** 2 / counts[others] + sigma[best_hat] ** 2 / counts[best_hat]
    )
    design = int(others[np.argmin(rates)])
    return StepDecision(design=design, branch=Branch.RATE, batch=delta)


def classic_ocba_step(
    state: AllocationState, sigma, delta: int, gap_floor: float = GAP_FLOOR
) -> StepDecision:
    """Spread a batch of ``delta`` samples over the designs toward the plug-in allocation.

    Designs already at or above their share of the new total are frozen and the remaining
    budget is re-split among the rest until no further design is frozen.
    """
    sigma = np.asarray(sigma, dtype=float)
    means = state.means()
    best_hat = int(np.argmax(means))
    ratios = plugin_allocation(means, sigma, best_hat, gap_floor)
    counts = state.counts.astype(float)
    target_total = state.total + delta

    active = np.ones(state.k, dtype=bool)
    while True:
        budget = target_total - counts[~active].sum()
        target = np.where(active, budget * ratios / ratios[active].sum(), counts)
        frozen = active & (target < counts)
        if not frozen.any():
            break
        active &= ~frozen

    wanted = np.maximum(target - counts, 0.0)
    wanted *= delta / wanted.sum()
    increments = np.floor(wanted).astype(np.int64)
    remainder = int(delta - increments.sum())
    if remainder:
        # Largest fractional parts first; a stable sort keeps the lowest index on ties.
        order = np.argsort(-(wanted - increments), kind="stable")
        increments[order[:remainder]] += 1

    return StepDecision(
        design=int(np.argmax(increments)),
        branch=Branch.BATCH,
        batch=delta,
        allocation=tuple(int(x) for x in increments),
    )


class Ocba1Policy(Policy):
    name = "ocba1"

    def decide(self, state, sigma, stream) -> StepDecision:
        return ocba1_step(state, sigma, self.config.delta, self.config.gap_floor)


class Ocba2Policy(Policy):
    name = "ocba2"

    def decide(self, state, sigma, stream) -> StepDecision:
        return ocba2_step(state, sigma, self.config.delta)


class ClassicOcbaPolicy(Policy):
    name = "ocba"

    def decide(self, state, sigma, stream) -> StepDecision:
        return classic_ocba_step(state, sigma, self.config.delta, self.config.gap_floor)
