"""OCBA variants with an exploitation step, whose cumulative regret grows logarithmically."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ocbarank.core import AllocationState
from ocbarank.errors import PolicyError
from ocbarank.policies.base import GAP_FLOOR, Branch, Policy, StepDecision
from ocbarank.policies.engines.ocba import ocba1_step, ocba2_step
from ocbarank.theory import gaussian_kl

KL_FLOOR = 1e-9


def exploration_prob(state: AllocationState, sigma, gap_floor: float = GAP_FLOOR) -> float:
    """``min(h_t / t, 1)`` with every quantity in ``h_t`` replaced by its plug-in estimate.

    ``state.t`` is the index of the iteration being decided; the first iteration after the
    initial ``n0`` samples per design is ``t = 1``.
    """
    if state.t < 1:
        raise PolicyError(f"exploration probability needs t >= 1, got {state.t}")
    sigma = np.asarray(sigma, dtype=float)
    means = state.means()
    best_hat = int(np.argmax(means))
    others = np.arange(state.k) != best_hat

    gaps = np.maximum(means[best_hat] - means[others], gap_floor)
    kl = np.maximum(
        gaussian_kl(means[others], sigma[others], means[best_hat], sigma[best_hat]), KL_FLOOR
    )
    counts = state.counts[others]
    h_t = float(np.sum(gaps / kl)) * float(counts.sum()) / float(np.dot(gaps, counts))
    return min(h_t / state.t, 1.0)


def _exploit(state: AllocationState, epsilon: float) -> StepDecision:
    best_hat = int(np.argmax(state.means()))
    return StepDecision(design=best_hat, branch=Branch.EXPLOIT, batch=1, epsilon=epsilon)


def ocba1um_step(
    state: AllocationState, sigma, uniform_draw: float, gap_floor: float = GAP_FLOOR
) -> StepDecision:
    epsilon = exploration_prob(state, sigma, gap_floor)
    if uniform_draw <= epsilon:
        inner = ocba1_step(state, sigma, 1, gap_floor)
        return replace(inner, branch=Branch.EXPLORE, epsilon=epsilon)
    return _exploit(state, epsilon)


def ocba2um_step(
    state: AllocationState, sigma, uniform_draw: float, gap_floor: float = GAP_FLOOR
) -> StepDecision:
    epsilon = exploration_prob(state, sigma, gap_floor)
    if uniform_draw <= epsilon:
        # Keeps the inner balance/rate tag.
        return replace(ocba2_step(state, sigma, 1), epsilon=epsilon)
    return _exploit(state, epsilon)


class Ocba1UmPolicy(Policy):
    name = "ocba1-um"
    draws_per_step = 1

    def decide(self, state, sigma, stream) -> StepDecision:
        return ocba1um_step(state, sigma, float(stream.random()), self.config.gap_floor)


class Ocba2UmPolicy(Policy):
    name = "ocba2-um"
    draws_per_step = 1

    def decide(self, state, sigma, stream) -> StepDecision:
        return ocba2um_step(state, sigma, float(stream.random()), self.config.gap_floor)
