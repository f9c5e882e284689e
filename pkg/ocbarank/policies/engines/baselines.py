"""Regret-minimising baselines: Epsilon-Greedy with the OCBA exploration schedule, and
UCB1-Normal."""

from __future__ import annotations

import math

import numpy as np

from ocbarank.core import AllocationState
from ocbarank.errors import PolicyError
from ocbarank.policies.base import GAP_FLOOR, Branch, Policy, StepDecision
from ocbarank.policies.engines.um import exploration_prob

UCB_FORCE_FACTOR = 8.0
UCB_INDEX_FACTOR = 16.0


def eps_greedy_step(
    state: AllocationState,
    sigma,
    uniform_draw: float,
    uniform_design_draw: float,
    gap_floor: float = GAP_FLOOR,
) -> StepDecision:
    epsilon = exploration_prob(state, sigma, gap_floor)
    if uniform_draw <= epsilon:
        design = min(int(uniform_design_draw * state.k), state.k - 1)
        return StepDecision(design=design, branch=Branch.UNIFORM, batch=1, epsilon=epsilon)
    best_hat = int(np.argmax(state.means()))
    return StepDecision(design=best_hat, branch=Branch.EXPLOIT, batch=1, epsilon=epsilon)


def ucb1_normal_step(state: AllocationState) -> StepDecision:
    """UCB1-Normal with ``n`` = number of samples taken so far (initial samples included)."""
    n = state.total
    if n < 2:
        raise PolicyError(f"UCB1-Normal needs at least 2 samples in total, got {n}")
    counts = state.counts
    if np.any(counts < 2):
        raise PolicyError("UCB1-Normal needs at least 2 samples of every design")

    under = np.flatnonzero(counts < math.ceil(UCB_FORCE_FACTOR * math.log(n)))
    if under.size:
        return StepDecision(design=int(under[0]), branch=Branch.FORCED, batch=1)

    means = state.means()
    spread = np.maximum(state.sumsq - counts * means**2, 0.0) / (counts - 1)
    index = means + np.sqrt(UCB_INDEX_FACTOR * spread * math.log(n - 1) / counts)
    return StepDecision(design=int(np.argmax(index)), branch=Branch.INDEX, batch=1)


class EpsGreedyPolicy(Policy):
    name = "eps-greedy"
    # Both uniforms are drawn every step, whichever branch fires.
    draws_per_step = 2

    def decide(self, state, sigma, stream) -> StepDecision:
        u, v = stream.random(2)
        return eps_greedy_step(state, sigma, float(u), float(v), self.config.gap_floor)


class Ucb1NormalPolicy(Policy):
    name = "ucb1-normal"

    def decide(self, state, sigma, stream) -> StepDecision:
        return ucb1_normal_step(state)
