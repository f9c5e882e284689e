from __future__ import annotations

from .base import Branch, Policy, PolicyConfig, PolicyKind, StepDecision
from .engines.baselines import eps_greedy_step, ucb1_normal_step
from .engines.ocba import classic_ocba_step, ocba1_step, ocba2_step, plugin_allocation
from .engines.um import exploration_prob, ocba1um_step, ocba2um_step
from .factory import create_policy

__all__ = [
    "Branch",
    "Policy",
    "PolicyConfig",
    "PolicyKind",
    "StepDecision",
    "classic_ocba_step",
    "create_policy",
    "eps_greedy_step",
    "exploration_prob",
    "ocba1_step",
    "ocba1um_step",
    "ocba2_step",
    "ocba2um_step",
    "plugin_allocation",
    "ucb1_normal_step",
]
