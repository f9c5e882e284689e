from __future__ import annotations

from ocbarank.policies.base import Policy, PolicyConfig, PolicyKind
from ocbarank.policies.engines.baselines import EpsGreedyPolicy, Ucb1NormalPolicy
from ocbarank.policies.engines.ocba import ClassicOcbaPolicy, Ocba1Policy, Ocba2Policy
from ocbarank.policies.engines.um import Ocba1UmPolicy, Ocba2UmPolicy

_REGISTRY: dict[PolicyKind, type[Policy]] = {
    PolicyKind.OCBA: ClassicOcbaPolicy,
    PolicyKind.OCBA1: Ocba1Policy,
    PolicyKind.OCBA2: Ocba2Policy,
    PolicyKind.OCBA1UM: Ocba1UmPolicy,
    PolicyKind.OCBA2UM: Ocba2UmPolicy,
    PolicyKind.EPS_GREEDY: EpsGreedyPolicy,
    PolicyKind.UCB1_NORMAL: Ucb1NormalPolicy,
}


def create_policy(cfg: PolicyConfig) -> Policy:
    return _REGISTRY[cfg.kind](cfg)
