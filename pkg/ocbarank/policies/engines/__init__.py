from __future__ import annotations

from .baselines import EpsGreedyPolicy, Ucb1NormalPolicy
from .ocba import ClassicOcbaPolicy, Ocba1Policy, Ocba2Policy
from .um import Ocba1UmPolicy, Ocba2UmPolicy

__all__ = [
    "ClassicOcbaPolicy",
    "EpsGreedyPolicy",
    "Ocba1Policy",
    "Ocba1UmPolicy",
    "Ocba2Policy",
    "Ocba2UmPolicy",
    "Ucb1NormalPolicy",
]
