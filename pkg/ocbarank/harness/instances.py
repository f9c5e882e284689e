"""Built-in problem instances of the numerical study (k = 10)."""

from __future__ import annotations

import logging

from ocbarank.core import ProblemInstance, make_instance
from ocbarank.errors import InstanceError

logger = logging.getLogger(__name__)

BUILTIN_K = 10

# name -> (mu, sigma)
_BUILTINS: dict[str, tuple[tuple[float, ...], tuple[float, ...]]] = {
    # Increasing means with increasing variances.
    "instance1": (
        tuple(float(i) for i in range(1, BUILTIN_K + 1)),
        tuple(float(i) for i in range(1, BUILTIN_K + 1)),
    ),
    # Increasing means with decreasing variances.
    "instance2": (
        tuple(float(i) for i in range(1, BUILTIN_K + 1)),
        tuple(float(BUILTIN_K + 1 - i) for i in range(1, BUILTIN_K + 1)),
    ),
}


def list_instances() -> list[str]:
    return sorted(_BUILTINS)


def builtin_instance(name: str) -> ProblemInstance:
    try:
        mu, sigma = _BUILTINS[name]
    except KeyError:
        logger.warning(f"Unknown built-in instance requested: {name}")
        raise InstanceError(
            f"unknown instance {name!r}; expected one of {', '.join(list_instances())}"
        ) from None
    return make_instance(mu, sigma, name=name)
