from __future__ import annotations


class OcbaError(Exception):
    """Base class for every error raised by ocbarank."""


class InstanceError(OcbaError, ValueError):
    pass


class StateError(OcbaError, ValueError):
    pass


class SolverError(OcbaError, RuntimeError):
    pass


class PolicyError(OcbaError, ValueError):
    pass


class TraceError(OcbaError, ValueError):
    pass


class ConfigError(OcbaError, ValueError):
    pass
