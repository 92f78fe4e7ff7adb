"""Exception types shared across the package."""


class ShadowcastError(Exception):
    """Base class for all shadowcast errors."""


class DegenerateLink(ShadowcastError):
    """A link whose transmitter and receiver share the same floor projection."""


class InvalidGrid(ShadowcastError):
    """Photodetector grid request that cannot be placed in the room."""


class SamplingExhausted(ShadowcastError):
    """Poisson disk sampling could not place the requested number of points."""


class Outage(ShadowcastError):
    """No blocked links were observed, so no estimate can be produced."""


class ConfigError(ShadowcastError):
    """Scenario configuration failed to parse or validate."""
