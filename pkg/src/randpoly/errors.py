"""Exception types raised across the package."""


class DegenerateHullError(ValueError):
    """Input points do not span R^d."""


class OriginNotInteriorError(ValueError):
    """The origin is not an interior point of the body or polytope."""


class NonSmoothError(ValueError):
    """Curvature requested at a point where the boundary is not smooth."""


class UnboundedError(ValueError):
    """Operation needs a bounded set."""


class SamplingError(RuntimeError):
    """Rejection sampler failed (usually a wrong envelope bound)."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
