class ConfigurationError(ValueError):
    """Raised when shapes, specs, or config values are inconsistent."""
