"""Brand-mark authentication: synthetic corpus, pipeline, training, service."""

__version__ = "0.1.0"
