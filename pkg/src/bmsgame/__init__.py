"""Safe schedulability games on bounded-rate multi-mode systems, solved exactly."""

__version__ = "0.1.0"
