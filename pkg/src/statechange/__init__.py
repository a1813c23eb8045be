"""Self-supervised object-state and action localisation over feature sequences."""

__version__ = "0.1.0"
