"""Secret-sharing communication tasks with noisy entanglement."""

__version__ = "0.1.0"
