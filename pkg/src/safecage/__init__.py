"""Runtime safety cage for an automated delivery vehicle, with a
deterministic simulator and an off-board supervision hub."""

__version__ = "0.1.0"
