"""RL from linear temporal logic specifications on gridworlds."""

__version__ = "0.1.0"
