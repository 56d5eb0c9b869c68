"""gridbench: deterministic 2D semantic-gridworld simulator and benchmark harness."""

__version__ = "0.1.0"
