"""Grid-world game arena: rule parser, deterministic engine, agent harness, metrics."""

__version__ = "0.1.0"
