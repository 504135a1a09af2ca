"""Bottom-up relational rule learning for relation extraction."""

__version__ = "0.1.0"
