"""From-scratch multi-modal transformer for mixed-frequency stock prediction."""

__version__ = "0.1.0"
