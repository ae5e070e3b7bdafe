"""smscreen: imbalance-aware social-media screening toolkit."""

__version__ = "0.1.0"
