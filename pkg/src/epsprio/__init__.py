"""Urgency-based resource prioritization and a delivery-order simulator."""

__version__ = "0.1.0"
