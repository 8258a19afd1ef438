"""Deterministic IT/OT network simulator with an automated risk-assessment pipeline."""

__version__ = "0.1.0"
