"""Clinician-in-the-loop stuttering analysis and therapy planning."""

__version__ = "0.1.0"
