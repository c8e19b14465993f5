"""Wavelet-frame restoration of incomplete image measurements, with error-bound tooling."""

__version__ = "0.1.0"
