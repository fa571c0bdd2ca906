"""Spatially coupled two-edge-type LDPC codes for the binary erasure wiretap channel."""

__version__ = "0.1.0"
