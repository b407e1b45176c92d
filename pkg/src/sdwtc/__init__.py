"""Finite-alphabet toolkit for secret message / secret key rate regions on
state-dependent wiretap channels, with a micro-scale coding-scheme simulator."""

__version__ = "0.1.0"
