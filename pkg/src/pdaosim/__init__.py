"""Pulsed parametrically driven anharmonic oscillator simulator."""

__version__ = "0.1.0"
