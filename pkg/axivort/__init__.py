"""
axivort: axisymmetric Euler-without-swirl vortex engine and inequality harness.
"""
__version__ = "1.0.0"
