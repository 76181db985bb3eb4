"""Equivariant index computations via heat-kernel fixed-point formulas."""

__version__ = "0.1.0"
