"""Exceptions shared across the package."""

from __future__ import annotations


class SpecError(ValueError):
    """A shape, speed, or configuration string does not parse or validate."""


class InvalidInitialData(SpecError):
    """Requested initial shape is not strictly convex on the chosen grid."""

    def __init__(self, min_radius: float, angle: float):
        self.min_radius = float(min_radius)
        self.angle = float(angle)
        super().__init__(
            f"initial shape is not strictly convex: min principal radius "
            f"{self.min_radius:.6g} at theta={self.angle:.6g}"
        )


class ConvexityLost(RuntimeError):
    """The evolving body stopped being strictly convex at some grid node."""

    def __init__(self, index: int, angle: float, value: float):
        self.index = int(index)
        self.angle = float(angle)
        self.value = float(value)
        super().__init__(
            f"convexity lost at node {self.index} (theta={self.angle:.6g}): "
            f"principal radius {self.value:.6g} <= 0"
        )


class NumericalFailure(RuntimeError):
    """Non-finite values appeared while advancing the flow."""
