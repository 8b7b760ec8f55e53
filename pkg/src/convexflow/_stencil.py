"""Shared pieces of the two support-function grids."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Profile(NamedTuple):
    """Pointwise curvature data of a discrete support function.

    radii    principal radii of curvature, one array per principal direction
    H        mean curvature (sum of reciprocal radii)
    weights  quadrature weights for boundary integrals: sum(f * weights)
             approximates the integral of f over the body's boundary
    """

    radii: tuple[np.ndarray, ...]
    H: np.ndarray
    weights: np.ndarray

    def min_radius(self) -> float:
        return float(min(r.min() for r in self.radii))


def validate_grid_size(n: int) -> int:
    n = int(n)
    if n < 64 or (n & (n - 1)) != 0:
        raise ValueError(f"grid size must be a power of two >= 64, got {n}")
    return n
