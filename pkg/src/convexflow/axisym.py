"""Strictly convex axisymmetric surfaces stored as meridian support functions.

A body of revolution is represented by its support function u sampled at
cell-centered polar angles theta_j = (j + 1/2)*pi/N measured from the
symmetry axis. The principal radii of curvature are r1 = u'' + u along the
meridian and r2 = u'*cot(theta) + u along the parallels; the Gauss-map area
element is r1*r2*sin(theta) dtheta dphi.

The cell-centered grid never touches the poles, so cot(theta) is always
finite, and derivatives use 4th-order central differences with an even
ghost reflection across theta = 0 and theta = pi. For a pole-smooth
axisymmetric body u is an even function of theta about both poles, so the
reflection is exact and the smooth-pole condition u'(0) = u'(pi) = 0 is
enforced structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._stencil import Profile, validate_grid_size
from .curves import _parse_perturbed, _positive_float
from .errors import ConvexityLost, InvalidInitialData, SpecError

_TRIG: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = {}


def polar_angles(n: int) -> np.ndarray:
    return _trig(n)[0]


def _trig(n: int):
    cached = _TRIG.get(n)
    if cached is None:
        theta = (np.arange(n) + 0.5) * np.pi / n
        sin_t = np.sin(theta)
        cot_t = np.cos(theta) / sin_t
        cached = (theta, np.cos(theta), sin_t, cot_t)
        _TRIG[n] = cached
    return cached


def _padded(u: np.ndarray) -> np.ndarray:
    # even reflection: [u1, u0 | u0..u_{N-1} | u_{N-1}, u_{N-2}]
    return np.concatenate([u[1::-1], u, u[:-3:-1]])


def second_derivative(u: np.ndarray, dtheta: float) -> np.ndarray:
    p = _padded(u)
    n = len(u)
    return (
        -p[0:n] + 16.0 * p[1:n + 1] - 30.0 * p[2:n + 2]
        + 16.0 * p[3:n + 3] - p[4:n + 4]
    ) / (12.0 * dtheta * dtheta)


def first_derivative(u: np.ndarray, dtheta: float) -> np.ndarray:
    p = _padded(u)
    n = len(u)
    return (p[0:n] - 8.0 * p[1:n + 1] + 8.0 * p[3:n + 3] - p[4:n + 4]) / (12.0 * dtheta)


def profile(u: np.ndarray, dtheta: float) -> Profile:
    """Principal radii, mean curvature, and boundary quadrature weights."""
    n = len(u)
    _, _, sin_t, cot_t = _trig(n)
    p = _padded(u)
    m2, m1, p1, p2 = p[:n], p[1:n + 1], p[3:n + 3], p[4:n + 4]
    r1 = u + (-m2 + 16.0 * m1 - 30.0 * u + 16.0 * p1 - p2) / (12.0 * dtheta * dtheta)
    r2 = u + (m2 - 8.0 * m1 + 8.0 * p1 - p2) * (cot_t / (12.0 * dtheta))
    with np.errstate(divide="ignore"):
        h = 1.0 / r1 + 1.0 / r2
    w = (2.0 * np.pi * dtheta) * r1 * r2 * sin_t
    return Profile((r1, r2), h, w)


@dataclass(frozen=True, eq=False)
class AxisymSupport:
    """Immutable snapshot of a discrete axisymmetric support function."""

    u: np.ndarray

    n = 2  # hypersurface dimension

    def __post_init__(self):
        validate_grid_size(len(self.u))

    @property
    def N(self) -> int:
        return len(self.u)

    @property
    def dtheta(self) -> float:
        return np.pi / len(self.u)

    @property
    def thetas(self) -> np.ndarray:
        return _trig(len(self.u))[0]

    def with_u(self, u: np.ndarray) -> "AxisymSupport":
        return replace(self, u=u)

    def profile_raw(self, u: np.ndarray | None = None) -> Profile:
        return profile(self.u if u is None else u, self.dtheta)

    def support_offsets(self, center) -> np.ndarray:
        """u(nu) - <center, nu> for a center on the symmetry axis (a float)."""
        _, cos_t, _, _ = _trig(len(self.u))
        return self.u - float(center) * cos_t


def _checked_profile(surface: AxisymSupport) -> Profile:
    prof = surface.profile_raw()
    for r in prof.radii:
        j = int(np.argmin(r))
        if r[j] <= 0.0:
            raise ConvexityLost(j, surface.thetas[j], r[j])
    return prof


def principal_radii(surface: AxisymSupport) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-node (r1, r2, H); raises ConvexityLost."""
    prof = _checked_profile(surface)
    return prof.radii[0], prof.radii[1], prof.H


def measures(surface: AxisymSupport) -> tuple[float, float]:
    """(surface area, enclosed volume) by midpoint quadrature."""
    prof = _checked_profile(surface)
    w = prof.weights
    return float(w.sum()), float((surface.u * w).sum() / 3.0)


def meridian_points(surface: AxisymSupport) -> np.ndarray:
    """Meridian profile as (N, 2) points (s, z), s the distance to the axis."""
    _, cos_t, sin_t, _ = _trig(surface.N)
    du = first_derivative(surface.u, surface.dtheta)
    s = surface.u * sin_t + du * cos_t
    z = surface.u * cos_t - du * sin_t
    return np.column_stack([s, z])


def make_surface(spec: str, n: int) -> AxisymSupport:
    """Build an initial surface from its textual form.

    Grammar: ``ball:<r>`` | ``spheroid:<a>,<c>`` (equatorial a, polar c) |
    ``perturbed:<r0>;<m1>:<eps1>[,...]`` with even cosine harmonics m >= 2.
    Odd harmonics are rejected: the generator only guarantees the pole
    parity invariant for even ones.
    """
    n = validate_grid_size(n)
    theta, cos_t, sin_t, _ = _trig(n)
    text = spec.strip()
    if text.startswith("ball:"):
        r = _positive_float(text[5:], "ball radius")
        u = np.full(n, r)
    elif text.startswith("spheroid:"):
        parts = text[len("spheroid:"):].split(",")
        if len(parts) != 2:
            raise SpecError(f"spheroid spec {spec!r} must be spheroid:<a>,<c>")
        a = _positive_float(parts[0], "spheroid equatorial semi-axis a")
        c = _positive_float(parts[1], "spheroid polar semi-axis c")
        u = np.sqrt((a * sin_t) ** 2 + (c * cos_t) ** 2)
    elif text.startswith("perturbed:"):
        r0, harmonics = _parse_perturbed(
            text[len("perturbed:"):], spec, min_harmonic=2, even_only=True
        )
        u = np.full(n, r0)
        for m, eps in harmonics:
            u = u + eps * np.cos(m * theta)
    else:
        raise SpecError(
            f"unknown shape spec {spec!r}; expected ball:<r>, spheroid:<a>,<c> "
            f"or perturbed:<r0>;<m>:<eps>[,...]"
        )
    surface = AxisymSupport(u=u)
    prof = surface.profile_raw()
    worst = np.minimum(prof.radii[0], prof.radii[1])
    j = int(np.argmin(worst))
    if worst[j] <= 0.0:
        raise InvalidInitialData(worst[j], theta[j])
    return surface
