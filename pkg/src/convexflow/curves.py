"""Strictly convex plane curves stored as support functions.

A closed strictly convex curve is represented by its support function u
sampled at N uniform angles theta_j = 2*pi*j/N on the circle of outward
normals nu = (cos theta, sin theta). Everything follows from u and its
periodic derivatives: the radius of curvature is rho = u + u'', the length
integrates rho, and the enclosed area integrates u*rho/2. Derivatives use
4th-order central differences (5-point periodic stencil), which keeps the
truncation error around 1e-7 on smooth shapes already at N = 256.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._stencil import Profile, validate_grid_size
from .errors import ConvexityLost, InvalidInitialData, SpecError

_TRIG: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def grid_angles(n: int) -> np.ndarray:
    return unit_normals(n)[0]


def unit_normals(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cached (theta, cos theta, sin theta) for an N-point normal circle."""
    cached = _TRIG.get(n)
    if cached is None:
        theta = 2.0 * np.pi * np.arange(n) / n
        cached = (theta, np.cos(theta), np.sin(theta))
        _TRIG[n] = cached
    return cached


def _padded(u: np.ndarray) -> np.ndarray:
    # periodic wrap: [u_{N-2}, u_{N-1} | u | u_0, u_1]
    return np.concatenate([u[-2:], u, u[:2]])


def second_derivative(u: np.ndarray, dtheta: float) -> np.ndarray:
    n = len(u)
    p = _padded(u)
    return (-p[:n] + 16.0 * p[1:n + 1] - 30.0 * u + 16.0 * p[3:n + 3] - p[4:n + 4]) \
        / (12.0 * dtheta * dtheta)


def first_derivative(u: np.ndarray, dtheta: float) -> np.ndarray:
    n = len(u)
    p = _padded(u)
    return (p[:n] - 8.0 * p[1:n + 1] + 8.0 * p[3:n + 3] - p[4:n + 4]) / (12.0 * dtheta)


def profile(u: np.ndarray, dtheta: float) -> Profile:
    """Radius of curvature, mean curvature, and boundary quadrature weights."""
    rho = u + second_derivative(u, dtheta)
    with np.errstate(divide="ignore"):
        h = 1.0 / rho
    return Profile((rho,), h, rho * dtheta)


@dataclass(frozen=True, eq=False)
class SupportCurve:
    """Immutable snapshot of a discrete support function on the circle."""

    u: np.ndarray

    n = 1  # hypersurface dimension

    def __post_init__(self):
        validate_grid_size(len(self.u))

    @property
    def N(self) -> int:
        return len(self.u)

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / len(self.u)

    @property
    def thetas(self) -> np.ndarray:
        return unit_normals(len(self.u))[0]

    def with_u(self, u: np.ndarray) -> "SupportCurve":
        return replace(self, u=u)

    def profile_raw(self, u: np.ndarray | None = None) -> Profile:
        return profile(self.u if u is None else u, self.dtheta)

    def support_offsets(self, center) -> np.ndarray:
        """u(nu) - <center, nu>: support distances seen from a shifted origin."""
        _, cos_t, sin_t = unit_normals(len(self.u))
        return self.u - center[0] * cos_t - center[1] * sin_t


def _checked_profile(curve: SupportCurve) -> Profile:
    prof = curve.profile_raw()
    rho = prof.radii[0]
    j = int(np.argmin(rho))
    if rho[j] <= 0.0:
        raise ConvexityLost(j, curve.thetas[j], rho[j])
    return prof


def curvature_profile(curve: SupportCurve) -> tuple[np.ndarray, np.ndarray]:
    """Per-node (radius of curvature, curvature); raises ConvexityLost."""
    prof = _checked_profile(curve)
    return prof.radii[0], prof.H


def measures(curve: SupportCurve) -> tuple[float, float]:
    """(length, enclosed area) by periodic trapezoidal quadrature."""
    prof = _checked_profile(curve)
    w = prof.weights
    return float(w.sum()), float(0.5 * (curve.u * w).sum())


def boundary_points(curve: SupportCurve) -> np.ndarray:
    """Boundary as (N, 2) points via the envelope formula u*nu + u'*nu_perp."""
    _, cos_t, sin_t = unit_normals(curve.N)
    du = first_derivative(curve.u, curve.dtheta)
    x = curve.u * cos_t - du * sin_t
    y = curve.u * sin_t + du * cos_t
    return np.column_stack([x, y])


def make_curve(spec: str, n: int) -> SupportCurve:
    """Build an initial curve from its textual form.

    Grammar: ``ball:<r>`` | ``ellipse:<a>,<b>`` |
    ``perturbed:<r0>;<k1>:<eps1>[,<k2>:<eps2>...]`` with integer harmonics
    k >= 2. The result must be strictly convex on the grid.
    """
    n = validate_grid_size(n)
    theta, cos_t, sin_t = unit_normals(n)
    text = spec.strip()
    if text.startswith("ball:"):
        r = _positive_float(text[5:], "ball radius")
        u = np.full(n, r)
    elif text.startswith("ellipse:"):
        parts = text[len("ellipse:"):].split(",")
        if len(parts) != 2:
            raise SpecError(f"ellipse spec {spec!r} must be ellipse:<a>,<b>")
        a = _positive_float(parts[0], "ellipse semi-axis a")
        b = _positive_float(parts[1], "ellipse semi-axis b")
        u = np.sqrt((a * cos_t) ** 2 + (b * sin_t) ** 2)
    elif text.startswith("perturbed:"):
        r0, harmonics = _parse_perturbed(text[len("perturbed:"):], spec, min_harmonic=2)
        u = np.full(n, r0)
        for k, eps in harmonics:
            u = u + eps * np.cos(k * theta)
    else:
        raise SpecError(
            f"unknown shape spec {spec!r}; expected ball:<r>, ellipse:<a>,<b> "
            f"or perturbed:<r0>;<k>:<eps>[,...]"
        )
    curve = SupportCurve(u=u)
    rho = curve.profile_raw().radii[0]
    j = int(np.argmin(rho))
    if rho[j] <= 0.0:
        raise InvalidInitialData(rho[j], theta[j])
    return curve


def _positive_float(text: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise SpecError(f"{what} {text!r} is not numeric") from exc
    if not (value > 0.0) or not np.isfinite(value):
        raise SpecError(f"{what} must be positive, got {value}")
    return value


def _parse_perturbed(body: str, spec: str, min_harmonic: int, even_only: bool = False):
    head, sep, tail = body.partition(";")
    if not sep or not tail:
        raise SpecError(f"perturbed spec {spec!r} must be perturbed:<r0>;<k>:<eps>[,...]")
    r0 = _positive_float(head, "base radius r0")
    harmonics: list[tuple[int, float]] = []
    for pair in tail.split(","):
        parts = pair.split(":")
        if len(parts) != 2:
            raise SpecError(f"perturbation {pair!r} in {spec!r} is not <k>:<eps>")
        try:
            k = int(parts[0])
            eps = float(parts[1])
        except ValueError as exc:
            raise SpecError(f"perturbation {pair!r} in {spec!r} is not numeric") from exc
        if k < min_harmonic:
            raise SpecError(f"perturbation harmonic k={k} must be >= {min_harmonic}")
        if even_only and k % 2 != 0:
            raise SpecError(f"perturbation harmonic k={k} must be even")
        if not np.isfinite(eps):
            raise SpecError(f"perturbation amplitude {parts[1]!r} is not finite")
        harmonics.append((k, eps))
    return r0, harmonics
