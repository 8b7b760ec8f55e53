"""Snapshot writers: CSV profiles, SVG curve outlines, OBJ revolved surfaces."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .axisym import AxisymSupport, meridian_points
from .curves import SupportCurve, boundary_points


def snapshot_csv(geometry, path: Path | str) -> None:
    """Per-node profile: (theta, u, rho, H) or (theta, u, r1, r2, H)."""
    prof = geometry.profile_raw()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if isinstance(geometry, SupportCurve):
            writer.writerow(["theta", "u", "rho", "H"])
            cols = (geometry.thetas, geometry.u, prof.radii[0], prof.H)
        else:
            writer.writerow(["theta", "u", "r1", "r2", "H"])
            cols = (geometry.thetas, geometry.u, prof.radii[0], prof.radii[1], prof.H)
        for row in zip(*cols):
            writer.writerow([repr(float(x)) for x in row])


def curve_svg(curve: SupportCurve, path: Path | str, size: int = 600) -> None:
    """Closed polyline of the boundary, viewport fitted with a 5% margin."""
    pts = boundary_points(curve)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float((hi - lo).max()) or 1.0
    margin = 0.05 * span
    lo -= margin
    hi += margin
    w, h = hi - lo
    scale = size / max(w, h)

    def to_px(p):
        # y flipped: SVG grows downward
        return (p[0] - lo[0]) * scale, (hi[1] - p[1]) * scale

    coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in (to_px(p) for p in pts))
    body = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {w * scale:.3f} {h * scale:.3f}">\n'
        f'  <polygon points="{coords}" fill="none" stroke="black" stroke-width="1.5"/>\n'
        f"</svg>\n"
    )
    Path(path).write_text(body)


def surface_obj(surface: AxisymSupport, path: Path | str) -> None:
    """Triangulated body of revolution; longitude resolution equals the grid."""
    n = surface.N
    meridian = meridian_points(surface)       # (s, z) per polar node
    phis = 2.0 * np.pi * np.arange(n) / n
    cos_p, sin_p = np.cos(phis), np.sin(phis)

    lines = ["# revolved support-function snapshot"]
    for s, z in meridian:
        for cp, sp in zip(cos_p, sin_p):
            lines.append(f"v {s * cp:.8g} {s * sp:.8g} {z:.8g}")
    # pole points on the axis; u extrapolated with the even ghost rule
    u = surface.u
    z_top = (9.0 * u[0] - u[1]) / 8.0
    z_bot = -(9.0 * u[-1] - u[-2]) / 8.0
    lines.append(f"v 0 0 {z_top:.8g}")
    lines.append(f"v 0 0 {z_bot:.8g}")
    top = n * n + 1
    bot = n * n + 2

    def vid(ring: int, lon: int) -> int:
        return ring * n + (lon % n) + 1

    for lon in range(n):
        lines.append(f"f {top} {vid(0, lon)} {vid(0, lon + 1)}")
        lines.append(f"f {bot} {vid(n - 1, lon + 1)} {vid(n - 1, lon)}")
    for ring in range(n - 1):
        for lon in range(n):
            a, b = vid(ring, lon), vid(ring, lon + 1)
            c, d = vid(ring + 1, lon), vid(ring + 1, lon + 1)
            lines.append(f"f {a} {b} {d}")
            lines.append(f"f {a} {d} {c}")
    Path(path).write_text("\n".join(lines) + "\n")
