"""Geometric functionals and trajectory audits.

Per-record quantities: boundary measure, enclosed measure, the
scale-invariant isoperimetric ratio I = |boundary|^(n+1) / |enclosed|^n,
inradius and circumradius with their optimal centers, sphericity
R+/R- - 1, curvature extremes, the nonlocal term h, and the deviation
max|phi(H) - h|.

Trajectory audits check the claims a constrained flow must satisfy:
monotone boundary measure (volume mode) or monotone enclosed measure
(area mode) plus a nonincreasing isoperimetric ratio; the integral
identities d|M|/dt = integral(H (h - phi) dmu) and
d|Omega|/dt = integral((h - phi) dmu); and the two comparison-ball
barriers (an inscribed ball shrinking by r' = -phi(n/r) stays inside,
a circumscribed ball growing linearly at the peak rate of h stays
outside).

The inradius and circumradius are solved as min-max problems over the
sampled support planes: R- = max_c min_nu (u - <c, nu>) and
R+ = min_c max_nu (u - <c, nu>). The inner extrema are exact over the
grid normals; the outer optimization is golden-section search on the
symmetry axis (axisymmetric bodies) or per-axis coordinate descent
(plane curves), both unimodal because the objectives are concave
resp. convex in c.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .axisym import AxisymSupport
from .curves import SupportCurve, unit_normals
from .flow import ConstraintMode, FlowState, Geometry
from .speeds import SpeedFunction

SPHERE_MEASURE = {1: 2.0 * np.pi, 2: 4.0 * np.pi}

RUN_CSV_COLUMNS = ("t", "dt", "area", "volume", "isoper", "inradius",
                   "circumradius", "sphericity", "Hmin", "Hmax", "h", "dev")

GOLDEN_TOL = 1e-9
_INVGOLD = (math.sqrt(5.0) - 1.0) / 2.0


def ball_isoperimetric_ratio(n: int) -> float:
    """Sharp lower bound of I = |M|^(n+1)/|Omega|^n, attained by balls."""
    return (n + 1) ** n * SPHERE_MEASURE[n]


def discrete_ball_isoperimetric_ratio(n: int, grid: int) -> float:
    """I of the unit ball as the discrete quadratures actually measure it.

    On the polar grid the midpoint rule carries an O(grid^-2) bias, so a
    perfectly round end state lands on this value rather than on the
    continuum bound; endpoint audits compare against it.
    """
    from .axisym import AxisymSupport
    from .curves import SupportCurve
    geometry = SupportCurve(np.ones(grid)) if n == 1 else AxisymSupport(np.ones(grid))
    prof = geometry.profile_raw()
    area = float(prof.weights.sum())
    volume = float((geometry.u * prof.weights).sum() / (n + 1))
    return area ** (n + 1) / volume ** n


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    dt: float
    area: float            # |M|: length (n=1) or surface area (n=2)
    volume: float          # |Omega|: enclosed area (n=1) or volume (n=2)
    isoper: float          # |M|^(n+1) / |Omega|^n
    inradius: float
    circumradius: float
    center_in: tuple
    center_out: tuple
    sphericity: float      # R+/R- - 1
    H_min: float
    H_max: float
    h: float
    dev: float             # max_j |phi(H_j) - h|

    def csv_row(self) -> tuple:
        return (self.t, self.dt, self.area, self.volume, self.isoper,
                self.inradius, self.circumradius, self.sphericity,
                self.H_min, self.H_max, self.h, self.dev)


def _golden_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Maximize a unimodal f on [lo, hi]; returns (argmax, max)."""
    a, b = lo, hi
    x1 = b - _INVGOLD * (b - a)
    x2 = a + _INVGOLD * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVGOLD * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVGOLD * (b - a)
            f1 = f(x1)
    x = 0.5 * (a + b)
    return x, f(x)


def _steiner_point(geometry: Geometry) -> np.ndarray | float:
    if isinstance(geometry, SupportCurve):
        _, cos_t, sin_t = unit_normals(geometry.N)
        scale = 2.0 / geometry.N
        return np.array([scale * (geometry.u * cos_t).sum(),
                         scale * (geometry.u * sin_t).sum()])
    theta = geometry.thetas
    w = np.cos(theta) * np.sin(theta) * geometry.dtheta
    return float(1.5 * (geometry.u * w).sum())


@dataclass(frozen=True)
class RadiiResult:
    inradius: float
    circumradius: float
    center_in: tuple
    center_out: tuple


def radii(geometry: Geometry) -> RadiiResult:
    """Inradius, circumradius and their optimal centers.

    For axisymmetric bodies the center search is restricted to the symmetry
    axis, which is where the optimum lies by symmetry; centers are reported
    as the signed axis offset wrapped in a 1-tuple.
    """
    bound = float(np.abs(geometry.u).max()) + 1.0
    if isinstance(geometry, AxisymSupport):
        cz_in, r_in = _golden_max(
            lambda c: float(geometry.support_offsets(c).min()), -bound, bound)
        cz_out, neg_r_out = _golden_max(
            lambda c: -float(geometry.support_offsets(c).max()), -bound, bound)
        return RadiiResult(r_in, -neg_r_out, (cz_in,), (cz_out,))

    start = _steiner_point(geometry)
    c_in, r_in = _coordinate_descent(geometry, start, bound, maximize=True)
    c_out, r_out = _coordinate_descent(geometry, start, bound, maximize=False)
    return RadiiResult(r_in, r_out, tuple(c_in), tuple(c_out))


def _coordinate_descent(geometry: SupportCurve, start: np.ndarray, bound: float,
                        maximize: bool, sweeps: int = 60) -> tuple[np.ndarray, float]:
    sign = 1.0 if maximize else -1.0

    def objective(c) -> float:
        offs = geometry.support_offsets(c)
        return float(offs.min()) if maximize else -float(offs.max())

    c = np.array(start, dtype=float)
    value = objective(c)
    for _ in range(sweeps):
        moved = 0.0
        for axis in (0, 1):
            def slice_f(x, axis=axis):
                trial = c.copy()
                trial[axis] = x
                return objective(trial)
            x_new, value = _golden_max(slice_f, -bound, bound)
            moved = max(moved, abs(x_new - c[axis]))
            c[axis] = x_new
        if moved < 1e-9:
            break
    return c, sign * value


def record(state: FlowState, dt: float) -> DiagnosticsRecord:
    """Assemble the per-time diagnostics snapshot of a flow state."""
    g = state.geometry
    prof = g.profile_raw()
    w = prof.weights
    area = float(w.sum())
    volume = float((g.u * w).sum() / (g.n + 1))
    isoper = area ** (g.n + 1) / volume ** g.n
    rad = radii(g)
    phi = state.speed.phi(prof.H)
    if state.mode is ConstraintMode.VOLUME:
        h = float((phi * w).sum() / area)
    elif state.mode is ConstraintMode.AREA:
        hw = prof.H * w
        h = float((phi * hw).sum() / hw.sum())
    else:
        h = 0.0
    return DiagnosticsRecord(
        t=state.t, dt=dt, area=area, volume=volume, isoper=isoper,
        inradius=rad.inradius, circumradius=rad.circumradius,
        center_in=rad.center_in, center_out=rad.center_out,
        sphericity=rad.circumradius / rad.inradius - 1.0,
        H_min=float(prof.H.min()), H_max=float(prof.H.max()),
        h=h, dev=float(np.abs(phi - h).max()),
    )


@dataclass(frozen=True)
class Violation:
    t: float
    quantity: str
    jump: float


def monotonicity_audit(records, mode: ConstraintMode,
                       slack: float = 1e-9,
                       conservation_slack: float | None = None) -> list[Violation]:
    """Check per-record monotonicity and conservation along a trajectory.

    Volume mode: |M| nonincreasing, |Omega| conserved, I nonincreasing.
    Area mode: |M| conserved, |Omega| nondecreasing, I nonincreasing.
    Standard mode carries no such claims and audits nothing. All checks
    allow a relative slack per record interval; the conserved quantity may
    get its own (dimension-appropriate) slack.
    """
    if mode is ConstraintMode.STANDARD:
        return []
    if conservation_slack is None:
        conservation_slack = slack
    out: list[Violation] = []
    for prev, cur in zip(records, records[1:]):
        d_area = cur.area - prev.area
        d_vol = cur.volume - prev.volume
        d_iso = cur.isoper - prev.isoper
        if mode is ConstraintMode.VOLUME:
            if d_area > slack * prev.area:
                out.append(Violation(cur.t, "area", d_area))
            if abs(d_vol) > conservation_slack * prev.volume:
                out.append(Violation(cur.t, "volume", d_vol))
        else:
            if abs(d_area) > conservation_slack * prev.area:
                out.append(Violation(cur.t, "area", d_area))
            if d_vol < -slack * prev.volume:
                out.append(Violation(cur.t, "volume", d_vol))
        if d_iso > slack * prev.isoper:
            out.append(Violation(cur.t, "isoper", d_iso))
    return out


@dataclass
class CrosscheckResult:
    times: np.ndarray
    residual_area: np.ndarray     # |d|M|/dt - integral(H (h-phi) dmu)|
    residual_volume: np.ndarray   # |d|Omega|/dt - integral((h-phi) dmu)|
    max_rel_area: float           # residuals relative to |M|
    max_rel_volume: float


def conservation_crosscheck(records, states, speed: SpeedFunction,
                            mode: ConstraintMode) -> CrosscheckResult:
    """Compare measure time-derivatives against their boundary integrals.

    Central differences of the recorded |M|, |Omega| series (3-point,
    nonuniform-spacing aware) are matched against quadratures of
    H (h - phi) and (h - phi) over the stored states at the interior
    record times.
    """
    ts = np.array([r.t for r in records])
    area = np.array([r.area for r in records])
    vol = np.array([r.volume for r in records])
    if len(ts) < 3:
        empty = np.empty(0)
        return CrosscheckResult(empty, empty, empty, 0.0, 0.0)

    a = ts[1:-1] - ts[:-2]
    b = ts[2:] - ts[1:-1]

    def ddt(series: np.ndarray) -> np.ndarray:
        # 3-point derivative at the middle node of unevenly spaced samples
        return (-b / (a * (a + b)) * series[:-2]
                + (b - a) / (a * b) * series[1:-1]
                + a / (b * (a + b)) * series[2:])

    pred_area = np.empty(len(ts) - 2)
    pred_vol = np.empty(len(ts) - 2)
    for i, g in enumerate(states[1:-1]):
        prof = g.profile_raw()
        w = prof.weights
        phi = speed.phi(prof.H)
        if mode is ConstraintMode.VOLUME:
            h = float((phi * w).sum() / w.sum())
        elif mode is ConstraintMode.AREA:
            hw = prof.H * w
            h = float((phi * hw).sum() / hw.sum())
        else:
            h = 0.0
        pred_area[i] = float((prof.H * (h - phi) * w).sum())
        pred_vol[i] = float(((h - phi) * w).sum())

    res_area = np.abs(ddt(area) - pred_area)
    res_vol = np.abs(ddt(vol) - pred_vol)
    return CrosscheckResult(
        ts[1:-1], res_area, res_vol,
        float((res_area / area[1:-1]).max()),
        float((res_vol / area[1:-1]).max()),
    )


@dataclass
class BarrierAudit:
    passed: bool
    first_violation: tuple | None       # (kind, t_anchor, t, margin)
    worst_inner_margin: float           # min over checks of dist - r_B
    worst_outer_margin: float           # min over checks of R(t) - dist
    windows: int


def _anchor_offsets(u_k: np.ndarray, centers: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """(anchors, N) support offsets u_k(nu) - <c_a, nu> for a block of centers."""
    return u_k[None, :] - centers @ nu


def barrier_audit(records, states, speed: SpeedFunction,
                  tol: float = 1e-6) -> BarrierAudit:
    """Audit the inner and outer comparison-ball barriers along a run.

    For every record time t_bar: the ball inscribed at the inradius center,
    shrinking by r' = -phi(n/r), must stay inside the body while its radius
    exceeds half the anchor inradius; and the ball at the circumradius
    center, growing linearly at the peak recorded h, must contain the body
    for t - t_bar up to circumradius / peak h.
    """
    n = states[0].n
    ts = np.array([r.t for r in records])
    m = len(ts)
    h_tilde = max(r.h for r in records)

    if isinstance(states[0], AxisymSupport):
        nu = np.cos(states[0].thetas)[None, :]                  # (1, N)
        centers_in = np.array([[r.center_in[0]] for r in records])
        centers_out = np.array([[r.center_out[0]] for r in records])
    else:
        _, cos_t, sin_t = unit_normals(states[0].N)
        nu = np.stack([cos_t, sin_t])                           # (2, N)
        centers_in = np.array([r.center_in for r in records])
        centers_out = np.array([r.center_out for r in records])
    U = np.stack([g.u for g in states])

    inner_r = np.array([r.inradius for r in records])
    outer_r = np.array([r.circumradius for r in records])
    floor = inner_r / 2.0

    worst_inner = math.inf
    worst_outer = math.inf
    first: tuple | None = None

    # Single forward march; each record opens one window, all live windows
    # are audited against the current record and advanced together.
    rB = np.empty(m)
    active = np.zeros(m, dtype=bool)
    for k in range(m):
        rB[k] = inner_r[k]
        active[k] = True
        active &= rB >= floor
        idx = np.nonzero(active)[0]
        dists = _anchor_offsets(U[k], centers_in[idx], nu).min(axis=1)
        margins = dists - rB[idx]
        j = int(np.argmin(margins))
        if margins[j] < worst_inner:
            worst_inner = float(margins[j])
        if margins[j] < -tol and first is None:
            first = ("inner", float(ts[idx[j]]), float(ts[k]), float(margins[j]))
        if k + 1 < m:
            dt_rec = ts[k + 1] - ts[k]
            r = rB[idx]
            tau = float((r / speed.phi(n / r)).min())
            nsub = max(2, min(256, int(math.ceil(dt_rec / (0.02 * tau)))))
            h = dt_rec / nsub
            lo = np.minimum(floor[idx] * 1e-3, 1e-6)
            with np.errstate(over="ignore", invalid="ignore"):
                for _ in range(nsub):
                    r = _rk4_ball(speed, n, r, h, lo)
            rB[idx] = np.where(np.isfinite(r), r, 0.0)

    spans = np.full(m, math.inf) if h_tilde <= 0.0 else outer_r / h_tilde
    start = 0
    for k in range(m):
        while ts[k] - ts[start] > spans[start]:
            start += 1
        idx = np.arange(start, k + 1)
        open_mask = ts[k] - ts[idx] <= spans[idx]
        idx = idx[open_mask]
        dists = _anchor_offsets(U[k], centers_out[idx], nu).max(axis=1)
        margins = (h_tilde * (ts[k] - ts[idx]) + outer_r[idx]) - dists
        j = int(np.argmin(margins))
        if margins[j] < worst_outer:
            worst_outer = float(margins[j])
        if margins[j] < -tol and first is None:
            first = ("outer", float(ts[idx[j]]), float(ts[k]), float(margins[j]))

    return BarrierAudit(first is None, first, worst_inner, worst_outer, m)


def _rk4_ball(speed: SpeedFunction, n: int, r: np.ndarray, h: float,
              lo: np.ndarray) -> np.ndarray:
    def f(x):
        return -speed.phi(n / np.maximum(x, lo))
    c1 = f(r)
    c2 = f(r + 0.5 * h * c1)
    c3 = f(r + 0.5 * h * c2)
    c4 = f(r + h * c3)
    return np.maximum(r + (h / 6.0) * (c1 + 2.0 * c2 + 2.0 * c3 + c4), lo)


def alexandrov_fenchel_margin(geometry: Geometry) -> tuple[float, float]:
    """Margin of integral(H dmu) >= C_n |Omega|^((n-1)/(n+1)).

    C_n is normalized so that equality holds on balls: C_1 = 2*pi and
    C_2 = 8*pi / (4*pi/3)^(1/3). Returns (margin, integral of H dmu).
    """
    prof = geometry.profile_raw()
    w = prof.weights
    total_h = float((prof.H * w).sum())
    n = geometry.n
    if n == 1:
        c_n = 2.0 * np.pi
        power = 0.0
    else:
        c_n = 8.0 * np.pi / (4.0 * np.pi / 3.0) ** (1.0 / 3.0)
        power = (n - 1) / (n + 1)
    volume = float((geometry.u * w).sum() / (n + 1))
    return total_h - c_n * volume ** power, total_h


def write_run_csv(path: Path | str, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUN_CSV_COLUMNS)
        for rec in records:
            writer.writerow([repr(float(x)) for x in rec.csv_row()])


def write_audit_json(path: Path | str, audits: dict) -> None:
    with open(path, "w") as fh:
        json.dump(audits, fh, indent=2, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "__dict__"):
        return obj.__dict__
    return str(obj)
