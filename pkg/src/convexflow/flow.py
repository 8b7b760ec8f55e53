"""Time integration of constrained curvature flows on the support grid.

The evolving body is tracked through its support function u on the fixed
grid of outward normals (Gauss-map parametrization): a flow moving each
boundary point at normal speed h(t) - phi(H) becomes the scalar law

    du/dt = h(t) - phi(H(u))

with no tangential drift and no mesh degradation. The nonlocal term h is

    volume mode    h = integral(phi(H) dmu) / |boundary|
    area mode      h = integral(H phi(H) dmu) / integral(H dmu)
    standard mode  h = 0

and is evaluated with exactly the quadrature weights used for the measures,
which is what makes the discrete conservation identities sharp (for plane
curves the semidiscrete enclosed area is conserved exactly in volume mode,
and the length exactly in area mode).

Stepping is classical 4-stage Runge-Kutta with the parabolic restriction
dt = sigma * dtheta^2 / max_j D_j, where D_j = phi'(H_j) * sum_i r_i(j)^-2
is the local diffusivity of the linearized speed. h is recomputed at every
stage from the stage geometry, which preserves the semidiscrete
conservation identity to the full order of the scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from ._stencil import Profile
from .axisym import AxisymSupport
from .curves import SupportCurve
from .errors import ConvexityLost, NumericalFailure
from .speeds import SpeedFunction

Geometry = SupportCurve | AxisymSupport


class ConstraintMode(str, Enum):
    VOLUME = "volume"      # h keeps the enclosed volume constant
    AREA = "area"          # h keeps the boundary measure constant
    STANDARD = "standard"  # h = 0

    @classmethod
    def parse(cls, text: str) -> "ConstraintMode":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown constraint mode {text!r}; expected volume, area or standard"
            ) from None


class RunStatus(str, Enum):
    CONVERGED = "Converged"
    TIME_EXHAUSTED = "TimeExhausted"
    CONVEXITY_LOST = "ConvexityLost"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True, eq=False)
class FlowState:
    geometry: Geometry
    t: float
    mode: ConstraintMode
    speed: SpeedFunction


@dataclass(frozen=True)
class FlowConfig:
    """Knobs of a single run; all thresholds strictly positive."""

    t_max: float
    sigma: float = 0.25          # CFL safety factor in (0, 1]
    eps_dev: float = 1e-6        # convergence: max|phi(H)-h| <= eps_dev*max(h,1e-12)
    eps_sph: float = 1e-5        # convergence: R+/R- - 1 <= eps_sph
    record_dt: float = 0.01      # diagnostics cadence in flow time
    max_steps: int = 20_000_000
    extinction_fraction: float = 1e-2  # standard mode: stop below this inradius fraction
    use_kernels: bool = True     # batch the step loop through the jitted kernels

    def __post_init__(self):
        if not (0.0 < self.sigma <= 1.0):
            raise ValueError(f"sigma must lie in (0, 1], got {self.sigma}")
        for name in ("t_max", "eps_dev", "eps_sph", "record_dt"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass
class RunResult:
    records: list                 # DiagnosticsRecord per record time
    states: list[Geometry]        # geometry snapshot per record time
    status: RunStatus
    final_state: FlowState
    detail: str = ""
    min_principal_radius: float = math.inf   # min over run of min_j r_i
    min_h: float = math.inf                  # min over run of h(t)
    steps: int = 0


def _mode_h(prof: Profile, phi: np.ndarray, mode: ConstraintMode) -> float:
    w = prof.weights
    if mode is ConstraintMode.VOLUME:
        return float((phi * w).sum() / w.sum())
    if mode is ConstraintMode.AREA:
        hw = prof.H * w
        return float((phi * hw).sum() / hw.sum())
    return 0.0


def _check_convex(prof: Profile, geometry: Geometry) -> float:
    """Raise ConvexityLost on a nonpositive principal radius; return the min."""
    worst = math.inf
    for r in prof.radii:
        low = float(r.min())
        if low <= 0.0:
            j = int(np.argmin(r))
            raise ConvexityLost(j, geometry.thetas[j], low)
        worst = min(worst, low)
    return worst


def nonlocal_term(state: FlowState) -> float:
    """h(t) for the state's constraint mode (0 in standard mode)."""
    prof = state.geometry.profile_raw()
    _check_convex(prof, state.geometry)
    return _mode_h(prof, state.speed.phi(prof.H), state.mode)


def rhs(state: FlowState) -> np.ndarray:
    """Per-node du/dt = h - phi(H)."""
    prof = state.geometry.profile_raw()
    _check_convex(prof, state.geometry)
    phi = state.speed.phi(prof.H)
    return _mode_h(prof, phi, state.mode) - phi


def stable_dt(state: FlowState, config: FlowConfig, prof: Profile | None = None) -> float:
    """Parabolic step bound sigma * dtheta^2 / max_j phi'(H_j) sum_i r_i^-2."""
    g = state.geometry
    if prof is None:
        prof = g.profile_raw()
        _check_convex(prof, g)
    diffusivity = state.speed.dphi(prof.H) * sum(r ** -2.0 for r in prof.radii)
    return config.sigma * g.dtheta ** 2 / float(diffusivity.max())


@dataclass
class _StepInfo:
    dt: float
    h: float
    min_radius: float
    profile: Profile   # profile of the accepted new state, reused next step


def _advance(state: FlowState, config: FlowConfig, prof0: Profile | None,
             dt_cap: float | None) -> tuple[FlowState, _StepInfo]:
    g = state.geometry
    u0 = g.u
    speed, mode = state.speed, state.mode
    if prof0 is None:
        prof0 = g.profile_raw(u0)
        _check_convex(prof0, g)

    phi1 = speed.phi(prof0.H)
    h1 = _mode_h(prof0, phi1, mode)
    k1 = h1 - phi1
    dt = stable_dt(state, config, prof0)
    if dt_cap is not None:
        dt = min(dt, dt_cap)
    min_radius = prof0.min_radius()

    def stage(u_stage: np.ndarray) -> np.ndarray:
        nonlocal min_radius
        prof = g.profile_raw(u_stage)
        min_radius = min(min_radius, _check_convex(prof, g))
        phi = speed.phi(prof.H)
        return _mode_h(prof, phi, mode) - phi

    k2 = stage(u0 + (0.5 * dt) * k1)
    k3 = stage(u0 + (0.5 * dt) * k2)
    k4 = stage(u0 + dt * k3)
    u_new = u0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(u_new)):
        raise NumericalFailure(f"non-finite support values at t={state.t + dt:.6g}")

    prof_new = g.profile_raw(u_new)
    min_radius = min(min_radius, _check_convex(prof_new, g))
    new_state = replace(state, geometry=g.with_u(u_new), t=state.t + dt)
    return new_state, _StepInfo(dt=dt, h=h1, min_radius=min_radius, profile=prof_new)


def step(state: FlowState, config: FlowConfig, dt_cap: float | None = None) -> FlowState:
    """One RK4 step; the returned state satisfies the convexity invariant."""
    new_state, _ = _advance(state, config, None, dt_cap)
    return new_state


def _converged(rec, config: FlowConfig) -> bool:
    return (rec.dev <= config.eps_dev * max(rec.h, 1e-12)
            and rec.sphericity <= config.eps_sph)


def _load_kernels():
    try:
        from . import _kernels
        return _kernels
    except ImportError:
        return None


def _kernel_args(state: FlowState, kernels):
    g = state.geometry
    speed = state.speed
    scode = kernels.SPEED_CODES[speed.kind]
    ks = np.asarray(speed.exponents, dtype=float)
    cs = np.asarray(speed.coefficients, dtype=float)
    mcode = kernels.MODE_CODES[state.mode.value]
    if isinstance(g, AxisymSupport):
        theta = g.thetas
        sin_t = np.sin(theta)
        cot_t = np.cos(theta) / sin_t
        return True, sin_t, cot_t, scode, ks, cs, mcode
    dummy = np.empty(0)
    return False, dummy, dummy, scode, ks, cs, mcode


def run(initial: FlowState, config: FlowConfig) -> RunResult:
    """Advance until convergence, t_max, or a terminal error.

    Converged means both thresholds held at a record: max|phi(H)-h| below
    eps_dev relative to h, and circumradius/inradius - 1 below eps_sph.
    Standard-mode runs never converge in this sense; they stop at t_max or
    at the near-extinction guard.
    """
    from .diagnostics import record as make_record  # deferred: avoids import cycle

    state = initial
    prof = state.geometry.profile_raw()
    _check_convex(prof, state.geometry)

    records: list = []
    states: list[Geometry] = []

    def take_record(dt: float):
        rec = make_record(state, dt)
        records.append(rec)
        states.append(state.geometry)
        return rec

    rec = take_record(0.0)
    min_radius = prof.min_radius()
    min_h = rec.h
    if _converged(rec, config):
        return RunResult(records, states, RunStatus.CONVERGED, state,
                         min_principal_radius=min_radius, min_h=min_h)
    inradius_floor = config.extinction_fraction * rec.inradius

    kernels = _load_kernels() if config.use_kernels else None

    status = RunStatus.TIME_EXHAUSTED
    detail = ""
    steps = 0
    next_record = config.record_dt
    t_end = config.t_max * (1.0 - 1e-14)

    if kernels is not None:
        is_axisym, sin_t, cot_t, scode, ks, cs, mcode = _kernel_args(state, kernels)
        g0 = state.geometry
        dtheta = g0.dtheta
        while state.t < t_end:
            t_target = min(next_record, t_end)
            u = state.geometry.u.copy()
            t_new, took, last_dt, k_minr, k_minh, kstatus, bad_j, bad_v = kernels.advance(
                u, state.t, is_axisym, dtheta, sin_t, cot_t, config.sigma,
                scode, ks, cs, mcode, t_target, config.t_max,
                config.max_steps - steps)
            steps += took
            min_radius = min(min_radius, k_minr)
            min_h = min(min_h, k_minh)
            state = replace(state, geometry=g0.with_u(u), t=t_new)
            if kstatus == kernels.STATUS_CONVEXITY:
                status = RunStatus.CONVEXITY_LOST
                detail = str(ConvexityLost(bad_j, g0.thetas[bad_j], bad_v))
                break
            if kstatus == kernels.STATUS_NONFINITE:
                status = RunStatus.NUMERICAL_FAILURE
                detail = f"non-finite support values at t={state.t:.6g}"
                break
            if kstatus == kernels.STATUS_BUDGET:
                detail = f"step budget {config.max_steps} exhausted at t={state.t:.6g}"
                break
            rec = take_record(last_dt)
            while next_record <= state.t:
                next_record += config.record_dt
            if _converged(rec, config):
                status = RunStatus.CONVERGED
                break
            if state.mode is ConstraintMode.STANDARD and rec.inradius < inradius_floor:
                detail = f"near-extinction guard: inradius {rec.inradius:.4g}"
                break
    else:
        while state.t < t_end:
            if steps >= config.max_steps:
                detail = f"step budget {config.max_steps} exhausted at t={state.t:.6g}"
                break
            try:
                state, info = _advance(state, config, prof, config.t_max - state.t)
            except ConvexityLost as exc:
                status, detail = RunStatus.CONVEXITY_LOST, str(exc)
                break
            except NumericalFailure as exc:
                status, detail = RunStatus.NUMERICAL_FAILURE, str(exc)
                break
            prof = info.profile
            steps += 1
            min_radius = min(min_radius, info.min_radius)
            min_h = min(min_h, info.h)
            if state.t >= next_record or state.t >= t_end:
                rec = take_record(info.dt)
                while next_record <= state.t:
                    next_record += config.record_dt
                if _converged(rec, config):
                    status = RunStatus.CONVERGED
                    break
                if state.mode is ConstraintMode.STANDARD and rec.inradius < inradius_floor:
                    detail = f"near-extinction guard: inradius {rec.inradius:.4g}"
                    break

    if records[-1].t < state.t:
        take_record(0.0)
    return RunResult(records, states, status, state, detail,
                     min_principal_radius=min_radius, min_h=min_h, steps=steps)


def _integrate_ball(speed: SpeedFunction, n: int, r0: float, times: np.ndarray,
                    dt: float, floor: float) -> tuple[np.ndarray, int]:
    """Fixed-step RK4 for r' = -phi(n/r), landing exactly on each sample time.

    Stops once r falls to ``floor`` and returns (values, filled) where only
    the first ``filled`` samples were reached. Near extinction the ODE
    stiffens like phi(n/r)/r, so each step is additionally capped by the
    local timescale to keep the explicit scheme stable.
    """
    def f(r: float) -> float:
        return -float(speed.phi(n / r))

    r, t = float(r0), 0.0
    out = np.full(len(times), np.nan)
    for i, tk in enumerate(times):
        while t < tk - 1e-15 * max(tk, 1.0):
            if r <= floor:
                return out, i
            h = min(dt, tk - t, 0.05 * r / -f(r))
            c1 = f(r)
            c2 = f(r + 0.5 * h * c1)
            c3 = f(r + 0.5 * h * c2)
            c4 = f(r + h * c3)
            r += (h / 6.0) * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
            t += h
        out[i] = r
    return out, len(times)


def _refined_ball_trajectory(speed: SpeedFunction, n: int, r0: float,
                             times: np.ndarray) -> tuple[np.ndarray, int]:
    """Halve the base step until two resolutions agree to 1e-10 on the
    samples both of them reached before extinction."""
    floor = 1e-3 * r0
    dt = 1e-4 * r0 / float(speed.phi(n / r0))
    prev, filled_prev = _integrate_ball(speed, n, r0, times, dt, floor)
    for _ in range(12):
        dt *= 0.5
        cur, filled = _integrate_ball(speed, n, r0, times, dt, floor)
        common = min(filled, filled_prev)
        if common and np.abs(cur[:common] - prev[:common]).max() <= 1e-10:
            return cur, filled
        if common == 0 and filled == filled_prev == 0:
            return cur, 0
        prev, filled_prev = cur, filled
    return prev, filled_prev


def sphere_radius_at(speed: SpeedFunction, n: int, r0: float,
                     times: np.ndarray) -> np.ndarray:
    """Radius of the comparison ball r' = -phi(n/r) at the requested times.

    Integrates with fixed-step RK4 landing exactly on each requested time,
    halving the base step dt0 = 1e-4 * r0 / phi(n/r0) until two successive
    resolutions agree to 1e-10. Raises if the ball shrinks to 1e-3 * r0
    before the last requested time.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("times must be a nondecreasing 1-d array of nonnegative values")
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    values, filled = _refined_ball_trajectory(speed, n, r0, times)
    if filled < len(times):
        raise ValueError(
            f"comparison ball extinct (r <= {1e-3 * r0:.3g}) before t={times[filled]:.6g}"
        )
    return values


def sphere_oracle(speed: SpeedFunction, n: int, r0: float, t_max: float,
                  samples: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Comparison-ball trajectory (t, r) on a uniform sample grid.

    The trajectory is truncated where the radius reaches 1e-3 * r0.
    """
    if r0 <= 0 or t_max <= 0:
        raise ValueError("r0 and t_max must be positive")
    times = np.linspace(0.0, t_max, samples + 1)
    values, filled = _refined_ball_trajectory(speed, n, r0, times)
    return times[:filled], values[:filled]
