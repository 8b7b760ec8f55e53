"""Speed laws phi(H) for the flow, with numerical admissibility audits.

A speed is a scalar function phi applied to the mean curvature. The solver
accepts a few closed-form families, each supplying exact first and second
derivatives so the step-size controller never relies on numerical
differentiation.

Admissibility bundles the structural conditions under which a constrained
flow is expected to round off every strictly convex initial body:

    i)   phi(0) = 0  and  phi(alpha) -> inf   as alpha -> inf
    ii)  phi'(alpha) > 0                      for all alpha > 0
    iii) phi'(alpha) alpha^2 / phi(alpha) -> 0 (alpha -> 0) and
         -> inf (alpha -> inf)
    iv)  phi'(alpha) alpha -> 0               as alpha -> 0
    v)   phi''(alpha) alpha >= -2 phi'(alpha) for all alpha > 0

A numeric tool can certify trends on a probe grid, not true limits, so the
limit conditions are judged heuristically and the verdicts are three-valued:
``pass`` / ``fail`` / ``inconclusive``. A fail always carries at least one
witness point (alpha, measured value).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import SpecError

# Thresholds of the trend heuristic. "-> 0" needs the quantity below
# LIMIT_LOW at the grid edge; "-> inf" needs it above LIMIT_HIGH, or still
# growing by at least GROWTH across the outermost two decades (slowly
# diverging quantities such as log(1+alpha) never clear a fixed bar on a
# finite grid). A quantity that changed by less than STALL across those
# decades while missing its bar counts as flatlined, hence a fail.
LIMIT_HIGH = 1e3
LIMIT_LOW = 1e-3
GROWTH = 1.10
STALL = 1.01
CONDITION_V_SLACK = 1e-12


@dataclass(frozen=True)
class SpeedFunction:
    """One speed family; immutable after construction, safe to share.

    kind is one of ``powersum`` (sum of c_i * alpha**k_i with c_i, k_i > 0),
    ``log1p``, ``expm1`` or ``arctan``. The arctan family violates the
    admissibility conditions and exists for exercising the auditor.
    """

    kind: str
    label: str
    exponents: tuple[float, ...] = ()
    coefficients: tuple[float, ...] = ()

    def phi(self, alpha):
        if self.kind == "powersum":
            out = 0.0
            for k, c in zip(self.exponents, self.coefficients):
                out = out + c * np.power(alpha, k)
            return out
        if self.kind == "log1p":
            return np.log1p(alpha)
        if self.kind == "expm1":
            return np.expm1(alpha)
        return np.arctan(alpha)

    def dphi(self, alpha):
        if self.kind == "powersum":
            out = 0.0
            for k, c in zip(self.exponents, self.coefficients):
                out = out + c * k * np.power(alpha, k - 1.0)
            return out
        if self.kind == "log1p":
            return 1.0 / (1.0 + alpha)
        if self.kind == "expm1":
            return np.exp(alpha)
        return 1.0 / (1.0 + alpha * alpha)

    def d2phi(self, alpha):
        if self.kind == "powersum":
            out = 0.0 * np.asarray(alpha, dtype=float)
            for k, c in zip(self.exponents, self.coefficients):
                pref = c * k * (k - 1.0)
                if pref != 0.0:
                    out = out + pref * np.power(alpha, k - 2.0)
            return out if np.ndim(alpha) else float(out)
        if self.kind == "log1p":
            return -1.0 / (1.0 + alpha) ** 2
        if self.kind == "expm1":
            return np.exp(alpha)
        return -2.0 * alpha / (1.0 + alpha * alpha) ** 2

    def eval(self, alpha):
        """Return (phi, phi', phi'') at alpha; alpha must be positive."""
        arr = np.asarray(alpha, dtype=float)
        if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
            raise SpecError(f"speed evaluated outside its domain: alpha={alpha}")
        return self.phi(alpha), self.dphi(alpha), self.d2phi(alpha)


def parse_speed(spec: str) -> SpeedFunction:
    """Build a SpeedFunction from its textual form.

    Grammar: ``powersum:<k1>:<c1>[,<k2>:<c2>...]`` | ``log1p`` | ``expm1``
    | ``arctan``. Exponents and coefficients must be strictly positive.
    """
    text = spec.strip()
    if text in ("log1p", "expm1", "arctan"):
        return SpeedFunction(kind=text, label=text)
    if not text.startswith("powersum:"):
        raise SpecError(
            f"unknown speed spec {spec!r}; expected powersum:<k>:<c>[,...], "
            f"log1p, expm1 or arctan"
        )
    body = text[len("powersum:"):]
    if not body:
        raise SpecError("powersum speed needs at least one <k>:<c> pair")
    exps: list[float] = []
    coefs: list[float] = []
    for i, pair in enumerate(body.split(","), start=1):
        parts = pair.split(":")
        if len(parts) != 2:
            raise SpecError(f"powersum pair {i} ({pair!r}) is not <k>:<c>")
        try:
            k, c = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise SpecError(f"powersum pair {i} ({pair!r}) is not numeric") from exc
        if not (k > 0.0) or not np.isfinite(k):
            raise SpecError(f"powersum pair {i} ({pair!r}) has nonpositive exponent k={k}")
        if not (c > 0.0) or not np.isfinite(c):
            raise SpecError(f"powersum pair {i} ({pair!r}) has nonpositive coefficient c={c}")
        exps.append(k)
        coefs.append(c)
    return SpeedFunction(
        kind="powersum",
        label=text,
        exponents=tuple(exps),
        coefficients=tuple(coefs),
    )


def default_probe_grid(lo: float = 1e-8, hi: float = 1e8, per_decade: int = 12) -> np.ndarray:
    decades = np.log10(hi) - np.log10(lo)
    num = int(round(decades * per_decade)) + 1
    return np.logspace(np.log10(lo), np.log10(hi), num)


@dataclass
class ConditionReport:
    name: str
    verdict: str                       # "pass" | "fail" | "inconclusive"
    witnesses: list[tuple[float, float]] = field(default_factory=list)
    samples: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "condition": self.name,
            "verdict": self.verdict,
            "witnesses": [[a, v] for a, v in self.witnesses],
            "samples": {q: [[a, v] for a, v in pts] for q, pts in self.samples.items()},
            "note": self.note,
        }


@dataclass
class AdmissibilityReport:
    speed: str
    grid_lo: float
    grid_hi: float
    conditions: dict[str, ConditionReport]
    overall: str                       # "pass" | "fail" | "inconclusive"

    def to_dict(self) -> dict:
        return {
            "speed": self.speed,
            "probe_grid": {"lo": self.grid_lo, "hi": self.grid_hi},
            "overall": self.overall,
            "conditions": {k: c.to_dict() for k, c in self.conditions.items()},
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _finite_prefix(alphas: np.ndarray, values: np.ndarray):
    """Truncate both arrays at the first non-finite value.

    Fast-growing families overflow the float range well inside the probe
    grid (expm1 already at alpha ~ 710); the trend is then judged on the
    finite prefix, whose edge value is itself astronomically large.
    """
    bad = ~np.isfinite(values)
    if not bad.any():
        return alphas, values
    cut = int(np.argmax(bad))
    return alphas[:cut], values[:cut]


def _judge_limit(alphas: np.ndarray, values: np.ndarray, side: str, target: str):
    """Trend verdict for one limit: returns (verdict, witness or None).

    side is "zero" or "inf" (which end of the grid the limit lives at);
    target is "zero" or "inf" (the expected limit value).
    """
    alphas, values = _finite_prefix(alphas, values)
    if len(alphas) < 4:
        return "inconclusive", None
    if side == "zero":
        window = alphas <= alphas[0] * 100.0
        a = alphas[window][::-1]          # ordered toward the limit point
        v = values[window][::-1]
    else:
        window = alphas >= alphas[-1] / 100.0
        a = alphas[window]
        v = values[window]
    if len(v) < 3:
        return "inconclusive", None
    v_end = v[-1]
    v_start = v[0]
    scale = max(abs(v_start), abs(v_end), 1e-300)
    diffs = np.diff(v)
    if target == "zero":
        monotone = bool(np.all(diffs <= 1e-12 * scale))
        if monotone and v_end <= LIMIT_LOW:
            return "pass", None
        if v_end > LIMIT_LOW and v_end >= v_start / STALL:
            # not decreasing toward zero in any meaningful way
            return "fail", (float(a[-1]), float(v_end))
        return "inconclusive", None
    # target == "inf"
    monotone = bool(np.all(diffs >= -1e-12 * scale))
    if monotone and (v_end >= LIMIT_HIGH or v_end >= GROWTH * v_start):
        return "pass", None
    if v_end < LIMIT_HIGH and v_end <= STALL * v_start:
        return "fail", (float(a[-1]), float(v_end))
    return "inconclusive", None


def _combine(parts: list[tuple[str, tuple | None]]) -> tuple[str, list]:
    verdicts = [p[0] for p in parts]
    witnesses = [p[1] for p in parts if p[0] == "fail" and p[1] is not None]
    if "fail" in verdicts:
        return "fail", witnesses
    if "inconclusive" in verdicts:
        return "inconclusive", []
    return "pass", []


def _pairs(alphas, values, cap: int = 0):
    pts = [(float(a), float(v)) for a, v in zip(alphas, values)]
    return pts if cap == 0 else pts[:cap]


def check_admissibility(speed: SpeedFunction, grid: np.ndarray | None = None) -> AdmissibilityReport:
    """Audit conditions i)-v) on a log-spaced probe grid.

    The grid must span at least [1e-6, 1e6] with >= 10 points per decade;
    the default spans [1e-8, 1e8] at 12 per decade. Pointwise conditions
    ii) and v) are checked on every finite grid point; the limit conditions
    are judged by the trend heuristic described in the module docstring.
    """
    if grid is None:
        grid = default_probe_grid()
    grid = np.asarray(grid, dtype=float)
    if grid[0] > 1e-6 or grid[-1] < 1e6:
        raise SpecError("probe grid must span at least [1e-6, 1e6]")
    decades = np.log10(grid[-1]) - np.log10(grid[0])
    if (len(grid) - 1) / decades < 10.0 - 1e-9:
        raise SpecError("probe grid must carry at least 10 points per decade")

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        phi = np.asarray(speed.phi(grid), dtype=float)
        dphi = np.asarray(speed.dphi(grid), dtype=float)
        d2phi = np.asarray(speed.d2phi(grid), dtype=float)
        q3 = dphi * grid * grid / phi
        q4 = dphi * grid
        v_margin = d2phi * grid + 2.0 * dphi

    conditions: dict[str, ConditionReport] = {}

    verdict, wit = _combine([
        _judge_limit(grid, phi, side="zero", target="zero"),
        _judge_limit(grid, phi, side="inf", target="inf"),
    ])
    conditions["i"] = ConditionReport(
        "i", verdict, wit, {"phi": _pairs(grid, phi)},
        note="phi(0)=0 and phi unbounded, judged by grid trend",
    )

    fin = np.isfinite(dphi)
    bad = fin & (dphi <= 0.0)
    conditions["ii"] = ConditionReport(
        "ii",
        "fail" if bad.any() else "pass",
        _pairs(grid[bad], dphi[bad], cap=5),
        {"dphi": _pairs(grid, dphi)},
        note="phi' > 0 pointwise on the grid",
    )

    verdict, wit = _combine([
        _judge_limit(grid, q3, side="zero", target="zero"),
        _judge_limit(grid, q3, side="inf", target="inf"),
    ])
    conditions["iii"] = ConditionReport(
        "iii", verdict, wit, {"dphi_alpha2_over_phi": _pairs(grid, q3)},
        note="phi' a^2/phi -> 0 at 0 and -> inf at inf, judged by grid trend",
    )

    verdict, wit = _combine([_judge_limit(grid, q4, side="zero", target="zero")])
    conditions["iv"] = ConditionReport(
        "iv", verdict, wit, {"dphi_alpha": _pairs(grid, q4)},
        note="phi' a -> 0 at 0, judged by grid trend",
    )

    fin = np.isfinite(v_margin) & np.isfinite(dphi)
    bad = fin & (v_margin < -CONDITION_V_SLACK * np.abs(dphi))
    conditions["v"] = ConditionReport(
        "v",
        "fail" if bad.any() else "pass",
        _pairs(grid[bad], v_margin[bad], cap=5),
        {"d2phi_alpha_plus_2dphi": _pairs(grid, v_margin)},
        note="phi'' a + 2 phi' >= 0 pointwise (roundoff slack included); "
             "equality cases are recorded verbatim in the samples",
    )

    verdicts = [c.verdict for c in conditions.values()]
    if "fail" in verdicts:
        overall = "fail"
    elif "inconclusive" in verdicts:
        overall = "inconclusive"
    else:
        overall = "pass"
    return AdmissibilityReport(
        speed=speed.label,
        grid_lo=float(grid[0]),
        grid_hi=float(grid[-1]),
        conditions=conditions,
        overall=overall,
    )
