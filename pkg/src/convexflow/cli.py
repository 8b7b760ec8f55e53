"""Command-line front end: run | sweep | validate-speed | oracle.

Exit codes: 0 ok, 1 failed run or inadmissible speed, 2 configuration
error, 3 convexity loss, 4 numerical failure, 5 inconclusive speed audit.
Everything is deterministic: identical configuration produces bit-identical
CSV output on the same platform.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import diagnostics, export, flow
from .axisym import make_surface
from .curves import make_curve
from .errors import SpecError
from .speeds import check_admissibility, parse_speed

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_CONVEXITY = 3
EXIT_NUMERICAL = 4
EXIT_INCONCLUSIVE = 5

CONSERVATION_DRIFT_LIMIT = {1: 1e-7, 2: 1e-3}
# Per-record slack for the conserved quantity in the monotonicity audit.
# The plane-curve quadratures make conservation exact semidiscretely, so
# 1e-9 per record is attainable there; the axisymmetric grid conserves only
# up to its discretization error, so its conserved leg gets the per-run
# budget instead.
CONSERVATION_RECORD_SLACK = {1: 1e-9, 2: 1e-5}


@dataclass
class ExperimentConfig:
    dim: int = 1
    shape: str = "ball:1"
    speed: str = "powersum:1:1"
    mode: str = "volume"
    grid: int = 256
    tmax: float = 100.0
    sigma: float = 0.25
    eps_dev: float = 1e-6
    eps_sph: float = 1e-5
    record_dt: float = 0.01
    snapshot_dt: float = 0.0     # 0: first and last state only
    out: str = "runs/latest"
    seed: str = ""               # label echoed into summary.json; no RNG anywhere

    def validate(self) -> "ExperimentConfig":
        if self.dim not in (1, 2):
            raise SpecError(f"dim must be 1 or 2, got {self.dim}")
        if self.mode not in ("volume", "area", "standard"):
            raise SpecError(f"mode must be volume, area or standard, got {self.mode!r}")
        n = int(self.grid)
        if n < 64 or (n & (n - 1)) != 0:
            raise SpecError(f"grid must be a power of two >= 64, got {self.grid}")
        for name in ("tmax", "eps_dev", "eps_sph", "record_dt"):
            if getattr(self, name) <= 0:
                raise SpecError(f"{name} must be positive")
        if not (0 < self.sigma <= 1):
            raise SpecError(f"sigma must lie in (0, 1], got {self.sigma}")
        return self


def read_config_file(path: Path | str) -> dict:
    """Flat ``key = value`` text; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SpecError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        values[key.strip()] = value.strip()
    return values


_FIELD_TYPES = {
    "dim": int, "grid": int,
    "tmax": float, "sigma": float, "eps_dev": float, "eps_sph": float,
    "record_dt": float, "snapshot_dt": float,
}


def config_from_sources(file_values: dict, flag_values: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for source in (file_values, flag_values):
        for key, value in source.items():
            if value is None:
                continue
            if not hasattr(cfg, key):
                raise SpecError(f"unknown configuration key {key!r}")
            caster = _FIELD_TYPES.get(key, str)
            try:
                setattr(cfg, key, caster(value))
            except ValueError as exc:
                raise SpecError(f"bad value for {key}: {value!r}") from exc
    return cfg.validate()


def build_state(cfg: ExperimentConfig) -> flow.FlowState:
    speed = parse_speed(cfg.speed)
    if cfg.dim == 1:
        geometry = make_curve(cfg.shape, cfg.grid)
    else:
        geometry = make_surface(cfg.shape, cfg.grid)
    return flow.FlowState(geometry=geometry, t=0.0,
                          mode=flow.ConstraintMode.parse(cfg.mode), speed=speed)


def target_radius(cfg: ExperimentConfig, area0: float, volume0: float) -> float | None:
    """Radius of the limit ball implied by the conserved quantity."""
    if cfg.mode == "standard":
        return None
    if cfg.dim == 1:
        return float(np.sqrt(volume0 / np.pi)) if cfg.mode == "volume" \
            else float(area0 / (2.0 * np.pi))
    return float((3.0 * volume0 / (4.0 * np.pi)) ** (1.0 / 3.0)) if cfg.mode == "volume" \
        else float(np.sqrt(area0 / (4.0 * np.pi)))


@dataclass
class ExperimentOutcome:
    config: ExperimentConfig
    result: flow.RunResult
    summary: dict
    audits: dict
    exit_code: int


def run_experiment(cfg: ExperimentConfig, outdir: Path | str | None = None,
                   write: bool = True) -> ExperimentOutcome:
    """Run one flow experiment, audit it, and optionally write artifacts."""
    cfg.validate()
    state = build_state(cfg)
    admissibility = check_admissibility(state.speed)
    if admissibility.overall != "pass":
        print(f"warning: speed {cfg.speed!r} admissibility is "
              f"{admissibility.overall}; the run proceeds anyway", file=sys.stderr)

    config = flow.FlowConfig(t_max=cfg.tmax, sigma=cfg.sigma, eps_dev=cfg.eps_dev,
                             eps_sph=cfg.eps_sph, record_dt=cfg.record_dt)
    result = flow.run(state, config)
    mode = state.mode
    records = result.records

    first, last = records[0], records[-1]
    r_target = target_radius(cfg, first.area, first.volume)
    achieved = 0.5 * (last.inradius + last.circumradius)
    area_drift = max(abs(r.area - first.area) for r in records) / first.area
    volume_drift = max(abs(r.volume - first.volume) for r in records) / first.volume

    audits: dict = {"admissibility": admissibility.overall}
    audits_pass = True
    if mode is not flow.ConstraintMode.STANDARD:
        violations = diagnostics.monotonicity_audit(
            records, mode,
            conservation_slack=CONSERVATION_RECORD_SLACK[cfg.dim])
        audits["monotonicity"] = {
            "violations": len(violations),
            "first": None if not violations else asdict(violations[0]),
        }
        audits_pass &= not violations
        conserved_drift = volume_drift if mode is flow.ConstraintMode.VOLUME else area_drift
        audits["conservation"] = {
            "relative_drift": conserved_drift,
            "limit": CONSERVATION_DRIFT_LIMIT[cfg.dim],
        }
        audits_pass &= conserved_drift <= CONSERVATION_DRIFT_LIMIT[cfg.dim]

    barrier = diagnostics.barrier_audit(records, result.states, state.speed)
    audits["barrier"] = {
        "passed": barrier.passed,
        "worst_inner_margin": barrier.worst_inner_margin,
        "worst_outer_margin": barrier.worst_outer_margin,
        "first_violation": barrier.first_violation,
        "windows": barrier.windows,
    }
    audits_pass &= barrier.passed

    af_margin, af_total = diagnostics.alexandrov_fenchel_margin(result.final_state.geometry)
    audits["alexandrov_fenchel"] = {"margin": af_margin, "integral_H": af_total}
    audits_pass &= af_margin >= -1e-9 * af_total

    if result.status is flow.RunStatus.CONVERGED:
        iso_ball = diagnostics.discrete_ball_isoperimetric_ratio(cfg.dim, cfg.grid)
        iso_gap = abs(last.isoper / iso_ball - 1.0)
        audits["isoperimetric_endpoint"] = {"relative_gap": iso_gap, "limit": 1e-4}
        audits_pass &= iso_gap <= 1e-4
    audits["all_passed"] = bool(audits_pass)

    phi_hmax = [float(state.speed.phi(r.H_max)) for r in records]
    early = [v for r, v in zip(records, phi_hmax) if r.t <= 1.0]
    summary = {
        "status": result.status.value,
        "detail": result.detail,
        "t_final": last.t,
        "steps": result.steps,
        "area_initial": first.area, "area_final": last.area,
        "area_drift_rel": area_drift,
        "volume_initial": first.volume, "volume_final": last.volume,
        "volume_drift_rel": volume_drift,
        "target_radius": r_target,
        "achieved_radius": achieved,
        "radius_rel_error": None if r_target is None else abs(achieved / r_target - 1.0),
        "sphericity_final": last.sphericity,
        "dev_final": last.dev,
        "h_final": last.h,
        "min_h": result.min_h,
        "min_principal_radius": result.min_principal_radius,
        "min_H_min": min(r.H_min for r in records),
        "phi_Hmax_overall": max(phi_hmax),
        "phi_Hmax_before_t1": max(early),
        "isoper_initial": first.isoper,
        "isoper_final": last.isoper,
        "audits_passed": bool(audits_pass),
        "admissibility": admissibility.overall,
        "seed": cfg.seed,
        "config": asdict(cfg),
    }

    if result.status is flow.RunStatus.CONVEXITY_LOST:
        code = EXIT_CONVEXITY
    elif result.status is flow.RunStatus.NUMERICAL_FAILURE:
        code = EXIT_NUMERICAL
    elif result.status is flow.RunStatus.CONVERGED and audits_pass:
        code = EXIT_OK
    else:
        code = EXIT_FAILED

    if write:
        _write_artifacts(cfg, result, summary, audits,
                         Path(outdir) if outdir is not None else Path(cfg.out))
    return ExperimentOutcome(cfg, result, summary, audits, code)


def _write_artifacts(cfg: ExperimentConfig, result: flow.RunResult,
                     summary: dict, audits: dict, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    diagnostics.write_run_csv(outdir / "run.csv", result.records)
    diagnostics.write_audit_json(outdir / "audit.json", audits)
    with open(outdir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, default=diagnostics._jsonable)
        fh.write("\n")

    snapdir = outdir / "snapshots"
    snapdir.mkdir(exist_ok=True)
    times = np.array([r.t for r in result.records])
    picks = [0, len(times) - 1]
    if cfg.snapshot_dt > 0:
        marks = np.arange(0.0, times[-1] + cfg.snapshot_dt, cfg.snapshot_dt)
        picks = sorted(set(int(np.searchsorted(times, m)) for m in marks) | {0, len(times) - 1})
        picks = [min(p, len(times) - 1) for p in picks]
    for rank, idx in enumerate(dict.fromkeys(picks)):
        geometry = result.states[idx]
        stem = snapdir / f"{rank:05d}"
        export.snapshot_csv(geometry, stem.with_suffix(".csv"))
        if cfg.dim == 1:
            export.curve_svg(geometry, stem.with_suffix(".svg"))
        else:
            export.surface_obj(geometry, stem.with_suffix(".obj"))


# ---------------------------------------------------------------------------
# sweep

SWEEP_ROW_COLUMNS = ("cell", "shape", "speed", "mode", "status", "t_final",
                     "target_radius", "achieved_radius", "radius_rel_error",
                     "sphericity_final", "dev_final", "conserved_drift",
                     "audits_passed", "error")


def sweep_cells(values: dict) -> list[ExperimentConfig]:
    def split(key: str, default: str) -> list[str]:
        return [item.strip() for item in values.pop(key, default).split("|") if item.strip()]

    shapes = split("shapes", "ball:1")
    speeds = split("speeds", "powersum:1:1")
    modes = split("modes", "volume")
    cells = []
    for shape in shapes:
        for speed in speeds:
            for mode in modes:
                cells.append(config_from_sources(
                    values, {"shape": shape, "speed": speed, "mode": mode}))
    return cells


def _sweep_worker(args) -> dict:
    index, cfg, outroot = args
    row = {"cell": index, "shape": cfg.shape, "speed": cfg.speed, "mode": cfg.mode,
           "status": "", "t_final": "", "target_radius": "", "achieved_radius": "",
           "radius_rel_error": "", "sphericity_final": "", "dev_final": "",
           "conserved_drift": "", "audits_passed": "", "error": ""}
    try:
        outdir = None if outroot is None else Path(outroot) / f"cell{index:03d}"
        outcome = run_experiment(cfg, outdir=outdir, write=outroot is not None)
    except SpecError as exc:
        row["status"] = "InvalidInitialData"
        row["error"] = str(exc)
        return row
    s = outcome.summary
    drift = s["volume_drift_rel"] if cfg.mode == "volume" else s["area_drift_rel"]
    row.update(status=s["status"], t_final=s["t_final"],
               target_radius=s["target_radius"], achieved_radius=s["achieved_radius"],
               radius_rel_error=s["radius_rel_error"],
               sphericity_final=s["sphericity_final"], dev_final=s["dev_final"],
               conserved_drift=drift if cfg.mode != "standard" else "",
               audits_passed=s["audits_passed"])
    return row


def run_sweep(cells: list[ExperimentConfig], outroot: Path | str | None,
              jobs: int = 1) -> list[dict]:
    """Run all cells (in parallel when jobs > 1); cell failures don't abort."""
    tasks = [(i, cfg, None if outroot is None else str(outroot))
             for i, cfg in enumerate(cells)]
    if jobs > 1 and len(cells) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_worker, tasks))
    else:
        rows = [_sweep_worker(task) for task in tasks]
    return rows


def write_sweep_csv(path: Path | str, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_ROW_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# argument parsing and subcommands

def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--dim", type=int, choices=(1, 2))
    p.add_argument("--shape")
    p.add_argument("--speed")
    p.add_argument("--mode", choices=("volume", "area", "standard"))
    p.add_argument("--grid", type=int)
    p.add_argument("--tmax", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--eps-dev", dest="eps_dev", type=float)
    p.add_argument("--eps-sph", dest="eps_sph", type=float)
    p.add_argument("--record-dt", dest="record_dt", type=float)
    p.add_argument("--snapshot-dt", dest="snapshot_dt", type=float)
    p.add_argument("--out")
    p.add_argument("--seed", help="label recorded in summary.json (no RNG is used)")


def _cmd_run(args) -> int:
    file_values = read_config_file(args.config) if args.config else {}
    flag_values = {k: getattr(args, k) for k in (
        "dim", "shape", "speed", "mode", "grid", "tmax", "sigma",
        "eps_dev", "eps_sph", "record_dt", "snapshot_dt", "out", "seed")}
    cfg = config_from_sources(file_values, flag_values)
    outcome = run_experiment(cfg)
    s = outcome.summary
    print(f"status={s['status']} t_final={s['t_final']:.6g} "
          f"achieved_radius={s['achieved_radius']:.9g} "
          f"target_radius={s['target_radius']} audits_passed={s['audits_passed']}")
    print(f"artifacts in {cfg.out}")
    return outcome.exit_code


def _cmd_sweep(args) -> int:
    values = read_config_file(args.config)
    cells = sweep_cells(values)
    outroot = Path(args.out) if args.out else Path("sweep_out")
    outroot.mkdir(parents=True, exist_ok=True)
    rows = run_sweep(cells, outroot, jobs=args.jobs)
    write_sweep_csv(outroot / "sweep.csv", rows)
    ok = True
    for row in rows:
        print(f"cell {row['cell']:3d} [{row['shape']} / {row['speed']} / {row['mode']}] "
              f"-> {row['status']} {row['error']}")
        ok &= row["status"] == "Converged" and row["audits_passed"] is True
    print(f"sweep table in {outroot / 'sweep.csv'}")
    return EXIT_OK if ok else EXIT_FAILED


def _cmd_validate_speed(args) -> int:
    speed = parse_speed(args.speed)
    report = check_admissibility(speed)
    print(report.to_json())
    if report.overall == "pass":
        return EXIT_OK
    return EXIT_FAILED if report.overall == "fail" else EXIT_INCONCLUSIVE


def _cmd_oracle(args) -> int:
    speed = parse_speed(args.speed)
    if args.r0 <= 0 or args.tmax <= 0:
        raise SpecError("r0 and tmax must be positive")
    ts, rs = flow.sphere_oracle(speed, args.dim, args.r0, args.tmax, samples=args.samples)
    rows = [f"{repr(float(t))},{repr(float(r))}" for t, r in zip(ts, rs)]
    text = "t,r\n" + "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"oracle trajectory in {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convexflow",
        description="Constrained curvature flows of convex bodies on the support grid",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one flow experiment")
    _add_run_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a shapes x speeds x modes matrix")
    p_sweep.add_argument("config", help="sweep configuration file")
    p_sweep.add_argument("--out", help="output root (default sweep_out)")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker count")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate-speed", help="audit the admissibility conditions")
    p_val.add_argument("speed")
    p_val.set_defaults(func=_cmd_validate_speed)

    p_oracle = sub.add_parser("oracle", help="comparison-ball trajectory r' = -phi(n/r)")
    p_oracle.add_argument("--speed", required=True)
    p_oracle.add_argument("--dim", type=int, choices=(1, 2), required=True)
    p_oracle.add_argument("--r0", type=float, required=True)
    p_oracle.add_argument("--tmax", type=float, required=True)
    p_oracle.add_argument("--samples", type=int, default=1000)
    p_oracle.add_argument("--out")
    p_oracle.set_defaults(func=_cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
