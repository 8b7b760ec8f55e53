"""Session fixtures: the expensive flow runs shared across test modules."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor

import pytest

import convexflow as cf
from convexflow.cli import ExperimentConfig, run_experiment

MATRIX_SPEEDS = ("powersum:1:1", "powersum:2:1", "powersum:0.5:1", "log1p", "expm1")
MATRIX_MODES = ("volume", "area")
MATRIX_SHAPES = {1: ("ellipse:2,1", "perturbed:1;2:0.3"),
                 2: ("spheroid:1,2", "perturbed:1;2:0.1")}

_JOBS = max(1, os.cpu_count() or 1)


def _run_matrix_cell(key):
    dim, shape, speed, mode = key
    cfg = ExperimentConfig(dim=dim, shape=shape, speed=speed, mode=mode,
                           grid=256, tmax=100.0, eps_dev=1e-4, eps_sph=5e-4)
    outcome = run_experiment(cfg, write=False)
    return key, {"summary": outcome.summary, "audits": outcome.audits}


@pytest.fixture(scope="session")
def acceptance_matrix():
    """All 40 convergence-matrix cells: {key: {summary, audits}} plus wall time."""
    keys = [(dim, shape, speed, mode)
            for dim in (1, 2)
            for shape in MATRIX_SHAPES[dim]
            for speed in MATRIX_SPEEDS
            for mode in MATRIX_MODES]
    t0 = time.perf_counter()
    with ProcessPoolExecutor(max_workers=_JOBS) as pool:
        cells = dict(pool.map(_run_matrix_cell, keys))
    wall = time.perf_counter() - t0
    return {"wall": wall, "cells": cells}


def _run_conservation_case(case):
    name, dim, shape, speed, mode, grid, record_dt, t_max = case
    if dim == 1:
        geometry = cf.make_curve(shape, grid)
    else:
        geometry = cf.make_surface(shape, grid)
    state = cf.FlowState(geometry, 0.0, cf.ConstraintMode(mode), cf.parse_speed(speed))
    config = cf.FlowConfig(t_max=t_max, record_dt=record_dt)
    return name, (cf.run(state, config), state.speed, state.mode)


CONSERVATION_CASES = [
    # name, dim, shape, speed, mode, grid, record_dt, t_max
    # drift runs (full convergence)
    ("ellipse-vol", 1, "ellipse:2,1", "powersum:1:1,2:1", "volume", 256, 1e-3, 100.0),
    ("ellipse-area", 1, "ellipse:2,1", "powersum:1:1,2:1", "area", 256, 1e-3, 100.0),
    ("spheroid-vol", 2, "spheroid:1,2", "powersum:1:1", "volume", 256, 5e-4, 100.0),
    ("spheroid-area", 2, "spheroid:1,2", "powersum:1:1", "area", 256, 5e-4, 100.0),
    ("spheroid-vol-512", 2, "spheroid:1,2", "powersum:1:1", "volume", 512, 1e-3, 100.0),
    ("spheroid-area-512", 2, "spheroid:1,2", "powersum:1:1", "area", 512, 1e-3, 100.0),
    # identity-crosscheck runs: the residual is dominated by the central
    # difference of the measure series, so the early transient needs a fine
    # cadence while the slow tail is covered by a coarse full run
    ("ellipse-vol-xfine", 1, "ellipse:2,1", "powersum:1:1", "volume", 256, 2e-4, 2.0),
    ("ellipse-vol-xcoarse", 1, "ellipse:2,1", "powersum:1:1", "volume", 256, 1e-3, 100.0),
]


@pytest.fixture(scope="session")
def conservation_runs():
    """Fine-cadence convergence runs used by the conservation and identity audits."""
    with ProcessPoolExecutor(max_workers=_JOBS) as pool:
        return dict(pool.map(_run_conservation_case, CONSERVATION_CASES))


def drift(records, attr: str) -> float:
    first = getattr(records[0], attr)
    return max(abs(getattr(r, attr) - first) for r in records) / first
