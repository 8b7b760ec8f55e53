#!/usr/bin/env python3
"""Grid-refinement study: measure accuracy and conservation drift vs N.

Reports, for a chain of grid sizes, the error of the discrete measures
against closed forms and the conserved-quantity drift over a full
volume-preserving convergence run. The measure error should shrink at
4th order for plane curves and at least 2nd order for axisymmetric
surfaces; the drift is exact (roundoff) for curves and shrinks with N
for surfaces.

Usage:
    python scripts/refinement_study.py [--dim {1,2}] [--grids 128,256,512]
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np

import convexflow as cf

ELLIPSE_PERIMETER = 9.688448220547677      # adaptive quadrature of the 2:1 ellipse
SPHEROID_AREA = 21.478435327883737         # closed form, prolate spheroid 1,1,2


def study(dim: int, grids: list[int]) -> None:
    if dim == 1:
        shape, speed = "ellipse:2,1", "powersum:1:1,2:1"
        make, exact = cf.make_curve, (ELLIPSE_PERIMETER, 2.0 * np.pi)
    else:
        shape, speed = "spheroid:1,2", "powersum:1:1"
        make, exact = cf.make_surface, (SPHEROID_AREA, 8.0 * np.pi / 3.0)

    print(f"dim {dim}: {shape} under {speed}, volume-preserving")
    print(f"{'N':>6s} {'|M| rel err':>12s} {'|Omega| rel err':>15s} "
          f"{'drift':>10s} {'t_conv':>8s} {'steps':>9s}")
    prev_drift = None
    for n in grids:
        geometry = make(shape, n)
        if dim == 1:
            m, v = cf.curve_measures(geometry)
        else:
            m, v = cf.surface_measures(geometry)
        state = cf.FlowState(geometry, 0.0, cf.ConstraintMode.VOLUME,
                             cf.parse_speed(speed))
        res = cf.run(state, cf.FlowConfig(t_max=100.0, eps_dev=1e-4, eps_sph=5e-4))
        v0 = res.records[0].volume
        drift = max(abs(r.volume - v0) for r in res.records) / v0
        note = ""
        if prev_drift is not None and drift > 0:
            note = f"  ({prev_drift / drift:.1f}x down)"
        prev_drift = drift
        print(f"{n:6d} {abs(m / exact[0] - 1):12.2e} {abs(v / exact[1] - 1):15.2e} "
              f"{drift:10.2e} {res.final_state.t:8.3f} {res.steps:9d}{note}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dim", type=int, choices=(1, 2), default=None)
    parser.add_argument("--grids", default="128,256,512")
    args = parser.parse_args()
    grids = [int(x) for x in args.grids.split(",")]
    for dim in ((args.dim,) if args.dim else (1, 2)):
        study(dim, grids)
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
