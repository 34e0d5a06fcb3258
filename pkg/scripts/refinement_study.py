"""Measure convergence orders of the flow diagnostics under refinement.

Doubles the spatial resolution and the time resolution together and reports
the shrink factor of the potential-identity residuals and of the worst
negative trace-comparison margin (target: factor 4), then tabulates the
Ricci-potential residual against grid size (target: second order).

Example:

    python3 scripts/refinement_study.py --levels 3
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from kricci.flow import (
    FlowConfig,
    TwistSpec,
    check_potential_identities,
    check_schwarz,
    run_flow,
)
from kricci.grid import MetricField, PeriodicGrid, ricci_potential, scalar_from_modes


def flow_residuals(N, dt):
    grid = PeriodicGrid(1, N)
    u = scalar_from_modes(grid, [((1, 0), 0.02)])
    config = FlowConfig(grid=grid, twist=TwistSpec(c=0.0, potential=u),
                        t_final=0.5, dt_initial=dt, diagnostics_every=25)
    result = run_flow(config)
    ident = check_potential_identities(result)
    schwarz = check_schwarz(result)
    return ident.residual_phi, ident.residual_phidot, schwarz.worst_negative


def potential_residual(N):
    grid = PeriodicGrid(1, N, discretization="fd2")
    x = grid.coordinates()[0]
    values = (1.0 - 0.3 * np.cos(2 * np.pi * x))[..., None, None].astype(complex)
    return ricci_potential(grid, MetricField(grid, values)).residual_vs_trace


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--levels", type=int, default=2,
                        help="number of refinement levels (N doubles each level)")
    parser.add_argument("--base-resolution", type=int, default=32)
    parser.add_argument("--base-dt", type=float, default=1.6e-4)
    args = parser.parse_args(argv)

    print("flow diagnostics (N and 1/dt double per level):")
    print(f"{'N':>5} {'dt':>9} {'potential':>12} {'trace rate':>12} {'comparison':>12}")
    previous = None
    for level in range(args.levels):
        N = args.base_resolution * 2**level
        dt = args.base_dt / 2**level
        current = flow_residuals(N, dt)
        print(f"{N:5d} {dt:9.1e} " + " ".join(f"{v:12.3e}" for v in current))
        if previous is not None:
            ratios = [p / c if c else math.inf for p, c in zip(previous, current)]
            print(f"{'':15s} " + " ".join(f"{'x%.2f' % r:>12}" for r in ratios))
        previous = current

    print("\nRicci-potential residual vs trace of the curvature tensor:")
    residuals = []
    for level in range(args.levels + 1):
        N = 16 * 2**level
        residuals.append(potential_residual(N))
        line = f"{N:5d} {residuals[-1]:12.3e}"
        if len(residuals) > 1:
            line += f"   order {math.log2(residuals[-2] / residuals[-1]):.2f}"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
