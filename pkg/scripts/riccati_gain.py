"""Gain integration sanity checks for the scalar continuous problem.

Unit coefficients put the gain equation on its fixed point K = 1.
Starting off the fixed point (Q0 = 4) the flow follows
K(t) = tanh(t + atanh(1/4)); the script prints the worst deviation from
that closed form and then compares the endpoint radius against the
discretized recursive filter on a ladder of grids.
"""

import argparse

import numpy as np

from descriptor_minimax import (
    ContinuousDAE,
    ContinuousEllipsoid,
    TimeGrid,
    discretize,
    filter_run,
    riccati_filter,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=1000)
    args = ap.parse_args()

    system = ContinuousDAE(F=[[1.0]], C=[[0.0]], H=[[1.0]], t_start=0.0, t_end=1.0)
    unit = ContinuousEllipsoid(Q0=[[1.0]], Q1=[[1.0]], Q2=[[1.0]])
    grid = TimeGrid(0.0, 1.0, args.steps)
    y = np.zeros((args.steps + 1, 1))

    out = riccati_filter(system, unit, [1.0], y, grid)
    print(f"fixed point:   max |K - 1| = {np.max(np.abs(out.K_nodes - 1.0)):.3e}")
    print(f"               sigma_hat   = {out.sigma_hat:.12f}")

    off = ContinuousEllipsoid(Q0=[[4.0]], Q1=[[1.0]], Q2=[[1.0]])
    out = riccati_filter(system, off, [1.0], y, grid)
    exact = np.tanh(grid.nodes() + np.arctanh(0.25))
    print(f"tanh flow:     max |K - tanh| = {np.max(np.abs(out.K_nodes[:, 0, 0] - exact)):.3e}")
    print(f"               K(1) error     = {abs(out.K_final[0, 0] - exact[-1]):.3e}")

    print("\nendpoint radius vs discretized recursive filter:")
    print(f"{'steps':>8} {'riccati':>14} {'filter P_N':>14} {'diff':>10}")
    for M in (16, 32, 64, 128):
        g = TimeGrid(0.0, 1.0, M)
        yM = np.zeros((M + 1, 1))
        ric = riccati_filter(system, off, [1.0], yM, g)
        dae, dbounds = discretize(system, off, g)
        run = filter_run(dae, dbounds, list(yM), np.ones(1))
        p_end = float(run.final.P[0, 0])
        print(f"{M:>8} {ric.sigma_hat:>14.8f} {p_end:>14.8f} {abs(p_end - ric.sigma_hat):>10.2e}")


if __name__ == "__main__":
    main()
