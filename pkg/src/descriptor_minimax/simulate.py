"""Forward simulation of discrete descriptor systems under the bound.

Draws a disturbance tuple (x0g, f_0..f_{N-1}, g_0..g_N) from the
ellipsoid, propagates the recursion forward and reports the resulting
trajectory and observations. Used to manufacture test data whose ground
truth is known, so estimator guarantees can be checked against reality.

The draw whitens the ellipsoid: with L the Cholesky factor of a weight
Q, a coordinate block is L^{-T} xi and contributes ||xi||^2 to the
budget. A standard normal direction scaled onto the unit sphere of the
joint xi-space therefore lands exactly on the ellipsoid boundary
("boundary" mode); "uniform" mode scales by U^(1/dim) for a uniform
draw, and "zero" uses no disturbance at all.

Forward propagation needs each F_k square and invertible; this module
is a data generator, not an estimator, so that restriction is fine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .discrete import DAEEllipsoid, DiscreteDAE
from .errors import InvalidInput, SingularStep

_MODES = ("boundary", "uniform", "zero")

# 1/cond below this means the forward step matrix is unusable.
_STEP_RCOND = 1e-12


@dataclass(frozen=True)
class SimulationResult:
    """Trajectory, observations and the disturbances that produced them."""

    states: np.ndarray        # (N+1, n)
    observations: np.ndarray  # (N+1, l)
    initial_data: np.ndarray  # (m,)
    process: np.ndarray       # (N, p)
    noise: np.ndarray         # (N+1, l)
    quad_form: float          # energy actually spent, recomputed honestly


def _solve_step(matrix: np.ndarray, rhs: np.ndarray, k: int) -> np.ndarray:
    if matrix.shape[0] != matrix.shape[1]:
        raise SingularStep(
            f"forward simulation needs square F_{k}, got shape {matrix.shape}"
        )
    if np.linalg.cond(matrix) > 1.0 / _STEP_RCOND:
        raise SingularStep(f"F_{k} is singular; cannot propagate forward")
    return np.linalg.solve(matrix, rhs)


def simulate(
    dae: DiscreteDAE,
    bounds: DAEEllipsoid,
    disturbance: str = "boundary",
    seed: int = 0,
) -> SimulationResult:
    """Propagate one admissible disturbance draw through the recursion."""
    if disturbance not in _MODES:
        raise InvalidInput(f"disturbance must be one of {_MODES}, got {disturbance!r}")
    N = dae.horizon
    m, p, l = dae.equation_dim, dae.disturbance_dim, dae.observation_dim

    dim = m + N * p + (N + 1) * l
    rng = np.random.default_rng(seed)
    if disturbance == "zero":
        xi = np.zeros(dim)
    else:
        xi = rng.standard_normal(dim)
        norm = float(np.linalg.norm(xi))
        if norm == 0.0:
            xi = np.zeros(dim)
        else:
            xi /= norm
            if disturbance == "uniform":
                xi *= float(rng.random()) ** (1.0 / dim)

    def unwhiten(Q: np.ndarray, block: np.ndarray) -> np.ndarray:
        # (Q v, v) = ||L'v||^2 for Q = L L', so v = L^{-T} block.
        L = np.linalg.cholesky(Q)
        return scipy.linalg.solve_triangular(L.T, block, lower=False)

    pos = 0
    x0g = unwhiten(bounds.Q0, xi[pos : pos + m])
    pos += m
    process = np.zeros((N, p))
    for k in range(N):
        process[k] = unwhiten(bounds.Q1_seq[k], xi[pos : pos + p])
        pos += p
    noise = np.zeros((N + 1, l))
    for k in range(N + 1):
        noise[k] = unwhiten(bounds.Q2_seq[k], xi[pos : pos + l])
        pos += l

    states = np.zeros((N + 1, dae.state_dim))
    states[0] = _solve_step(dae.F_seq[0], dae.S @ x0g, 0)
    for k in range(N):
        rhs = dae.C_seq[k] @ states[k] + dae.B_seq[k] @ process[k]
        states[k + 1] = _solve_step(dae.F_seq[k + 1], rhs, k + 1)

    observations = np.zeros((N + 1, l))
    for k in range(N + 1):
        observations[k] = dae.H_seq[k] @ states[k] + noise[k]

    energy = float(x0g @ (bounds.Q0 @ x0g))
    for k in range(N):
        energy += float(process[k] @ (bounds.Q1_seq[k] @ process[k]))
    for k in range(N + 1):
        energy += float(noise[k] @ (bounds.Q2_seq[k] @ noise[k]))

    return SimulationResult(
        states=states,
        observations=observations,
        initial_data=x0g,
        process=process,
        noise=noise,
        quad_form=energy,
    )
