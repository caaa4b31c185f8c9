"""Trajectory estimation for discrete-time descriptor systems.

A horizon-N system carries states x_0 .. x_N coupled by

    F_0 x_0           = S x0g                   (uncertain initial data x0g)
    F_{k+1} x_{k+1}   = C_k x_k + B_k f_k       (k = 0 .. N-1)
    y_k               = H_k x_k + g_k           (k = 0 .. N)

with the joint ellipsoidal bound

    (Q0 x0g, x0g) + sum_k (Q1_k f_k, f_k) + sum_k (Q2_k g_k, g_k) <= 1.

Stacking all states into one vector turns this into a static algebraic
model, so every result from :mod:`.static` applies verbatim to
trajectory functionals sum_k (ell_k, x_k). Two routes are implemented:

* ``variational_estimate`` flattens and calls the static solver;
* ``estimate_from_block`` assembles the coupled first-order conditions
  step by step, never forming the flattened model.

The two must agree to solver precision; the second exists both as an
independent check and because its block-bidiagonal structure is what a
recursive filter discretizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InconsistentData, InvalidInput
from .linalg import (
    DEFAULT_TOL,
    as_matrix,
    block_diag,
    require_spd,
    solve_least_squares,
    spd_solve,
)
from .static import (
    KIND_APOSTERIORI,
    KIND_APRIORI,
    StaticEllipsoid,
    StaticModel,
    aposteriori_estimate,
)

_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class DiscreteDAE:
    """Time-varying descriptor recursion over a finite horizon.

    ``F_seq`` has N+1 entries (one per state), ``C_seq`` and ``B_seq``
    have N entries (one per transition), ``H_seq`` has N+1 entries.
    All F_k and C_k share the shape (m, n), all B_k share (m, p), all
    H_k share (l, n), and S is (m, m). N = 0 is allowed: a single state
    constrained by F_0 x_0 = S x0g and observed once.
    """

    F_seq: tuple
    C_seq: tuple
    B_seq: tuple
    S: np.ndarray
    H_seq: tuple

    def __post_init__(self):
        F_seq = tuple(as_matrix(f, f"F_seq[{i}]") for i, f in enumerate(self.F_seq))
        C_seq = tuple(as_matrix(c, f"C_seq[{i}]") for i, c in enumerate(self.C_seq))
        B_seq = tuple(as_matrix(b, f"B_seq[{i}]") for i, b in enumerate(self.B_seq))
        H_seq = tuple(as_matrix(h, f"H_seq[{i}]") for i, h in enumerate(self.H_seq))
        S = as_matrix(self.S, "S")
        if not F_seq:
            raise InvalidInput("F_seq must contain at least one matrix")
        horizon = len(F_seq) - 1
        if len(C_seq) != horizon or len(B_seq) != horizon:
            raise InvalidInput(
                f"with {horizon + 1} state matrices there must be {horizon} "
                f"transition matrices, got {len(C_seq)} C and {len(B_seq)} B"
            )
        if len(H_seq) != horizon + 1:
            raise InvalidInput(
                f"expected {horizon + 1} observation matrices, got {len(H_seq)}"
            )
        m, n = F_seq[0].shape
        for i, f in enumerate(F_seq):
            if f.shape != (m, n):
                raise InvalidInput(f"F_seq[{i}] has shape {f.shape}, expected {(m, n)}")
        for i, c in enumerate(C_seq):
            if c.shape != (m, n):
                raise InvalidInput(f"C_seq[{i}] has shape {c.shape}, expected {(m, n)}")
        p = B_seq[0].shape[1] if B_seq else 0
        for i, b in enumerate(B_seq):
            if b.shape != (m, p):
                raise InvalidInput(f"B_seq[{i}] has shape {b.shape}, expected {(m, p)}")
        l = H_seq[0].shape[0]
        for i, h in enumerate(H_seq):
            if h.shape != (l, n):
                raise InvalidInput(f"H_seq[{i}] has shape {h.shape}, expected {(l, n)}")
        if S.shape != (m, m):
            raise InvalidInput(f"S has shape {S.shape}, expected {(m, m)}")
        object.__setattr__(self, "F_seq", F_seq)
        object.__setattr__(self, "C_seq", C_seq)
        object.__setattr__(self, "B_seq", B_seq)
        object.__setattr__(self, "H_seq", H_seq)
        object.__setattr__(self, "S", S)

    @property
    def horizon(self) -> int:
        return len(self.F_seq) - 1

    @property
    def state_dim(self) -> int:
        return self.F_seq[0].shape[1]

    @property
    def equation_dim(self) -> int:
        return self.F_seq[0].shape[0]

    @property
    def disturbance_dim(self) -> int:
        return self.B_seq[0].shape[1] if self.B_seq else 0

    @property
    def observation_dim(self) -> int:
        return self.H_seq[0].shape[0]


@dataclass(frozen=True)
class DAEEllipsoid:
    """Joint bound on initial data, process and observation disturbances."""

    Q0: np.ndarray
    Q1_seq: tuple
    Q2_seq: tuple

    def __post_init__(self):
        object.__setattr__(self, "Q0", require_spd(self.Q0, "Q0"))
        object.__setattr__(
            self,
            "Q1_seq",
            tuple(require_spd(q, f"Q1_seq[{i}]") for i, q in enumerate(self.Q1_seq)),
        )
        object.__setattr__(
            self,
            "Q2_seq",
            tuple(require_spd(q, f"Q2_seq[{i}]") for i, q in enumerate(self.Q2_seq)),
        )


def _check_bounds(dae: DiscreteDAE, bounds: DAEEllipsoid) -> None:
    if bounds.Q0.shape[0] != dae.equation_dim:
        raise InvalidInput(
            f"Q0 must be {dae.equation_dim}x{dae.equation_dim} to weight the "
            f"initial data, got {bounds.Q0.shape}"
        )
    if len(bounds.Q1_seq) != dae.horizon:
        raise InvalidInput(
            f"expected {dae.horizon} process weights, got {len(bounds.Q1_seq)}"
        )
    if len(bounds.Q2_seq) != dae.horizon + 1:
        raise InvalidInput(
            f"expected {dae.horizon + 1} observation weights, got {len(bounds.Q2_seq)}"
        )
    for i, q in enumerate(bounds.Q1_seq):
        if q.shape[0] != dae.disturbance_dim:
            raise InvalidInput(f"Q1_seq[{i}] has shape {q.shape}")
    for i, q in enumerate(bounds.Q2_seq):
        if q.shape[0] != dae.observation_dim:
            raise InvalidInput(f"Q2_seq[{i}] has shape {q.shape}")


def flatten(dae: DiscreteDAE) -> StaticModel:
    """Stack the horizon into one static algebraic model.

    The stacked state is (x_0, ..., x_N). Equation block rows are the
    initial condition followed by the N transitions; the stacked
    disturbance is (x0g, f_0, ..., f_{N-1}).
    """
    n, m = dae.state_dim, dae.equation_dim
    N = dae.horizon
    rows = (N + 1) * m
    cols = (N + 1) * n
    F = np.zeros((rows, cols))
    F[:m, :n] = dae.F_seq[0]
    for k in range(N):
        r = (k + 1) * m
        F[r : r + m, k * n : (k + 1) * n] = -dae.C_seq[k]
        F[r : r + m, (k + 1) * n : (k + 2) * n] = dae.F_seq[k + 1]
    B = block_diag(dae.S, *dae.B_seq)
    H = block_diag(*dae.H_seq)
    return StaticModel(F=F, B=B, H=H)


def flatten_bounds(
    dae: DiscreteDAE, bounds: DAEEllipsoid, kind: str = KIND_APOSTERIORI
) -> StaticEllipsoid:
    """Block-diagonal weights matching the layout of :func:`flatten`."""
    _check_bounds(dae, bounds)
    return StaticEllipsoid(
        Q1=block_diag(bounds.Q0, *bounds.Q1_seq),
        Q2=block_diag(*bounds.Q2_seq),
        kind=kind,
    )


def stack_functional(dae: DiscreteDAE, ell_seq: Sequence) -> np.ndarray:
    n = dae.state_dim
    if len(ell_seq) != dae.horizon + 1:
        raise InvalidInput(
            f"expected {dae.horizon + 1} functional blocks, got {len(ell_seq)}"
        )
    blocks = []
    for k, ell in enumerate(ell_seq):
        v = np.asarray(ell, dtype=float).reshape(-1)
        if v.shape[0] != n:
            raise InvalidInput(f"ell_seq[{k}] has length {v.shape[0]}, expected {n}")
        blocks.append(v)
    return np.concatenate(blocks)


def stack_observations(dae: DiscreteDAE, y_seq: Sequence) -> np.ndarray:
    l = dae.observation_dim
    if len(y_seq) != dae.horizon + 1:
        raise InvalidInput(
            f"expected {dae.horizon + 1} observation vectors, got {len(y_seq)}"
        )
    blocks = []
    for k, y in enumerate(y_seq):
        v = np.asarray(y, dtype=float).reshape(-1)
        if v.shape[0] != l:
            raise InvalidInput(f"y_seq[{k}] has length {v.shape[0]}, expected {l}")
        blocks.append(v)
    return np.concatenate(blocks)


@dataclass(frozen=True)
class TrajectoryEstimate:
    """Chebyshev-center trajectory with the error radius of the functional."""

    feasible: bool
    sigma_hat: float
    estimate_value: float
    x_hat_seq: np.ndarray
    p_seq: Optional[np.ndarray] = None


def variational_estimate(
    dae: DiscreteDAE,
    bounds: DAEEllipsoid,
    ell_seq: Sequence,
    y_seq: Sequence,
    tol: float = DEFAULT_TOL,
) -> TrajectoryEstimate:
    """Estimate sum_k (ell_k, x_k) by flattening to the static solver."""
    _check_bounds(dae, bounds)
    model = flatten(dae)
    static_bounds = flatten_bounds(dae, bounds, KIND_APOSTERIORI)
    ell = stack_functional(dae, ell_seq)
    y = stack_observations(dae, y_seq)
    report = aposteriori_estimate(model, static_bounds, ell, y, tol)
    n, N = dae.state_dim, dae.horizon
    x_seq = report.x_hat.reshape(N + 1, n)
    p_seq = report.p.reshape(N + 1, n) if report.p is not None else None
    return TrajectoryEstimate(
        feasible=report.feasible,
        sigma_hat=report.sigma_hat,
        estimate_value=report.estimate_value,
        x_hat_seq=x_seq,
        p_seq=p_seq,
    )


def estimate_from_block(
    dae: DiscreteDAE,
    bounds: DAEEllipsoid,
    ell_seq: Sequence,
    y_seq: Sequence,
    tol: float = DEFAULT_TOL,
) -> TrajectoryEstimate:
    """Estimate sum_k (ell_k, x_k) from the stepwise coupled conditions.

    Assembles the block-bidiagonal first-order system directly: dynamics
    rows driven by weighted multipliers, and adjoint rows

        F_k' w_k - C_k' w_{k+1} = H_k' Q2_k (y_k - H_k x_k),   k < N
        F_N' w_N               = H_N' Q2_N (y_N - H_N x_N),

    plus the same system with right-hand side ell_k for the radius. No
    flattened model is formed; agreement with ``variational_estimate``
    is a structural identity the tests enforce.
    """
    _check_bounds(dae, bounds)
    n, m, N = dae.state_dim, dae.equation_dim, dae.horizon
    if len(ell_seq) != N + 1 or len(y_seq) != N + 1:
        raise InvalidInput("ell_seq and y_seq must both have horizon+1 entries")
    ells = [np.asarray(e, dtype=float).reshape(-1) for e in ell_seq]
    ys = [np.asarray(y, dtype=float).reshape(-1) for y in y_seq]
    for k, v in enumerate(ells):
        if v.shape[0] != n:
            raise InvalidInput(f"ell_seq[{k}] has length {v.shape[0]}, expected {n}")
    for k, v in enumerate(ys):
        if v.shape[0] != dae.observation_dim:
            raise InvalidInput(f"y_seq[{k}] has wrong length")

    dim = (N + 1) * (n + m)
    A = np.zeros((dim, dim))
    xoff = lambda k: k * n
    woff = lambda k: (N + 1) * n + k * m

    # Dynamics rows.
    A[0:m, xoff(0) : xoff(0) + n] = dae.F_seq[0]
    A[0:m, woff(0) : woff(0) + m] = -dae.S @ spd_solve(bounds.Q0, dae.S.T)
    for k in range(N):
        r0 = (k + 1) * m
        A[r0 : r0 + m, xoff(k + 1) : xoff(k + 1) + n] = dae.F_seq[k + 1]
        A[r0 : r0 + m, xoff(k) : xoff(k) + n] = -dae.C_seq[k]
        A[r0 : r0 + m, woff(k + 1) : woff(k + 1) + m] = -dae.B_seq[k] @ spd_solve(
            bounds.Q1_seq[k], dae.B_seq[k].T
        )

    # Adjoint rows, one group per state index.
    base = (N + 1) * m
    obs_gram = [
        dae.H_seq[k].T @ bounds.Q2_seq[k] @ dae.H_seq[k] for k in range(N + 1)
    ]
    for k in range(N + 1):
        r0 = base + k * n
        A[r0 : r0 + n, xoff(k) : xoff(k) + n] = obs_gram[k]
        A[r0 : r0 + n, woff(k) : woff(k) + m] = dae.F_seq[k].T
        if k < N:
            A[r0 : r0 + n, woff(k + 1) : woff(k + 1) + m] = -dae.C_seq[k].T

    # Right-hand sides: data-driven for the center, functional for the radius.
    rhs_data = np.zeros(dim)
    rhs_ell = np.zeros(dim)
    for k in range(N + 1):
        r0 = base + k * n
        rhs_data[r0 : r0 + n] = dae.H_seq[k].T @ (bounds.Q2_seq[k] @ ys[k])
        rhs_ell[r0 : r0 + n] = ells[k]

    ell_flat = np.concatenate(ells)
    y_flat = np.concatenate(ys)

    data_fit = solve_least_squares(A, rhs_data, tol)
    x_flat = data_fit.solution[: (N + 1) * n]
    x_seq = x_flat.reshape(N + 1, n)
    estimate = float(ell_flat @ x_flat)

    # Unused uncertainty budget; negative beyond rounding means bad data.
    q2y = np.concatenate([bounds.Q2_seq[k] @ ys[k] for k in range(N + 1)])
    hx = np.concatenate([dae.H_seq[k] @ x_seq[k] for k in range(N + 1)])
    slack = 1.0 - float((y_flat - hx) @ q2y)
    if slack < -1e-9:
        raise InconsistentData(
            f"observations are inconsistent with the disturbance bound "
            f"(energy overshoot {-slack:.3e})"
        )
    slack = max(slack, 0.0)

    radius_fit = solve_least_squares(A, rhs_ell, tol)
    scale = 1.0 + float(np.linalg.norm(ell_flat))
    if radius_fit.residual_norm > _RESIDUAL_TOL * scale:
        return TrajectoryEstimate(
            feasible=False,
            sigma_hat=math.inf,
            estimate_value=estimate,
            x_hat_seq=x_seq,
        )
    p_flat = radius_fit.solution[: (N + 1) * n]
    sigma_sq = max(float(ell_flat @ p_flat), 0.0)
    return TrajectoryEstimate(
        feasible=True,
        sigma_hat=math.sqrt(slack) * math.sqrt(sigma_sq),
        estimate_value=estimate,
        x_hat_seq=x_seq,
        p_seq=p_flat.reshape(N + 1, n),
    )
