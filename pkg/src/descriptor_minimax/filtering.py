"""Recursive information filter for discrete descriptor systems.

Under a rank precondition the Chebyshev-center trajectory of
:func:`descriptor_minimax.discrete.variational_estimate` can be produced
one step at a time. The filter propagates the pair (x_hat_k, P_k), where
P_k is the k-th diagonal block of the inverse of the full-horizon
information matrix, so terminal functionals satisfy

    sigma_hat(ell)^2 = ell' P_N ell        (a priori radius at step N)

and x_hat_k equals the k-th block of the batch center restricted to the
data seen so far.

The recursion assumes each transition injects its process disturbance
directly, B_k = I. A square invertible B_k (and S) is reduced to that
case by re-weighting: f' = B f carries energy (Q' f', f') with
Q' = B^{-T} Q1 B^{-1}, and the initial row likewise absorbs S into Q0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .discrete import DAEEllipsoid, DiscreteDAE
from .errors import InvalidInput, NumericalBreakdown, RankDeficient
from .linalg import DEFAULT_TOL, as_vector, spd_solve, symmetrize

# Inner matrices are rejected as numerically singular below this
# smallest-eigenvalue level (relative to unit scale).
BREAKDOWN_EIG_FLOOR = 1e-14


@dataclass(frozen=True)
class FilterState:
    """Filtered center and uncertainty shape after absorbing y_0 .. y_k."""

    k: int
    x_hat: np.ndarray
    P: np.ndarray


@dataclass(frozen=True)
class FilterRunResult:
    estimate_value: float
    final: FilterState
    x_hat_seq: np.ndarray


def rank_precondition(F_k, H_k, tol: float = DEFAULT_TOL) -> bool:
    """Whether the stacked matrix [F_k; H_k] has full column rank.

    This is what makes each filtered information matrix invertible, so
    the recursion can hand a finite P_k to the next step.
    """
    stacked = np.vstack([np.asarray(F_k, dtype=float), np.asarray(H_k, dtype=float)])
    if stacked.shape[0] < stacked.shape[1]:
        return False
    s = np.linalg.svd(stacked, compute_uv=False)
    if s.size == 0:
        return stacked.shape[1] == 0
    return bool(s[-1] > tol * s[0])


def _effective_initial_weight(dae: DiscreteDAE, bounds: DAEEllipsoid) -> np.ndarray:
    """Fold S into the initial weight: F_0 x_0 = v with (Q0' v, v) energy."""
    m = dae.equation_dim
    if np.allclose(dae.S, np.eye(m)):
        return bounds.Q0
    if np.linalg.matrix_rank(dae.S, tol=DEFAULT_TOL * np.linalg.norm(dae.S, 2)) < m:
        raise InvalidInput(
            "the recursive filter needs S identity or square invertible"
        )
    gram = dae.S @ spd_solve(bounds.Q0, dae.S.T)
    return symmetrize(np.linalg.inv(gram))


def _effective_process_weight(
    dae: DiscreteDAE, bounds: DAEEllipsoid, k: int
) -> np.ndarray:
    """Fold B_k into the weight of transition k the same way."""
    m = dae.equation_dim
    B = dae.B_seq[k]
    if B.shape == (m, m) and np.allclose(B, np.eye(m)):
        return bounds.Q1_seq[k]
    if B.shape != (m, m):
        raise InvalidInput(
            "the recursive filter needs each B_k identity or square invertible"
        )
    if np.linalg.matrix_rank(B, tol=DEFAULT_TOL * np.linalg.norm(B, 2)) < m:
        raise InvalidInput(
            "the recursive filter needs each B_k identity or square invertible"
        )
    gram = B @ spd_solve(bounds.Q1_seq[k], B.T)
    return symmetrize(np.linalg.inv(gram))


def _invert_information(info: np.ndarray, k: int) -> np.ndarray:
    info = symmetrize(info)
    eigs = np.linalg.eigvalsh(info)
    scale = max(float(eigs[-1]), 1.0)
    if eigs[0] <= DEFAULT_TOL * scale:
        raise RankDeficient(
            f"information matrix at step {k} is singular; the rank "
            f"precondition on [F_k; H_k] fails"
        )
    return symmetrize(np.linalg.inv(info))


def filter_init(
    dae: DiscreteDAE, bounds: DAEEllipsoid, y0, tol: float = DEFAULT_TOL
) -> FilterState:
    """State after absorbing the initial constraint and the first observation.

    P_0 = (F_0' Q0 F_0 + H_0' Q2_0 H_0)^{-1}
    x_hat_0 = P_0 H_0' Q2_0 y_0
    """
    y0 = as_vector(y0, "y0")
    if y0.shape[0] != dae.observation_dim:
        raise InvalidInput(f"y0 has length {y0.shape[0]}, expected {dae.observation_dim}")
    if not rank_precondition(dae.F_seq[0], dae.H_seq[0], tol):
        raise RankDeficient("[F_0; H_0] does not have full column rank")
    q0 = _effective_initial_weight(dae, bounds)
    F0, H0 = dae.F_seq[0], dae.H_seq[0]
    info = F0.T @ q0 @ F0 + H0.T @ bounds.Q2_seq[0] @ H0
    P = _invert_information(info, 0)
    x = P @ (H0.T @ (bounds.Q2_seq[0] @ y0))
    return FilterState(k=0, x_hat=x, P=P)


def filter_step(
    state: FilterState,
    dae: DiscreteDAE,
    bounds: DAEEllipsoid,
    y_next,
    tol: float = DEFAULT_TOL,
) -> FilterState:
    """Advance the filter by one transition and one observation.

    With D = (Q1_{k-1}^{-1} + C_{k-1} P_{k-1} C_{k-1}')^{-1},

        P_k     = (F_k' D F_k + H_k' Q2_k H_k)^{-1}
        x_hat_k = P_k (F_k' D C_{k-1} x_hat_{k-1} + H_k' Q2_k y_k).

    D blends the fresh process uncertainty with the propagated shape of
    the previous estimate; the outer inversion is the usual information
    update against the new observation.
    """
    k = state.k + 1
    if k > dae.horizon:
        raise InvalidInput(f"step {k} exceeds horizon {dae.horizon}")
    y = as_vector(y_next, "y_next")
    if y.shape[0] != dae.observation_dim:
        raise InvalidInput("y_next has the wrong length")
    if not rank_precondition(dae.F_seq[k], dae.H_seq[k], tol):
        raise RankDeficient(f"[F_{k}; H_{k}] does not have full column rank")

    q1 = _effective_process_weight(dae, bounds, k - 1)
    C_prev = dae.C_seq[k - 1]
    inner = symmetrize(spd_solve(q1, np.eye(q1.shape[0])) + C_prev @ state.P @ C_prev.T)
    inner_eigs = np.linalg.eigvalsh(inner)
    if inner_eigs[0] < BREAKDOWN_EIG_FLOOR:
        raise NumericalBreakdown(
            f"propagated covariance at step {k} has eigenvalue "
            f"{inner_eigs[0]:.3e} below {BREAKDOWN_EIG_FLOOR}"
        )
    D = symmetrize(np.linalg.inv(inner))

    F_k, H_k = dae.F_seq[k], dae.H_seq[k]
    info = F_k.T @ D @ F_k + H_k.T @ bounds.Q2_seq[k] @ H_k
    P = _invert_information(info, k)
    x = P @ (F_k.T @ (D @ (C_prev @ state.x_hat)) + H_k.T @ (bounds.Q2_seq[k] @ y))
    return FilterState(k=k, x_hat=x, P=P)


def filter_run(
    dae: DiscreteDAE,
    bounds: DAEEllipsoid,
    y_seq: Sequence,
    ell,
    tol: float = DEFAULT_TOL,
) -> FilterRunResult:
    """Run the filter across the horizon and read out (ell, x_N).

    Returns the terminal readout, the final state (whose P gives the
    radius ell' P_N ell), and the filtered centers at every step. Note
    the intermediate x_hat_k use only y_0 .. y_k; they match the batch
    center of the truncated problem, not of the full horizon.
    """
    if len(y_seq) != dae.horizon + 1:
        raise InvalidInput(
            f"expected {dae.horizon + 1} observation vectors, got {len(y_seq)}"
        )
    ell = as_vector(ell, "ell")
    if ell.shape[0] != dae.state_dim:
        raise InvalidInput(f"ell has length {ell.shape[0]}, expected {dae.state_dim}")
    state = filter_init(dae, bounds, y_seq[0], tol)
    history: List[FilterState] = [state]
    for k in range(1, dae.horizon + 1):
        state = filter_step(state, dae, bounds, y_seq[k], tol)
        history.append(state)
    x_seq = np.stack([s.x_hat for s in history])
    return FilterRunResult(
        estimate_value=float(ell @ state.x_hat),
        final=state,
        x_hat_seq=x_seq,
    )
