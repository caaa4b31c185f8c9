"""Shared linear-algebra helpers.

Everything here wraps numpy/scipy routines behind the conventions the
estimators rely on: a single truncation tolerance, minimum-norm least
squares as the default solver, and explicit result types instead of
bare tuples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import InvalidBounds, InvalidInput

# Relative singular-value cutoff used for every rank decision.
DEFAULT_TOL = 1e-10

# Relative residual cutoff for range-membership tests.
MEMBERSHIP_TOL = 1e-8


def as_matrix(value, name: str = "matrix") -> np.ndarray:
    """Validate and return a finite 2-D float array."""
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{name} is not numeric: {exc}") from exc
    if a.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return a


def as_vector(value, name: str = "vector") -> np.ndarray:
    """Validate and return a finite 1-D float array."""
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{name} is not numeric: {exc}") from exc
    if v.ndim != 1:
        raise InvalidInput(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return v


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def require_spd(q, name: str = "weight") -> np.ndarray:
    """Return ``q`` as an array after checking symmetric positive definiteness."""
    a = as_matrix(q, name)
    if a.shape[0] != a.shape[1]:
        raise InvalidBounds(f"{name} must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(a).max())):
        raise InvalidBounds(f"{name} is not symmetric")
    try:
        np.linalg.cholesky(symmetrize(a))
    except np.linalg.LinAlgError as exc:
        raise InvalidBounds(f"{name} is not positive definite") from exc
    return a


def spd_solve(q: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve q @ x = b for symmetric positive definite q."""
    c, low = scipy.linalg.cho_factor(symmetrize(q))
    return scipy.linalg.cho_solve((c, low), b)


def spd_inverse(q: np.ndarray) -> np.ndarray:
    return symmetrize(spd_solve(q, np.eye(q.shape[0])))


def pseudo_inverse(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse with singular values below tol*s_max dropped."""
    m = as_matrix(a, "pseudo_inverse argument")
    if m.size == 0:
        return m.T.copy()
    return np.linalg.pinv(m, rcond=tol)


@dataclass(frozen=True)
class LinearSolveResult:
    """Minimum-norm least-squares solution together with solve diagnostics."""

    solution: np.ndarray
    residual_norm: float
    rank: int


def solve_least_squares(a, b, tol: float = DEFAULT_TOL) -> LinearSolveResult:
    """Minimum-norm least-squares solution of a @ x = b.

    The residual reported is ||a @ x - b||_2 recomputed from the solution,
    not the one numpy returns, so it is meaningful in rank-deficient cases.
    """
    am = as_matrix(a, "coefficient matrix")
    bv = as_vector(b, "right-hand side")
    if am.shape[0] != bv.shape[0]:
        raise InvalidInput(
            f"incompatible solve: matrix has {am.shape[0]} rows, rhs has {bv.shape[0]}"
        )
    x, _, rank, _ = np.linalg.lstsq(am, bv, rcond=tol)
    residual = float(np.linalg.norm(am @ x - bv))
    return LinearSolveResult(solution=x, residual_norm=residual, rank=int(rank))


@dataclass(frozen=True)
class RangeMembership:
    """Outcome of testing whether a vector lies in the span of given columns."""

    member: bool
    coefficients: Optional[np.ndarray]
    residual: float


def range_membership(columns, target, tol: float = MEMBERSHIP_TOL) -> RangeMembership:
    """Decide whether ``target`` is in the column span of ``columns``.

    Membership holds when the least-squares residual is at most
    tol * (1 + ||target||), which keeps the test meaningful for both
    tiny and large targets.
    """
    a = as_matrix(columns, "columns")
    t = as_vector(target, "target")
    if a.shape[0] != t.shape[0]:
        raise InvalidInput("columns and target have incompatible heights")
    if a.shape[1] == 0:
        residual = float(np.linalg.norm(t))
        ok = residual <= tol * (1.0 + residual)
        return RangeMembership(ok, np.zeros(0) if ok else None, residual)
    fit = solve_least_squares(a, t)
    threshold = tol * (1.0 + float(np.linalg.norm(t)))
    if fit.residual_norm <= threshold:
        return RangeMembership(True, fit.solution, fit.residual_norm)
    return RangeMembership(False, None, fit.residual_norm)


@dataclass(frozen=True)
class SvdSubspaces:
    """Orthonormal bases of the four fundamental subspaces of a matrix."""

    range_basis: np.ndarray        # columns span range(a)
    range_complement: np.ndarray   # columns span range(a)^perp
    row_basis: np.ndarray          # columns span range(a')
    kernel_basis: np.ndarray       # columns span ker(a)
    rank: int


def svd_subspaces(a, tol: float = DEFAULT_TOL) -> SvdSubspaces:
    """SVD-based bases with rank decided against tol * largest singular value."""
    m = as_matrix(a, "matrix")
    if m.size == 0:
        rank = 0
        u = np.eye(m.shape[0])
        v = np.eye(m.shape[1])
        return SvdSubspaces(u[:, :0], u, v[:, :0], v, 0)
    u, s, vt = np.linalg.svd(m)
    cutoff = tol * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return SvdSubspaces(
        range_basis=u[:, :rank],
        range_complement=u[:, rank:],
        row_basis=vt[:rank].T,
        kernel_basis=vt[rank:].T,
        rank=rank,
    )


def null_basis(a, tol: float = DEFAULT_TOL, scale: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis of ker(a), thresholding against an external scale.

    When ``a`` is itself a product of larger matrices, its entries can be
    pure rounding dust; thresholding against its own largest singular value
    would then invent spurious rank. Passing the norm of the parent problem
    as ``scale`` keeps the rank decision anchored to the data.
    """
    m = as_matrix(a, "matrix")
    n = m.shape[1]
    if m.shape[0] == 0 or n == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(m)
    anchor = max(s[0] if s.size else 0.0, scale if scale is not None else 0.0)
    rank = int(np.sum(s > tol * anchor)) if anchor > 0.0 else 0
    return vt[rank:].T


def block_diag(*blocks: np.ndarray) -> np.ndarray:
    if not blocks:
        return np.zeros((0, 0))
    return scipy.linalg.block_diag(*blocks)
