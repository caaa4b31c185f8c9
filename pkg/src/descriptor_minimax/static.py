"""Worst-case optimal estimation for static algebraic models.

The model is an algebraic equation ``F x = B f`` observed through
``y = H x + g``, where the pair of disturbances ``(f, g)`` is only known
to lie in the ellipsoid ``(Q1 f, f) + (Q2 g, g) <= 1``. Neither F nor H
needs full rank; x is in general not determined by the data, and the
quantity of interest is a linear functional ``(ell, x)``.

Two estimates are provided.

* The a priori estimate is a linear readout ``u_hat' y`` chosen before
  data arrives so that the worst-case squared error over all model
  solutions and admissible disturbances is minimal. Its optimal value
  exists exactly when ``ell`` lies in the span of the rows of F and H
  combined; otherwise every readout has infinite worst-case error.
* The a posteriori estimate evaluates ``(ell, x_hat)`` at the Chebyshev
  center x_hat of the set of states consistent with one observed y. The
  attached error radius is exact, not a bound: the consistency set is an
  ellipsoid and x_hat is its center, so the reported radius is attained.

Both reduce to one saddle-point system. With ``G = B Q1^{-1} B'``,

    [ F      -G   ] [ a ]   [ 0 ]
    [ H'Q2H   F'  ] [ b ] = [ r ]

solved in the minimum-norm least-squares sense. With r = ell the
solution (p, z) gives the a priori readout u_hat = Q2 H p and squared
radius (ell, p). With r = H'Q2 y it gives (x_hat, p_hat) for the center.
The system is singular whenever the model leaves x underdetermined, but
every solution yields the same u_hat, (ell, p) and (ell, x_hat); only
those invariants are exposed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InconsistentData, InvalidInput, NumericalBreakdown
from .linalg import (
    DEFAULT_TOL,
    MEMBERSHIP_TOL,
    as_matrix,
    as_vector,
    null_basis,
    range_membership,
    require_spd,
    solve_least_squares,
    spd_solve,
    svd_subspaces,
    symmetrize,
)

KIND_APRIORI = "apriori"
KIND_APOSTERIORI = "aposteriori"

# A saddle-point residual above this (relative) level means the assembled
# system was inconsistent beyond representability issues.
_SOLVE_RESIDUAL_TOL = 1e-6

# Tolerated negative floor for quantities that are nonnegative in exact
# arithmetic, per unit of scale.
_NEGATIVE_FLOOR = 1e-9


@dataclass(frozen=True)
class StaticModel:
    """Algebraic model F x = B f with observation map H.

    Shapes: F is (m, n), B is (m, p), H is (l, n). No rank assumptions.
    """

    F: np.ndarray
    B: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "F", as_matrix(self.F, "F"))
        object.__setattr__(self, "B", as_matrix(self.B, "B"))
        object.__setattr__(self, "H", as_matrix(self.H, "H"))
        if self.B.shape[0] != self.F.shape[0]:
            raise InvalidInput(
                f"B has {self.B.shape[0]} rows but F has {self.F.shape[0]}"
            )
        if self.H.shape[1] != self.F.shape[1]:
            raise InvalidInput(
                f"H has {self.H.shape[1]} columns but F has {self.F.shape[1]}"
            )

    @property
    def state_dim(self) -> int:
        return self.F.shape[1]

    @property
    def equation_dim(self) -> int:
        return self.F.shape[0]

    @property
    def disturbance_dim(self) -> int:
        return self.B.shape[1]

    @property
    def observation_dim(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True)
class StaticEllipsoid:
    """Ellipsoidal disturbance bound (Q1 f, f) + (Q2 g, g) <= 1.

    ``kind`` records which estimate the bound is meant for; the estimators
    refuse a mismatched kind so configurations stay self-describing.
    """

    Q1: np.ndarray
    Q2: np.ndarray
    kind: str

    def __post_init__(self):
        object.__setattr__(self, "Q1", require_spd(self.Q1, "Q1"))
        object.__setattr__(self, "Q2", require_spd(self.Q2, "Q2"))
        if self.kind not in (KIND_APRIORI, KIND_APOSTERIORI):
            raise InvalidInput(
                f"kind must be '{KIND_APRIORI}' or '{KIND_APOSTERIORI}', got {self.kind!r}"
            )


def _check_pair(model: StaticModel, bounds: StaticEllipsoid) -> None:
    if bounds.Q1.shape[0] != model.disturbance_dim:
        raise InvalidInput(
            f"Q1 is {bounds.Q1.shape[0]}x{bounds.Q1.shape[0]} but the model has "
            f"{model.disturbance_dim} disturbance components"
        )
    if bounds.Q2.shape[0] != model.observation_dim:
        raise InvalidInput(
            f"Q2 is {bounds.Q2.shape[0]}x{bounds.Q2.shape[0]} but the model has "
            f"{model.observation_dim} observations"
        )


@dataclass(frozen=True)
class StaticEstimateReport:
    """Result of a static estimation call.

    ``sigma_hat`` is the worst-case error figure: for the a priori
    estimate it is the minimal worst-case mean-squared error itself
    (quadratic in ell), for the a posteriori estimate it is the attained
    half-width of the consistency interval for (ell, x). ``feasible`` is
    False exactly when that figure is infinite, in which case the
    optional fields that no longer make sense are None.
    """

    feasible: bool
    sigma_hat: float
    u_hat: Optional[np.ndarray] = None
    p: Optional[np.ndarray] = None
    z_hat: Optional[np.ndarray] = None
    x_hat: Optional[np.ndarray] = None
    estimate_value: Optional[float] = None


def representable(model: StaticModel, ell, tol: float = MEMBERSHIP_TOL) -> bool:
    """Whether (ell, x) admits a finite worst-case error.

    True iff ell lies in range([F' H']), i.e. some combination of model
    rows and observation rows reproduces the functional.
    """
    target = as_vector(ell, "ell")
    if target.shape[0] != model.state_dim:
        raise InvalidInput(
            f"ell has length {target.shape[0]}, expected {model.state_dim}"
        )
    stacked = np.hstack([model.F.T, model.H.T])
    return range_membership(stacked, target, tol).member


def _saddle_matrix(model: StaticModel, bounds: StaticEllipsoid) -> np.ndarray:
    gram = model.B @ spd_solve(bounds.Q1, model.B.T)
    observed = model.H.T @ bounds.Q2 @ model.H
    return np.block([[model.F, -gram], [observed, model.F.T]])


def _solve_saddle(model, bounds, rhs_bottom, tol):
    m, n = model.F.shape
    rhs = np.concatenate([np.zeros(m), rhs_bottom])
    fit = solve_least_squares(_saddle_matrix(model, bounds), rhs, tol)
    scale = 1.0 + float(np.linalg.norm(rhs_bottom))
    if fit.residual_norm > _SOLVE_RESIDUAL_TOL * scale:
        raise NumericalBreakdown(
            f"saddle system residual {fit.residual_norm:.3e} exceeds tolerance; "
            "the assembled system is inconsistent"
        )
    return fit.solution[:n], fit.solution[n:]


def apriori_estimate(
    model: StaticModel,
    bounds: StaticEllipsoid,
    ell,
    y=None,
    tol: float = DEFAULT_TOL,
) -> StaticEstimateReport:
    """Minimax linear readout for (ell, x) chosen before seeing data.

    Returns the readout vector u_hat, the worst-case mean-squared error
    (ell, p) as sigma_hat, and the saddle variables. When ell is not
    representable the report carries sigma_hat = inf and feasible=False.
    If ``y`` is given the scalar readout u_hat' y is filled in as
    estimate_value.
    """
    _check_pair(model, bounds)
    if bounds.kind != KIND_APRIORI:
        raise InvalidInput("apriori_estimate requires bounds with kind='apriori'")
    target = as_vector(ell, "ell")
    if target.shape[0] != model.state_dim:
        raise InvalidInput(
            f"ell has length {target.shape[0]}, expected {model.state_dim}"
        )
    if y is not None:
        y = as_vector(y, "y")
        if y.shape[0] != model.observation_dim:
            raise InvalidInput(
                f"y has length {y.shape[0]}, expected {model.observation_dim}"
            )
    if not representable(model, target):
        return StaticEstimateReport(feasible=False, sigma_hat=math.inf)

    p, z = _solve_saddle(model, bounds, target, tol)
    u_hat = bounds.Q2 @ (model.H @ p)
    sigma_sq = float(target @ p)
    scale = float(np.linalg.norm(target)) ** 2 + 1.0
    if sigma_sq < -_NEGATIVE_FLOOR * scale:
        raise NumericalBreakdown(
            f"worst-case mean-squared error came out negative ({sigma_sq:.3e})"
        )
    sigma_sq = max(sigma_sq, 0.0)
    estimate = float(u_hat @ y) if y is not None else None
    return StaticEstimateReport(
        feasible=True,
        sigma_hat=sigma_sq,
        u_hat=u_hat,
        p=p,
        z_hat=z,
        estimate_value=estimate,
    )


def aposteriori_estimate(
    model: StaticModel,
    bounds: StaticEllipsoid,
    ell,
    y,
    tol: float = DEFAULT_TOL,
) -> StaticEstimateReport:
    """Chebyshev-center estimate of (ell, x) given one observation vector.

    x_hat minimizes the total disturbance energy needed to explain y, so
    it is the center of the ellipsoid of consistent states. The radius
    for (ell, x) factors as

        sigma_hat = sqrt(1 - (y - H x_hat, Q2 y)) * sqrt((ell, p))

    with p from the a priori system: the first factor is the part of the
    uncertainty budget the data left unused, the second is the a priori
    radius of the functional. A first factor below zero (beyond rounding)
    means no admissible disturbance explains y at all, which raises
    InconsistentData.
    """
    _check_pair(model, bounds)
    if bounds.kind != KIND_APOSTERIORI:
        raise InvalidInput(
            "aposteriori_estimate requires bounds with kind='aposteriori'"
        )
    target = as_vector(ell, "ell")
    if target.shape[0] != model.state_dim:
        raise InvalidInput(
            f"ell has length {target.shape[0]}, expected {model.state_dim}"
        )
    y = as_vector(y, "y")
    if y.shape[0] != model.observation_dim:
        raise InvalidInput(
            f"y has length {y.shape[0]}, expected {model.observation_dim}"
        )

    x_hat, p_hat = _solve_saddle(model, bounds, model.H.T @ (bounds.Q2 @ y), tol)
    estimate = float(target @ x_hat)

    slack = 1.0 - float((y - model.H @ x_hat) @ (bounds.Q2 @ y))
    if slack < -_NEGATIVE_FLOOR:
        raise InconsistentData(
            f"observations are inconsistent with the disturbance bound "
            f"(energy overshoot {-slack:.3e})"
        )
    slack = max(slack, 0.0)

    if not representable(model, target):
        return StaticEstimateReport(
            feasible=False,
            sigma_hat=math.inf,
            x_hat=x_hat,
            z_hat=p_hat,
            estimate_value=estimate,
        )

    p, _ = _solve_saddle(model, bounds, target, tol)
    sigma_sq = max(float(target @ p), 0.0)
    return StaticEstimateReport(
        feasible=True,
        sigma_hat=math.sqrt(slack) * math.sqrt(sigma_sq),
        u_hat=bounds.Q2 @ (model.H @ p),
        p=p,
        x_hat=x_hat,
        z_hat=p_hat,
        estimate_value=estimate,
    )


def worst_case_error_of(
    model: StaticModel,
    bounds: StaticEllipsoid,
    ell,
    u,
    c: float = 0.0,
    tol: float = DEFAULT_TOL,
) -> float:
    """Exact worst-case squared error of an arbitrary affine readout u'y + c.

    The error of the readout against (ell, x) splits into a bias part,
    maximized over all (x, f) with F x = B f and (Q1 f, f) <= 1, and a
    noise part (Q2^{-1} u, u). Writing v = ell - H'u, the bias at a model
    solution is (v, x) - (B'w, f) for any w with F'w = v, plus c. The
    supremum is computed in closed form:

    * if v has a component in ker(F)' ... i.e. v is not in range(F'),
      states exist that move (v, x) freely and the value is +inf;
    * otherwise take w = F^{+'} v. Over f restricted by B f in range(F)
      (basis Z of ker(U_perp' B), U_perp spanning range(F)^perp) and by
      the energy bound, sup (B'w, f) = sqrt(g' (Z'Q1Z)^{-1} g) with
      g = Z'B'w.

    The rank decisions for the restriction matrix U_perp' B are anchored
    to ||B|| rather than to the product's own (possibly vanishing) scale.
    """
    _check_pair(model, bounds)
    target = as_vector(ell, "ell")
    u = as_vector(u, "u")
    if target.shape[0] != model.state_dim:
        raise InvalidInput(
            f"ell has length {target.shape[0]}, expected {model.state_dim}"
        )
    if u.shape[0] != model.observation_dim:
        raise InvalidInput(
            f"u has length {u.shape[0]}, expected {model.observation_dim}"
        )

    v = target - model.H.T @ u
    spaces = svd_subspaces(model.F, tol)

    # Bias escapes to infinity along ker F unless v kills those directions.
    if spaces.kernel_basis.shape[1] > 0:
        kernel_part = float(np.linalg.norm(spaces.kernel_basis.T @ v))
        if kernel_part > MEMBERSHIP_TOL * (1.0 + float(np.linalg.norm(v))):
            return math.inf

    w = np.linalg.pinv(model.F, rcond=tol).T @ v

    # Admissible disturbances must keep B f inside range(F).
    restriction = spaces.range_complement.T @ model.B
    if restriction.shape[0] == 0:
        basis = np.eye(model.disturbance_dim)
    else:
        b_scale = float(np.linalg.norm(model.B, 2)) if model.B.size else 0.0
        basis = null_basis(restriction, tol, scale=b_scale)

    if basis.shape[1] == 0:
        sup_bias = 0.0
    else:
        g = basis.T @ (model.B.T @ w)
        reduced = symmetrize(basis.T @ bounds.Q1 @ basis)
        sup_bias = math.sqrt(max(float(g @ spd_solve(reduced, g)), 0.0))

    noise = float(u @ spd_solve(bounds.Q2, u))
    return (sup_bias + abs(c)) ** 2 + noise
