"""Estimation for continuous-time descriptor systems d/dt(F x) = C(t) x + f.

The state x(t) solves the possibly-singular linear DAE

    d/dt (F x)(t) = C(t) x(t) + f(t),     t in [t_start, t_end],
    F x(t_start)  = x0g,

observed through y(t) = H(t) x(t) + g(t), with the joint bound

    (Q0 x0g, x0g) + int (Q1(t) f, f) dt + int (Q2(t) g, g) dt <= 1.

Everything is computed by implicit-Euler time discretization onto the
discrete-horizon machinery of :mod:`.discrete`: first order, but valid
for singular F since the step matrix F - h C(t) is generically regular.
Four entry points:

* ``discretize``           the implicit-Euler reduction itself,
* ``apriori_estimate_continuous``  worst-case optimal readout of the
  integral functional int (ell(t), x(t)) dt, via the flattened static
  solver or via direct assembly of the discretized two-point boundary
  value problem (both paths kept, they must agree),
* ``tikhonov_approximate`` regularized solves for alpha -> 0, whose
  residual decay diagnoses whether the functional is representable,
* ``riccati_filter``       forward integration of the descriptor Riccati
  equation for endpoint functionals (ell_0, x(t_end)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import scipy.linalg

from .discrete import DAEEllipsoid, DiscreteDAE, flatten, flatten_bounds
from .errors import (
    InvalidGrid,
    InvalidInput,
    NotRepresentable,
    RankDeficient,
    RiccatiBlowup,
    SolveFailure,
)
from .linalg import (
    DEFAULT_TOL,
    as_matrix,
    as_vector,
    pseudo_inverse,
    range_membership,
    require_spd,
    solve_least_squares,
    spd_inverse,
    spd_solve,
    symmetrize,
)
from .static import KIND_APRIORI, StaticModel, apriori_estimate, representable

# Gain norms above this level are treated as finite escape.
RICCATI_NORM_CAP = 1e12

# Relative residual above which the assembled BVP counts as inconsistent.
_BVP_RESIDUAL_TOL = 1e-8


# ---------------------------------------------------------------------------
# Time-indexed coefficients


class ConstantFunction:
    """Time function that always returns the same array."""

    def __init__(self, value):
        self.value = np.asarray(value, dtype=float)

    def __call__(self, t: float) -> np.ndarray:
        return self.value


class TableFunction:
    """Piecewise-constant lookup: value j applies on [times[j], times[j+1])."""

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        self.values = [np.asarray(v, dtype=float) for v in values]
        if self.times.ndim != 1 or len(self.values) != self.times.shape[0]:
            raise InvalidInput("table function needs one value per breakpoint")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidInput("table breakpoints must be strictly increasing")

    def __call__(self, t: float) -> np.ndarray:
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        idx = min(max(idx, 0), len(self.values) - 1)
        return self.values[idx]


class PolynomialFunction:
    """Matrix polynomial sum_j coefficients[j] * t**j."""

    def __init__(self, coefficients):
        self.coefficients = [np.asarray(c, dtype=float) for c in coefficients]
        if not self.coefficients:
            raise InvalidInput("polynomial function needs at least one coefficient")
        shape = self.coefficients[0].shape
        for c in self.coefficients:
            if c.shape != shape:
                raise InvalidInput("polynomial coefficients must share one shape")

    def __call__(self, t: float) -> np.ndarray:
        out = np.zeros_like(self.coefficients[0])
        power = 1.0
        for c in self.coefficients:
            out = out + power * c
            power *= t
        return out


TimeFunction = Callable[[float], np.ndarray]


def as_time_function(obj, name: str = "coefficient") -> TimeFunction:
    """Accept a callable, or promote a constant array to one."""
    if callable(obj):
        return obj
    try:
        return ConstantFunction(np.asarray(obj, dtype=float))
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{name} is neither callable nor array-like") from exc


# ---------------------------------------------------------------------------
# Grid and system containers


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid with ``steps`` intervals between ``start`` and ``end``."""

    start: float
    end: float
    steps: int

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise InvalidGrid("grid endpoints must be finite")
        if self.end <= self.start:
            raise InvalidGrid(f"grid end {self.end} must exceed start {self.start}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidGrid(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def h(self) -> float:
        return (self.end - self.start) / self.steps

    def nodes(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.steps + 1)

    @classmethod
    def from_nodes(cls, nodes) -> "TimeGrid":
        t = np.asarray(nodes, dtype=float)
        if t.ndim != 1 or t.shape[0] < 2:
            raise InvalidGrid("need at least two nodes")
        gaps = np.diff(t)
        if np.any(gaps <= 0):
            raise InvalidGrid("nodes must be strictly increasing")
        if gaps.max() - gaps.min() > 1e-12 * max(abs(t[-1] - t[0]), 1.0):
            raise InvalidGrid("nodes are not uniformly spaced")
        return cls(start=float(t[0]), end=float(t[-1]), steps=t.shape[0] - 1)


@dataclass(frozen=True)
class ContinuousDAE:
    """Constant-F descriptor system with time-varying C(t) and H(t)."""

    F: np.ndarray
    C: TimeFunction
    H: TimeFunction
    t_start: float
    t_end: float

    def __post_init__(self):
        object.__setattr__(self, "F", as_matrix(self.F, "F"))
        object.__setattr__(self, "C", as_time_function(self.C, "C"))
        object.__setattr__(self, "H", as_time_function(self.H, "H"))
        if self.t_end <= self.t_start:
            raise InvalidInput("t_end must exceed t_start")
        m, n = self.F.shape
        c0 = np.asarray(self.C(self.t_start), dtype=float)
        if c0.shape != (m, n):
            raise InvalidInput(f"C(t) has shape {c0.shape}, expected {(m, n)}")
        h0 = np.asarray(self.H(self.t_start), dtype=float)
        if h0.ndim != 2 or h0.shape[1] != n:
            raise InvalidInput(f"H(t) must have {n} columns, got shape {h0.shape}")

    @property
    def state_dim(self) -> int:
        return self.F.shape[1]

    @property
    def equation_dim(self) -> int:
        return self.F.shape[0]

    @property
    def observation_dim(self) -> int:
        return np.asarray(self.H(self.t_start)).shape[0]


@dataclass(frozen=True)
class ContinuousEllipsoid:
    """Weights Q0 (initial), Q1(t) (process), Q2(t) (observation)."""

    Q0: np.ndarray
    Q1: TimeFunction
    Q2: TimeFunction

    def __post_init__(self):
        object.__setattr__(self, "Q0", require_spd(self.Q0, "Q0"))
        object.__setattr__(self, "Q1", as_time_function(self.Q1, "Q1"))
        object.__setattr__(self, "Q2", as_time_function(self.Q2, "Q2"))


def _check_grid(system: ContinuousDAE, grid: TimeGrid) -> None:
    span = system.t_end - system.t_start
    if (
        abs(grid.start - system.t_start) > 1e-9 * span
        or abs(grid.end - system.t_end) > 1e-9 * span
    ):
        raise InvalidGrid(
            f"grid [{grid.start}, {grid.end}] must span the system horizon "
            f"[{system.t_start}, {system.t_end}]"
        )


# ---------------------------------------------------------------------------
# Implicit-Euler reduction


def discretize(
    system: ContinuousDAE, bounds: ContinuousEllipsoid, grid: TimeGrid
) -> tuple:
    """Implicit-Euler reduction to a discrete descriptor horizon.

    Differencing d/dt(Fx) = C x + f at t_{k+1} gives

        (F - h C(t_{k+1})) x_{k+1} = F x_k + h f(t_{k+1}),

    so transition k carries F_{k+1} = F - h C(t_{k+1}), C_k = F and
    B_k = h I. Energies are Riemann sums of the integrals: the process
    disturbance h f(t_{k+1}) enters with weight h Q1(t_{k+1}) because
    int (Q1 f, f) dt ~ sum h (Q1(t_{k+1}) f_{k+1}, f_{k+1}); observation
    weights are h Q2(t_k) at every node. The initial row F x_0 = x0g
    keeps its exact weight Q0.
    """
    _check_grid(system, grid)
    h = grid.h
    ts = grid.nodes()
    m = system.equation_dim
    M = grid.steps

    F_seq = [system.F]
    C_seq = []
    B_seq = []
    for k in range(M):
        t_next = ts[k + 1]
        F_seq.append(system.F - h * np.asarray(system.C(t_next), dtype=float))
        C_seq.append(system.F)
        B_seq.append(h * np.eye(m))
    H_seq = [np.asarray(system.H(t), dtype=float) for t in ts]

    Q1_seq = [h * require_spd(bounds.Q1(ts[k + 1]), "Q1(t)") for k in range(M)]
    Q2_seq = [h * require_spd(bounds.Q2(t), "Q2(t)") for t in ts]

    dae = DiscreteDAE(
        F_seq=tuple(F_seq),
        C_seq=tuple(C_seq),
        B_seq=tuple(B_seq),
        S=np.eye(m),
        H_seq=tuple(H_seq),
    )
    dbounds = DAEEllipsoid(Q0=bounds.Q0, Q1_seq=tuple(Q1_seq), Q2_seq=tuple(Q2_seq))
    return dae, dbounds


def _sampled_functional(system: ContinuousDAE, ell, grid: TimeGrid) -> np.ndarray:
    """Nodes of ell(t), shape (steps+1, n)."""
    fn = as_time_function(ell, "ell")
    n = system.state_dim
    out = np.zeros((grid.steps + 1, n))
    for k, t in enumerate(grid.nodes()):
        v = np.asarray(fn(t), dtype=float).reshape(-1)
        if v.shape[0] != n:
            raise InvalidInput(f"ell(t) has length {v.shape[0]}, expected {n}")
        out[k] = v
    return out


def _check_samples(system: ContinuousDAE, y_samples, grid: TimeGrid) -> np.ndarray:
    y = np.asarray(y_samples, dtype=float)
    expected = (grid.steps + 1, system.observation_dim)
    if y.shape != expected:
        raise InvalidInput(f"y_samples must have shape {expected}, got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InvalidInput("y_samples contains non-finite entries")
    return y


# ---------------------------------------------------------------------------
# A priori estimation of integral functionals


@dataclass(frozen=True)
class ContinuousAprioriResult:
    """Readout density u_hat(t) at the nodes plus the error radius.

    ``sigma_hat`` is the worst-case mean-squared error of the readout
    int (u_hat(t), y(t)) dt against int (ell(t), x(t)) dt; infinite with
    feasible=False when the functional is not representable.
    """

    feasible: bool
    sigma_hat: float
    u_hat_samples: Optional[np.ndarray] = None
    p_samples: Optional[np.ndarray] = None
    estimate_value: Optional[float] = None
    grid: Optional[TimeGrid] = None


def _bvp_system(system, bounds, grid):
    """Discretized two-point boundary value problem, assembled nodewise.

    Unknowns (p_0..p_M, z_0..z_M). Forward rows discretize
    d/dt(F p) = C p + Q1^{-1} z with F p(a) = Q0^{-1} z_0 (z_0 soaks up
    both boundary terms, since range(F) plus its complement is all of
    R^m); adjoint rows discretize -d/dt(F'z) - C'z + H'Q2H p = ell with
    terminal condition F'z = 0 beyond the horizon.
    """
    h = grid.h
    ts = grid.nodes()
    M = grid.steps
    m, n = system.F.shape
    F = system.F
    dim = (M + 1) * (n + m)
    A = np.zeros((dim, dim))
    poff = lambda k: k * n
    zoff = lambda k: (M + 1) * n + k * m

    A[0:m, poff(0) : poff(0) + n] = F
    A[0:m, zoff(0) : zoff(0) + m] = -spd_inverse(bounds.Q0)
    for k in range(M):
        t_next = ts[k + 1]
        r0 = (k + 1) * m
        step = F - h * np.asarray(system.C(t_next), dtype=float)
        A[r0 : r0 + m, poff(k + 1) : poff(k + 1) + n] = step
        A[r0 : r0 + m, poff(k) : poff(k) + n] = -F
        A[r0 : r0 + m, zoff(k + 1) : zoff(k + 1) + m] = -h * spd_inverse(
            require_spd(bounds.Q1(t_next), "Q1(t)")
        )

    base = (M + 1) * m
    for k in range(M + 1):
        t = ts[k]
        r0 = base + k * n
        Hk = np.asarray(system.H(t), dtype=float)
        W = Hk.T @ require_spd(bounds.Q2(t), "Q2(t)") @ Hk
        step_T = (F - h * np.asarray(system.C(t), dtype=float)).T if k > 0 else F.T
        A[r0 : r0 + n, poff(k) : poff(k) + n] = W
        A[r0 : r0 + n, zoff(k) : zoff(k) + m] = step_T / h
        if k < M:
            A[r0 : r0 + n, zoff(k + 1) : zoff(k + 1) + m] = -F.T / h
    return A


def apriori_estimate_continuous(
    system: ContinuousDAE,
    bounds: ContinuousEllipsoid,
    ell,
    grid: TimeGrid,
    y_samples=None,
    method: str = "flattened",
    tol: float = DEFAULT_TOL,
) -> ContinuousAprioriResult:
    """Worst-case optimal readout of int (ell(t), x(t)) dt.

    ``method='flattened'`` discretizes, stacks the horizon into one
    static model and calls the static minimax solver. ``method='bvp'``
    assembles the discretized optimality boundary value problem directly
    from the continuous coefficients. Both produce the node values of
    the readout density u_hat(t) = Q2(t) H(t) p(t) and the radius
    sigma_hat = sum_k h (ell(t_k), p_k); they must agree to solver
    precision, which the test suite enforces on random systems.
    """
    _check_grid(system, grid)
    if method not in ("flattened", "bvp"):
        raise InvalidInput(f"unknown method {method!r}")
    h = grid.h
    ts = grid.nodes()
    M = grid.steps
    n = system.state_dim
    ell_nodes = _sampled_functional(system, ell, grid)
    ell_flat = (h * ell_nodes).reshape(-1)
    if y_samples is not None:
        y_samples = _check_samples(system, y_samples, grid)

    if method == "flattened":
        dae, dbounds = discretize(system, bounds, grid)
        model = flatten(dae)
        static_bounds = flatten_bounds(dae, dbounds, KIND_APRIORI)
        report = apriori_estimate(model, static_bounds, ell_flat, tol=tol)
        if not report.feasible:
            return ContinuousAprioriResult(
                feasible=False, sigma_hat=math.inf, grid=grid
            )
        p_nodes = report.p.reshape(M + 1, n)
    else:
        A = _bvp_system(system, bounds, grid)
        rhs = np.zeros(A.shape[0])
        rhs[(M + 1) * system.equation_dim :] = ell_nodes.reshape(-1)
        fit = solve_least_squares(A, rhs, tol)
        scale = 1.0 + float(np.linalg.norm(ell_nodes))
        if fit.residual_norm > _BVP_RESIDUAL_TOL * scale:
            return ContinuousAprioriResult(
                feasible=False, sigma_hat=math.inf, grid=grid
            )
        p_nodes = fit.solution[: (M + 1) * n].reshape(M + 1, n)

    u_nodes = np.zeros((M + 1, system.observation_dim))
    for k, t in enumerate(ts):
        Hk = np.asarray(system.H(t), dtype=float)
        u_nodes[k] = np.asarray(bounds.Q2(t), dtype=float) @ (Hk @ p_nodes[k])
    sigma = float(ell_flat @ p_nodes.reshape(-1))
    sigma = max(sigma, 0.0)
    estimate = None
    if y_samples is not None:
        estimate = float(np.sum(h * np.einsum("kj,kj->k", u_nodes, y_samples)))
    return ContinuousAprioriResult(
        feasible=True,
        sigma_hat=sigma,
        u_hat_samples=u_nodes,
        p_samples=p_nodes,
        estimate_value=estimate,
        grid=grid,
    )


# ---------------------------------------------------------------------------
# Tikhonov regularization


@dataclass(frozen=True)
class TikhonovResult:
    """Regularized readouts per alpha plus the convergence diagnostics.

    ``residual_seq[j]`` pairs alphas[j] and alphas[j+1]: the Cauchy
    difference of the readouts in the discrete L2 norm plus the
    dual-feasibility defect at alphas[j+1]. The defect term is what
    keeps the diagnostic honest when H annihilates everything: readouts
    can be identically zero and perfectly Cauchy while the functional is
    not representable, but the defect then stays bounded away from 0.
    """

    alphas: tuple
    u_samples_seq: tuple
    cauchy_seq: np.ndarray
    constraint_residual_seq: np.ndarray
    residual_seq: np.ndarray
    grid: TimeGrid


def tikhonov_approximate(
    system: ContinuousDAE,
    bounds: ContinuousEllipsoid,
    ell,
    grid: TimeGrid,
    alphas: Sequence,
    tol: float = DEFAULT_TOL,
) -> TikhonovResult:
    """Regularized approximations of the a priori readout for alpha -> 0.

    For each alpha the singular optimality system gains alpha*h on the
    diagonal of its primal block, making it uniquely solvable. When the
    functional is representable the readouts converge to the minimax
    readout and residual_seq decays; otherwise residual_seq stays
    bounded away from zero.
    """
    _check_grid(system, grid)
    alphas = tuple(float(a) for a in alphas)
    if not alphas:
        raise InvalidInput("alphas must be non-empty")
    if any(a <= 0 for a in alphas):
        raise InvalidInput("alphas must be positive")
    if any(b >= a for a, b in zip(alphas, alphas[1:])) and len(alphas) > 1:
        raise InvalidInput("alphas must be strictly decreasing")

    h = grid.h
    ts = grid.nodes()
    M = grid.steps
    n = system.state_dim

    dae, dbounds = discretize(system, bounds, grid)
    model = flatten(dae)
    static_bounds = flatten_bounds(dae, dbounds, KIND_APRIORI)
    gram = model.B @ spd_solve(static_bounds.Q1, model.B.T)
    observed = model.H.T @ static_bounds.Q2 @ model.H
    ell_nodes = _sampled_functional(system, ell, grid)
    ell_flat = (h * ell_nodes).reshape(-1)
    dim = model.F.shape[1]
    rhs = np.concatenate([np.zeros(model.F.shape[0]), ell_flat])

    u_list: List[np.ndarray] = []
    constraint = np.zeros(len(alphas))
    for j, alpha in enumerate(alphas):
        A = np.block(
            [[model.F, -gram], [observed + alpha * h * np.eye(dim), model.F.T]]
        )
        fit = solve_least_squares(A, rhs, tol)
        if fit.residual_norm > 1e-6 * (1.0 + float(np.linalg.norm(ell_flat))):
            raise SolveFailure(
                f"regularized system at alpha={alpha} is numerically singular"
            )
        p_nodes = fit.solution[:dim].reshape(M + 1, n)
        u_nodes = np.zeros((M + 1, system.observation_dim))
        for k, t in enumerate(ts):
            Hk = np.asarray(system.H(t), dtype=float)
            u_nodes[k] = np.asarray(bounds.Q2(t), dtype=float) @ (Hk @ p_nodes[k])
        u_list.append(u_nodes)
        # Dual-feasibility defect alpha*h*p per node, in the integral norm.
        defect = alpha * h * fit.solution[:dim]
        constraint[j] = float(np.linalg.norm(defect)) / math.sqrt(h)

    cauchy = np.zeros(max(len(alphas) - 1, 0))
    for j in range(1, len(alphas)):
        diff = u_list[j] - u_list[j - 1]
        cauchy[j - 1] = math.sqrt(h * float(np.sum(diff * diff)))
    residual = cauchy + constraint[1:] if len(alphas) > 1 else np.zeros(0)
    return TikhonovResult(
        alphas=alphas,
        u_samples_seq=tuple(u_list),
        cauchy_seq=cauchy,
        constraint_residual_seq=constraint,
        residual_seq=residual,
        grid=grid,
    )


# ---------------------------------------------------------------------------
# Descriptor Riccati filter


@dataclass(frozen=True)
class RiccatiResult:
    """Endpoint readout (ell_0, x(t_end)) with its worst-case radius."""

    estimate_value: float
    sigma_hat: float
    K_final: np.ndarray
    x_hat_final: np.ndarray
    K_nodes: np.ndarray  # (steps+1, n, n) gain at every grid node


def riccati_filter(
    system: ContinuousDAE,
    bounds: ContinuousEllipsoid,
    ell0,
    y_samples,
    grid: TimeGrid,
    tol: float = DEFAULT_TOL,
) -> RiccatiResult:
    """Forward filter for the endpoint functional (ell_0, x(t_end)).

    Integrates the descriptor Riccati equation for the gain K,

        d/dt (F K) = C K + K'C' - K'H'Q2 H K + Q1^{-1},
        F K(t_start) = P Q0^{-1} P,   P = F F^+,

    in the variable S = F K, which the symmetric initial value and the
    Lyapunov-plus-quadratic right-hand side keep symmetric along the
    flow (K is recovered as the minimum-norm preimage F^+ S). Each step
    is linearly implicit: the quadratic term is linearized around the
    current S, leaving a Sylvester equation

        (I - h A_j) S_{j+1} + S_{j+1} (-h A_j') = S_j + h Q1^{-1},
        A_j = (C - (1/2) K_j' H'Q2H) F^+   at t_{j+1},

    which preserves stationary points of the flow exactly. The center
    x_hat follows d/dt(F x_hat) = C x_hat + K'H'Q2 (y - H x_hat) with
    F x_hat(t_start) = 0, by implicit Euler with the fresh gain. The
    readout is (F x_hat(t_end), F^{+'} ell_0) and its squared radius
    (S(t_end) F^{+'} ell_0, F^{+'} ell_0).

    Requires square F; raises NotRepresentable when ell_0 is outside
    range(F'), where no finite-radius endpoint readout exists.
    """
    _check_grid(system, grid)
    m, n = system.F.shape
    if m != n:
        raise InvalidInput("riccati_filter needs a square coefficient F")
    ell0 = as_vector(ell0, "ell0")
    if ell0.shape[0] != n:
        raise InvalidInput(f"ell0 has length {ell0.shape[0]}, expected {n}")
    y = _check_samples(system, y_samples, grid)

    membership = range_membership(system.F.T, ell0)
    if not membership.member:
        raise NotRepresentable(
            "ell0 is not in range(F'); the endpoint functional has no "
            "finite worst-case radius"
        )

    F = system.F
    Fp = pseudo_inverse(F, tol)
    proj = F @ Fp
    S = symmetrize(proj @ spd_inverse(bounds.Q0) @ proj)
    x_hat = np.zeros(n)
    h = grid.h
    ts = grid.nodes()
    eye = np.eye(n)
    gains = np.empty((grid.steps + 1, n, n))
    gains[0] = Fp @ S

    for j in range(grid.steps):
        t_next = ts[j + 1]
        C_next = np.asarray(system.C(t_next), dtype=float)
        H_next = np.asarray(system.H(t_next), dtype=float)
        Q2_next = require_spd(bounds.Q2(t_next), "Q2(t)")
        W = H_next.T @ Q2_next @ H_next
        K = Fp @ S
        A_j = (C_next - 0.5 * (K.T @ W)) @ Fp
        rhs = S + h * spd_inverse(require_spd(bounds.Q1(t_next), "Q1(t)"))
        try:
            S = scipy.linalg.solve_sylvester(eye - h * A_j, -h * A_j.T, rhs)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise RankDeficient(
                f"implicit Riccati step matrix at t={t_next} is singular"
            ) from exc
        S = symmetrize(S)
        K = Fp @ S
        gain_norm = float(np.linalg.norm(K, 2))
        if not math.isfinite(gain_norm) or gain_norm > RICCATI_NORM_CAP:
            raise RiccatiBlowup(
                f"gain norm {gain_norm:.3e} at t={t_next} exceeds {RICCATI_NORM_CAP}"
            )
        gains[j + 1] = K
        step_mat = F - h * C_next + h * (K.T @ W)
        rhs_x = F @ x_hat + h * (K.T @ (H_next.T @ (Q2_next @ y[j + 1])))
        try:
            x_hat = np.linalg.solve(step_mat, rhs_x)
        except np.linalg.LinAlgError as exc:
            raise RankDeficient(
                f"implicit state step matrix at t={t_next} is singular"
            ) from exc

    v = Fp.T @ ell0
    sigma = float(v @ (S @ v))
    estimate = float((F @ x_hat) @ v)
    return RiccatiResult(
        estimate_value=estimate,
        sigma_hat=max(sigma, 0.0),
        K_final=Fp @ S,
        x_hat_final=x_hat,
        K_nodes=gains,
    )
