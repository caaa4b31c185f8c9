"""Brute-force reachability sampling and the independent center oracle.

Membership is re-verified here from scratch: for each sampled state x
the minimum disturbance energy consistent with x and y is computed by a
projection that shares no code with the sampler.
"""

import os

import numpy as np
import pytest

from descriptor_minimax import (
    DimensionTooLarge,
    EmptySet,
    InvalidInput,
    KIND_APOSTERIORI,
    KIND_APRIORI,
    SingularNormalEquations,
    StaticEllipsoid,
    StaticModel,
    aposteriori_estimate,
    chebyshev_check,
    quadratic_center_oracle,
    sample_reachability,
)
from descriptor_minimax.oracle import resolve_workers

from conftest import (
    feasible_observation,
    make_static,
    representable_functional,
    rng_for,
    scalar_static,
)


def _membership_energy(model, bounds, y, x):
    """Least energy of (f, g) with F x = B f, g = y - H x.

    Minimum-norm f solves the weighted least squares min (Q1 f, f)
    subject to B f = F x; infeasible x reports +inf.
    """
    L = np.linalg.cholesky(bounds.Q1)
    # substitute f = L^{-T} w, minimize |w|^2 s.t. (B L^{-T}) w = F x
    BL = model.B @ np.linalg.inv(L.T)
    target = model.F @ x
    w, *_ = np.linalg.lstsq(BL, target, rcond=None)
    if np.linalg.norm(BL @ w - target) > 1e-8 * (1.0 + np.linalg.norm(target)):
        return np.inf
    g = y - model.H @ x
    return float(w @ w + g @ (bounds.Q2 @ g))


def test_samples_satisfy_membership():
    rng = rng_for(1001)
    done = 0
    while done < 10:
        model, bounds = make_static(rng)
        y = feasible_observation(rng, model, bounds)
        if y is None:
            continue
        samples = sample_reachability(model, bounds, y, 500, seed=done)
        assert len(samples) == 500
        for x in samples.x:
            assert _membership_energy(model, bounds, y, x) <= 1.0 + 1e-12
        done += 1


def test_boundary_samples_sit_on_the_shell():
    model, _, apo = scalar_static()
    samples = sample_reachability(model, apo, [1.0], 400, seed=3)
    energies = np.array(
        [_membership_energy(model, apo, np.array([1.0]), x) for x in samples.x]
    )
    on_shell = np.sum(np.abs(energies - 1.0) <= 1e-9)
    assert on_shell >= 150  # alternating boundary/interior draw pattern


def test_scalar_deviation_attains_radius():
    model, _, apo = scalar_static()
    out = aposteriori_estimate(model, apo, [1.0], [1.0])
    samples = sample_reachability(model, apo, [1.0], 2000, seed=0)
    report = chebyshev_check(samples, [1.0], out.estimate_value, out.sigma_hat)
    assert report.violation_count == 0
    assert report.samples_checked == 2000
    assert report.max_abs_deviation == pytest.approx(0.5, abs=1e-6)


def test_no_violations_across_random_instances():
    rng = rng_for(77)
    done = 0
    while done < 100:
        model, bounds = make_static(rng)
        y = feasible_observation(rng, model, bounds)
        if y is None:
            continue
        ell = representable_functional(rng, model)
        out = aposteriori_estimate(model, bounds, ell, y)
        if not out.feasible:
            continue
        samples = sample_reachability(model, bounds, y, 400, seed=done)
        if len(samples) == 0:
            continue
        report = chebyshev_check(samples, ell, out.estimate_value, out.sigma_hat)
        assert report.violation_count == 0
        done += 1


def test_determinism_same_seed():
    rng = rng_for(5)
    model, bounds = make_static(rng)
    y = np.zeros(model.observation_dim)
    a = sample_reachability(model, bounds, y, 1000, seed=42)
    b = sample_reachability(model, bounds, y, 1000, seed=42)
    assert np.array_equal(a.x, b.x)
    c = sample_reachability(model, bounds, y, 1000, seed=43)
    assert not np.array_equal(a.x, c.x)


def test_determinism_independent_of_worker_count():
    rng = rng_for(6)
    model, bounds = make_static(rng)
    y = np.zeros(model.observation_dim)
    a = sample_reachability(model, bounds, y, 5000, seed=9, workers=1)
    b = sample_reachability(model, bounds, y, 5000, seed=9, workers=4)
    assert np.array_equal(a.x, b.x)


def test_worker_env_cap(monkeypatch):
    monkeypatch.setenv("DESCRIPTOR_MINIMAX_THREADS", "2")
    assert resolve_workers(8) == 2
    monkeypatch.setenv("DESCRIPTOR_MINIMAX_THREADS", "junk")
    with pytest.raises(InvalidInput):
        resolve_workers(8)
    monkeypatch.delenv("DESCRIPTOR_MINIMAX_THREADS")
    assert resolve_workers(3) == 3


def test_empty_set_detected():
    model, _, apo = scalar_static()
    samples = sample_reachability(model, apo, [10.0], 100, seed=0)
    assert samples.empty
    assert len(samples) == 0
    with pytest.raises(EmptySet):
        chebyshev_check(samples, [1.0], 0.0, 1.0)


def test_infinite_radius_never_violated():
    model, _, apo = scalar_static()
    samples = sample_reachability(model, apo, [1.0], 100, seed=0)
    report = chebyshev_check(samples, [1.0], 0.0, np.inf)
    assert report.violation_count == 0


def test_dimension_cap():
    n = 65
    model = StaticModel(F=np.eye(n), B=np.eye(n), H=np.eye(n))
    bounds = StaticEllipsoid(Q1=np.eye(n), Q2=np.eye(n), kind=KIND_APOSTERIORI)
    with pytest.raises(DimensionTooLarge):
        sample_reachability(model, bounds, np.zeros(n), 10, seed=0)


def test_oracle_requires_aposteriori_bounds():
    model, apr, _ = scalar_static()
    with pytest.raises(InvalidInput):
        sample_reachability(model, apr, [1.0], 10, seed=0)


def test_quadratic_center_oracle_scalar():
    model, _, apo = scalar_static()
    assert quadratic_center_oracle(model, apo, [1.0]) == pytest.approx(
        [0.5], abs=1e-14
    )


def test_quadratic_center_oracle_matches_center():
    rng = rng_for(31)
    done = 0
    while done < 40:
        n = int(rng.integers(1, 4))
        m = n + int(rng.integers(0, 2))
        l = int(rng.integers(1, 4))
        model, bounds = make_static(rng, n=n, m=m, p=m, l=l)
        # square invertible B with a safe margin
        B = rng.standard_normal((m, m)) + 3.0 * np.eye(m)
        model = StaticModel(F=model.F, B=B, H=model.H)
        y = feasible_observation(rng, model, bounds)
        if y is None:
            continue
        try:
            center = quadratic_center_oracle(model, bounds, y)
        except SingularNormalEquations:
            continue
        out = aposteriori_estimate(model, bounds, np.zeros(n), y)
        assert np.linalg.norm(center - out.x_hat) <= 1e-8 * (
            1.0 + np.linalg.norm(center)
        )
        done += 1


def test_quadratic_center_oracle_rejects_singular_information():
    model = StaticModel(F=[[0.0]], B=[[1.0]], H=[[0.0]])
    bounds = StaticEllipsoid(Q1=[[1.0]], Q2=[[1.0]], kind=KIND_APOSTERIORI)
    with pytest.raises(SingularNormalEquations):
        quadratic_center_oracle(model, bounds, [0.0])
