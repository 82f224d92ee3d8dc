import json
import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from slqvi import SimConfig, SlqModel, evaluate_cost_mc, gain, is_ms_stabilizing
from slqvi.model import second_moment_generator
from slqvi.symmat import DimensionError

from conftest import K_BAR, P_BAR, scalar_model


def two_state(A):
    Z = np.zeros((2, 2))
    return SlqModel(A=A, B=np.zeros((2, 1)), C=Z, D=np.zeros((2, 1)),
                    Q=np.eye(2), R=[[1.0]], x0=[1.0, 0.0])


def test_ms_stability_trivial_cases():
    assert is_ms_stabilizing(two_state(-np.eye(2)), np.zeros((1, 2)))
    assert not is_ms_stabilizing(two_state(np.eye(2)), np.zeros((1, 2)))


def test_benchmark_gain_is_stabilizing(bench):
    assert is_ms_stabilizing(bench, K_BAR)


def test_noise_can_destabilize():
    # stable drift, but multiplicative noise with c^2 > -2a
    assert is_ms_stabilizing(scalar_model(A=-1.0, C=1.0), [[0.0]])
    assert not is_ms_stabilizing(scalar_model(A=-1.0, C=1.5), [[0.0]])


def test_generator_matches_moment_ode(bench, rng):
    # d/ds E[xx'] = Acl S + S Acl' + Ccl S Ccl'
    K = rng.standard_normal((1, 2)) * 0.1
    Acl, Ccl = bench.A + bench.B @ K, bench.C + bench.D @ K
    S = rng.standard_normal((2, 2))
    S = S @ S.T
    dS = Acl @ S + S @ Acl.T + Ccl @ S @ Ccl.T
    np.testing.assert_allclose(second_moment_generator(bench, K) @ S.ravel(order="F"),
                               dS.ravel(order="F"), atol=1e-14)


def test_dimension_checks(bench):
    with pytest.raises(DimensionError):
        is_ms_stabilizing(bench, np.zeros((1, 3)))
    with pytest.raises(DimensionError):
        SlqModel(A=np.eye(2), B=np.zeros((2, 1)), C=np.eye(3), D=np.zeros((2, 1)),
                 Q=np.eye(2), R=[[1.0]], x0=[0, 0])
    with pytest.raises(DimensionError):
        SlqModel(A=np.eye(2), B=np.zeros((2, 1)), C=np.eye(2), D=np.zeros((2, 1)),
                 Q=np.eye(2), R=[[1.0]], x0=[0, 0, 0])


def test_weight_checks():
    with pytest.raises(ValueError, match="positive semidefinite"):
        scalar_model(Q=-1.0)
    with pytest.raises(ValueError, match="positive definite"):
        scalar_model(R=0.0)
    with pytest.warns(UserWarning, match="observability"):
        scalar_model(Q=0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        scalar_model(Q=1.0)


def test_model_is_immutable(bench):
    with pytest.raises(ValueError):
        bench.A[0, 0] = 1.0


def test_model_roundtrip(tmp_path, bench):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(bench.to_dict()))
    m2 = SlqModel.load(path)
    for k in "ABCDQR":
        np.testing.assert_array_equal(getattr(m2, k), getattr(bench, k))
    with pytest.raises(KeyError):
        SlqModel.from_dict({"A": [[1.0]]})


def test_cost_zero_weight():
    with pytest.warns(UserWarning):
        m = scalar_model(A=-1.0, C=0.2, Q=0.0)
    est, se = evaluate_cost_mc(m, [[0.0]], SimConfig(dt=1e-2, paths=50, seed=1), 2.0)
    assert est == 0.0 and se == 0.0


def test_cost_scalar_closed_form():
    m = scalar_model()
    for T in (1.0, 5.0):
        est, _ = evaluate_cost_mc(m, [[0.0]], SimConfig(dt=1e-3, paths=4, seed=0), T)
        # deterministic path; trapezoid + Euler bias is O(dt)
        assert est == pytest.approx((1 - np.exp(-2 * T)) / 2, rel=5e-3)


def test_cost_monotone_in_horizon():
    m = scalar_model(C=0.5)
    cfg = SimConfig(dt=1e-2, paths=200, seed=3)
    costs = [evaluate_cost_mc(m, [[0.0]], cfg, T)[0] for T in (0.5, 1.0, 2.0, 4.0)]
    assert all(b >= a for a, b in zip(costs, costs[1:]))


def test_cost_refuses_unstable_gain():
    with pytest.raises(ValueError, match="stabilizing"):
        evaluate_cost_mc(scalar_model(A=1.0), [[0.0]], SimConfig(), 1.0)


def test_cost_benchmark_gain(bench):
    # exact finite-horizon cost from the second-moment ODE
    T = 40.0
    L = second_moment_generator(bench, K_BAR)
    W = bench.Q + K_BAR.T @ bench.R @ K_BAR
    s0 = np.outer(bench.x0, bench.x0).ravel(order="F")
    exact = W.ravel(order="F") @ np.linalg.solve(L, (expm(L * T) - np.eye(4)) @ s0)

    est, se = evaluate_cost_mc(bench, K_BAR, SimConfig(dt=1e-3, paths=100, seed=7), T)
    assert abs(est - exact) < 3 * se + 2e-3 * exact
    # the reference gain is slightly suboptimal: its cost sits just above x0' P x0
    assert bench.x0 @ P_BAR @ bench.x0 < exact < 1.02 * bench.x0 @ P_BAR @ bench.x0


def test_cost_optimal_gain_equals_value(bench, p_star):
    K = gain(bench, p_star)
    est, se = evaluate_cost_mc(bench, K, SimConfig(dt=1e-3, paths=100, seed=7), 40.0)
    J = bench.x0 @ p_star @ bench.x0
    assert abs(est - J) < 3 * se + 2e-3 * J
