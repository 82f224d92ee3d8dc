import numpy as np
import pytest
from scipy.integrate import trapezoid

from slqvi import (
    DataMatrices,
    RankError,
    SimConfig,
    collect,
    collect_from_simulation,
    default_exploration,
    model_triple,
    recover_triple,
    simulate_open_loop,
    synthetic_exact_data,
)
from slqvi.simulator import TrajectoryEnsemble
from slqvi.symmat import quad_basis, vecs

from conftest import random_psd


@pytest.fixture(scope="module")
def mc_data():
    from slqvi import benchmark
    m = benchmark()
    ex = default_exploration(m, 24)
    return collect_from_simulation(m, ex, 0.1 * np.arange(25), SimConfig(dt=1e-3, paths=10_000, seed=0))


def _zero_ensemble(paths=3, steps=50, intervals=10, n=2, m=1):
    t = np.linspace(0, 1, steps + 1)
    marks = np.linspace(0, steps, intervals + 1).astype(int)
    return TrajectoryEnsemble(t[marks], t, marks, np.zeros((paths, t.size, n)),
                              np.zeros((paths, t.size, m)), seed=0)


def test_zero_ensemble_rank_deficient():
    d = collect(_zero_ensemble())
    for block in (d.I_xx, d.d_xx, d.d_xu, d.d_uu):
        assert not block.any()
    assert not d.rank_ok
    with pytest.raises(RankError, match="rank deficient"):
        d.theta
    with pytest.raises(RankError):
        recover_triple(d, np.eye(2))


def test_too_few_rows_rank_deficient(bench):
    d = synthetic_exact_data(bench, intervals=5)
    assert not d.rank_ok


def test_collinear_columns_detected(bench):
    d = synthetic_exact_data(bench)
    bad = DataMatrices(d.I_xx, d.d_xx, d.d_xu, d.d_xx[:, :1])
    assert not bad.rank_ok


def test_single_path_rows(bench):
    from slqvi.model import SlqModel
    m = SlqModel(bench.A, bench.B, np.zeros((2, 2)), np.zeros((2, 1)), bench.Q, bench.R, bench.x0)
    ex = default_exploration(m, 6, noise_ratio=0.0)
    times = np.linspace(0, 0.6, 7)
    ens = simulate_open_loop(m, ex, times, SimConfig(dt=1e-2, paths=1))
    d = collect(ens)
    x, u, mk = ens.states[0], ens.inputs[0], ens.marks
    for i in range(6):
        np.testing.assert_allclose(d.I_xx[i], quad_basis(x[mk[i + 1]]) - quad_basis(x[mk[i]]), rtol=1e-14)
        sl = slice(mk[i], mk[i + 1] + 1)
        np.testing.assert_allclose(d.d_xx[i], trapezoid(quad_basis(x[sl]), ens.t[sl], axis=0), rtol=1e-12)
        xu = np.array([np.kron(a, b) for a, b in zip(x[sl], u[sl])])
        np.testing.assert_allclose(d.d_xu[i], trapezoid(xu, ens.t[sl], axis=0), rtol=1e-12, atol=1e-16)
        np.testing.assert_allclose(d.d_uu[i], trapezoid(u[sl] ** 2, ens.t[sl], axis=0), rtol=1e-12)


def test_recover_at_zero(bench):
    M, N, H = recover_triple(synthetic_exact_data(bench), np.zeros((2, 2)))
    assert not M.any() and not N.any() and not H.any()


def test_exact_data_recovers_model_triple(bench, rng):
    d = synthetic_exact_data(bench)
    assert d.rank_ok
    for _ in range(10):
        P = random_psd(rng, 2)
        for got, want in zip(recover_triple(d, P), model_triple(bench, P)):
            np.testing.assert_allclose(got, want, atol=1e-8, rtol=0)


@pytest.mark.parametrize("n,m", [(1, 1), (3, 2), (2, 2)])
def test_exact_data_other_sizes(n, m, rng):
    from slqvi.model import random_model
    md = random_model(rng, n, m)
    d = synthetic_exact_data(md, intervals=30, interval_length=0.05, seed=n + m)
    P = random_psd(rng, n)
    for got, want in zip(recover_triple(d, P), model_triple(md, P)):
        np.testing.assert_allclose(got, want, atol=1e-8, rtol=0)


def test_theta_matches_normal_equations(bench, mc_data):
    for d in (synthetic_exact_data(bench), mc_data):
        np.testing.assert_allclose(d.theta, d.theta_normal_equations(), rtol=1e-6, atol=1e-9)


def test_linearity(mc_data, rng):
    P1, P2 = random_psd(rng, 2), random_psd(rng, 2)
    a, b = 1.7, -0.4
    lhs = recover_triple(mc_data, a * P1 + b * P2)
    r1, r2 = recover_triple(mc_data, P1), recover_triple(mc_data, P2)
    for l, x, y in zip(lhs, r1, r2):
        np.testing.assert_allclose(l, a * x + b * y, atol=1e-13)


def test_monte_carlo_rank(mc_data):
    assert mc_data.rank_ok
    assert mc_data.min_singular_value > 1e-6 * mc_data.max_singular_value


def test_monte_carlo_recovery(bench, mc_data):
    for got, want in zip(recover_triple(mc_data, np.eye(2)), model_triple(bench, np.eye(2))):
        np.testing.assert_allclose(got, want, atol=5e-2, rtol=0)


def test_ito_identity_held_out(bench):
    # fit theta on 20 intervals, check the identity on 4 held-out intervals
    ex = default_exploration(bench, 20)
    cfg = SimConfig(dt=1e-3, paths=5000, seed=21)
    full = collect_from_simulation(bench, ex, 0.1 * np.arange(25), cfg)
    fit = DataMatrices(full.I_xx[:20], full.d_xx[:20], full.d_xu[:20], full.d_uu[:20])
    P = np.array([[0.3, -0.05], [-0.05, 0.25]])
    lhs = full.I_xx[20:] @ vecs(P)

    def rhs(triple):
        M, N, H = triple
        return full.regressor[20:] @ np.concatenate([vecs(M), N.ravel(order="F"), vecs(H)])

    # the model triple shows how well the identity can hold on this data at all
    floor = np.abs(lhs - rhs(model_triple(bench, P))).max()
    err = np.abs(lhs - rhs(recover_triple(fit, P))).max()
    scale = np.abs(lhs).max()
    assert floor < 5e-3 * scale
    # recovered triple adds the least-squares estimation error on top
    assert err < 1e-2 * scale


def test_csv_roundtrip(tmp_path, mc_data):
    path = tmp_path / "data.csv"
    mc_data.to_csv(path)
    back = DataMatrices.from_csv(path)
    for name in ("I_xx", "d_xx", "d_xu", "d_uu"):
        np.testing.assert_array_equal(getattr(back, name), getattr(mc_data, name))
    np.testing.assert_allclose(back.theta, mc_data.theta, rtol=1e-12, atol=1e-15)


def test_csv_missing_block(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("Ixx_0,dxx_0\n1,2\n")
    with pytest.raises(ValueError, match="dxu"):
        DataMatrices.from_csv(path)


def test_block_shape_checks():
    with pytest.raises(ValueError):
        DataMatrices(np.zeros((5, 3)), np.zeros((4, 3)), np.zeros((5, 2)), np.zeros((5, 1)))
    with pytest.raises(ValueError):
        DataMatrices(np.zeros((5, 3)), np.zeros((5, 3)), np.zeros((5, 3)), np.zeros((5, 1)))
