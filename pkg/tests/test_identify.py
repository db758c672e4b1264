import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bilateral import config, robots, sim
from bilateral import identify as ident
from bilateral.controller import TeleopMode
from bilateral.errors import UsageError
from oracles import lagrangian_inverse_dynamics


def quiet(fn, *a, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fn(*a, **kw)


@pytest.fixture(scope="module")
def crane_data():
    m = robots.crane_x7()
    t, q, qd, qdd = ident.multisine(m, 20.0, rate=50.0, seed=3)
    return m, ident.synthesize(m, t, q, qd, qdd)


# --- resampling ----------------------------------------------------------

def test_resample_keeps_constants():
    t = np.arange(2000) * 1e-3
    x = np.full((2000, 3), [0.5, -1.0, 2.0])
    ts, xs, xd, xdd = ident.resample(t, x, 25.0)
    np.testing.assert_allclose(xs, np.broadcast_to([0.5, -1.0, 2.0], xs.shape), atol=1e-12)
    np.testing.assert_allclose(xd, 0.0, atol=1e-9)
    np.testing.assert_allclose(xdd, 0.0, atol=1e-6)


def test_resample_rate_and_grid():
    t = np.arange(5000) * 1e-3
    ts, xs, _, _ = ident.resample(t, np.sin(t), 25.0)
    np.testing.assert_allclose(np.diff(ts), 0.04, rtol=1e-9)
    assert xs.shape == (125, 1)


@given(st.floats(0.2, 2.0), st.floats(0.0, 2 * np.pi))
@settings(max_examples=20, deadline=None)
def test_resample_preserves_slow_sinusoids(f, phase):
    t = np.arange(20000) * 1e-3
    w = 2 * np.pi * f
    ts, xs, xd, xdd = ident.resample(t, np.sin(w * t + phase), 25.0)
    mid = slice(25, -25)
    np.testing.assert_allclose(xs[mid, 0], np.sin(w * ts[mid] + phase), atol=0.01)
    np.testing.assert_allclose(xd[mid, 0], w * np.cos(w * ts[mid] + phase), atol=0.01 * w)
    np.testing.assert_allclose(xdd[mid, 0], -w * w * np.sin(w * ts[mid] + phase), atol=0.01 * w * w)


def test_resample_removes_fast_noise():
    t = np.arange(10000) * 1e-3
    ts, xs, _, _ = ident.resample(t, np.sin(2 * np.pi * 100 * t), 25.0)
    assert np.abs(xs[25:-25]).max() < 1e-6


@pytest.mark.parametrize("target", [0.0, 1000.0, 2000.0, 30.0])
def test_resample_rejects_bad_rates(target):
    t = np.arange(1000) * 1e-3
    with pytest.raises(UsageError):
        ident.resample(t, np.sin(t), target)


def test_resample_rejects_short_or_ragged_input():
    with pytest.raises(UsageError):
        ident.resample(np.arange(10) * 1e-3, np.zeros(10), 25.0)
    t = np.cumsum(np.r_[0, np.full(999, 1e-3)])
    t[500] += 3e-4
    with pytest.raises(UsageError):
        ident.resample(t, np.zeros(1000), 25.0)


# --- regressor stacking --------------------------------------------------

def test_stack_shape_and_linearity(crane_data):
    m, data = crane_data
    Y, tau = ident.stack_regressor(m, data)
    assert Y.shape == (8 * len(data), 38)
    np.testing.assert_allclose(Y @ m.phi.values, tau, atol=1e-10 * np.abs(tau).max())


def test_stack_of_nothing_is_usage_error(crane):
    with pytest.raises(UsageError):
        ident.stack_regressor(crane, [])


def test_ident_data_validation():
    with pytest.raises(UsageError):
        ident.IdentData([0.0, 1.0], np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((3, 2)), np.zeros((2, 2)))
    with pytest.raises(UsageError):
        ident.IdentData([1.0, 0.0], *[np.zeros((2, 2))] * 4)
    with pytest.raises(UsageError):
        ident.IdentData([0.0, 1.0], np.full((2, 2), np.nan), *[np.zeros((2, 2))] * 3)


# --- least squares -------------------------------------------------------

def test_noiseless_recovery(crane_data):
    m, data = crane_data
    phi, diag = quiet(ident.identify, m, data)
    ok = diag.identifiable
    assert diag.rank == 37
    rel = np.abs(phi.values - m.phi.values) / np.maximum(np.abs(m.phi.values), 1e-12)
    assert rel[ok].max() < 1e-6


def test_inseparable_pair_is_flagged(crane_data):
    m, data = crane_data
    with pytest.warns(UserWarning, match="rank 37"):
        _, diag = ident.identify(m, data)
    bad = {n for n, ok in zip(diag.names, diag.identifiable) if not ok}
    assert bad == {"MYR6", "MZ7"}
    assert "MYR6" in diag.report() and "effective rank: 37" in diag.report()


def test_prediction_against_lagrangian_torques(chain3, rng):
    # torques from energy derivatives, a path independent of the regressor
    t, q, qd, qdd = ident.multisine(chain3, 6.0, rate=10.0, seed=1)
    tau = np.array([lagrangian_inverse_dynamics(chain3, *s) for s in zip(q, qd, qdd)])
    phi, diag = quiet(ident.identify, chain3, ident.IdentData(t, q, qd, qdd, tau))
    assert diag.rank == 19
    q2 = chain3.sample_configuration(rng)
    qd2, qdd2 = rng.normal(size=3), rng.normal(size=3)
    pred = chain3.with_phi(phi.as_dict())
    from bilateral.dynamics import inverse_dynamics
    np.testing.assert_allclose(inverse_dynamics(pred, q2, qd2, qdd2),
                               lagrangian_inverse_dynamics(chain3, q2, qd2, qdd2), atol=1e-5)


def test_duplicated_column_is_flagged(rng):
    A = rng.normal(size=(50, 4))
    Y = np.column_stack([A, A[:, 1]])
    tau = A @ np.array([1.0, 2.0, 3.0, 4.0])
    with pytest.warns(UserWarning, match="rank 4 < 5"):
        phi, diag = ident.least_squares_identify(Y, tau, ("a", "b", "c", "d", "b2"))
    assert list(diag.identifiable) == [True, False, True, True, False]
    # minimum norm splits the duplicated coefficient evenly
    np.testing.assert_allclose(phi, [1.0, 1.0, 3.0, 4.0, 1.0], atol=1e-10)


def test_residual_is_orthogonal_to_columns(rng):
    Y = rng.normal(size=(200, 6))
    tau = rng.normal(size=200)
    phi, diag = ident.least_squares_identify(Y, tau)
    r = tau - Y @ phi
    np.testing.assert_allclose(Y.T @ r, 0.0, atol=1e-10)
    assert np.isclose(diag.residual_rms, np.sqrt(np.mean(r ** 2)))


def test_identification_is_idempotent(rng):
    Y = rng.normal(size=(120, 5))
    tau = rng.normal(size=120)
    phi, _ = ident.least_squares_identify(Y, tau)
    again, diag = ident.least_squares_identify(Y, Y @ phi)
    np.testing.assert_allclose(again, phi, atol=1e-12)
    assert diag.residual_rms < 1e-13


def test_dependent_rows_change_nothing(rng):
    Y = rng.normal(size=(80, 5))
    phi0 = rng.normal(size=5)
    tau = Y @ phi0
    W = rng.normal(size=(30, 80))
    phi, _ = ident.least_squares_identify(np.vstack([Y, W @ Y]), np.r_[tau, W @ tau])
    np.testing.assert_allclose(phi, phi0, atol=1e-10)


def test_scaling_keeps_small_parameters_identifiable(rng):
    Y = rng.normal(size=(100, 3)) * np.array([1e6, 1.0, 1e-6])
    phi0 = np.array([1e-6, 1.0, 1e6])
    phi, diag = ident.least_squares_identify(Y, Y @ phi0)
    assert diag.identifiable.all() and diag.rank == 3
    np.testing.assert_allclose(phi, phi0, rtol=1e-8)


def test_uniform_weights_change_nothing(rng):
    Y = rng.normal(size=(90, 4))
    tau = rng.normal(size=90)
    a, _ = ident.least_squares_identify(Y, tau)
    b, _ = ident.least_squares_identify(Y, tau, row_weights=np.full(90, 3.7))
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_bad_weights_are_usage_error(rng):
    with pytest.raises(UsageError):
        ident.least_squares_identify(rng.normal(size=(5, 2)), np.zeros(5), row_weights=-np.ones(5))


def test_weighting_helps_with_uneven_joint_noise():
    # two "joints": one exact, one very noisy; weighting trusts the exact one
    rng = np.random.default_rng(5)
    n = 400
    Y = rng.normal(size=(2 * n, 3))
    phi0 = np.array([1.0, -2.0, 0.5])
    noise = np.zeros((n, 2))
    noise[:, 0] = rng.normal(size=n) * 1e-3
    noise[:, 1] = rng.normal(size=n) * 1.0
    tau = Y @ phi0 + noise.ravel()
    ols, _ = ident.least_squares_identify(Y, tau)
    wls, _ = ident.weighted_identify(Y, tau, 2)
    assert np.abs(wls - phi0).max() < 0.1 * np.abs(ols - phi0).max()


def test_weighted_fit_is_exact_without_noise(crane_data):
    m, data = crane_data
    phi, diag = quiet(ident.identify, m, data, weighted=True)
    rel = np.abs(phi.values - m.phi.values) / np.abs(m.phi.values)
    assert rel[diag.identifiable].max() < 1e-6


@pytest.mark.parametrize("Y,tau", [(np.zeros((0, 3)), np.zeros(0)), (np.zeros((4, 3)), np.zeros(5)),
                                   (np.full((2, 1), np.inf), np.zeros(2))])
def test_bad_regression_input(Y, tau):
    with pytest.raises(UsageError):
        ident.least_squares_identify(Y, tau)


def test_negative_friction_is_clipped(crane_data, rng):
    m, data = crane_data
    noisy = ident.IdentData(data.t, data.q, data.qd, data.qdd,
                            data.tau + rng.normal(size=data.tau.shape) * 2.0)
    phi, _ = quiet(ident.identify, m, noisy)
    fv = [phi[n] for n in phi.names if n.startswith("FV")]
    assert min(fv) >= 0.0


def test_noise_is_relative_to_rms_torque(crane_data):
    m, data = crane_data
    noisy = ident.synthesize(m, data.t, data.q, data.qd, data.qdd, noise=0.05,
                             rng=np.random.default_rng(0))
    ratio = np.std(noisy.tau - data.tau, axis=0) / np.sqrt(np.mean(data.tau ** 2, axis=0))
    np.testing.assert_allclose(ratio, 0.05, rtol=0.15)


# --- logs and round trips ------------------------------------------------

def test_identified_fragment_round_trips(tmp_path, crane_data):
    m, data = crane_data
    phi, _ = quiet(ident.identify, m, data)
    p = tmp_path / "phi.yaml"
    p.write_text(config.phi_fragment(phi, "test"))
    back = config.load_model(p)
    np.testing.assert_array_equal(back.phi.values, phi.values)
    assert back.phi.names == phi.names


def test_data_from_log_uses_applied_torque():
    model = robots.pendulum(gravity=9.81)
    cl, cf = sim.mode_configs(TeleopMode.FOURCH_PROPOSED)
    op = sim.OperatorProfile(repetitions=4, amplitude=0.6, period=1.5, start=0.2, inertia=0.0)
    log = sim.run_session(model, model, cl, cf, sim.Scenario(duration=6.5, operator=op))
    data = ident.data_from_log(log, "f", 25.0)
    assert np.allclose(np.diff(data.t), 0.04)
    assert data.t[0] >= 0.5 and data.t[-1] <= 6.0
    phi, diag = quiet(ident.identify, model, data)
    Y, tau = ident.stack_regressor(model, data)
    # filtering and differencing limit the fit, not the torque definition
    assert diag.residual_rms < 0.1 * np.sqrt(np.mean(tau ** 2))


def test_data_from_short_log_is_usage_error():
    log = sim.TelemetryLog(1, np.zeros((2, 1 + 2 * len(sim.SIGNALS))))
    with pytest.raises(UsageError):
        ident.data_from_log(log)
