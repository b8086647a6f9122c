import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssmfbvar.aggregation import aggregate_path
from ssmfbvar.errors import ConfigurationError, DataError
from ssmfbvar.forecast import (
    load_predictive,
    save_predictive,
    simulate_path,
    simulate_predictive,
    summarize,
    write_forecast_csv,
)
from ssmfbvar.gibbs import ChainState
from ssmfbvar.ssm import spectral_radius
from ssmfbvar.stats import rng_stream
from ssmfbvar.tsdata import as_month, format_quarter


def make_state(Pi, Sigma, psi, p, tail, phi=0.0, sigma2=0.0, h_last=0.0, intercept_form=False):
    return ChainState(Pi=np.asarray(Pi, float), Sigma=np.asarray(Sigma, float), psi=np.asarray(psi, float),
                      h=np.array([h_last]), z_tail=np.asarray(tail, float), phi=phi, sigma2=sigma2, p=p,
                      intercept_form=intercept_form)


def test_converges_to_steady_state():
    p = 2
    Pi = np.zeros((2, 4))
    Pi[:, :2] = [[0.6, 0.2], [0.1, 0.5]]
    Pi[:, 2:] = [[0.1, 0.0], [0.0, 0.1]]
    rho = spectral_radius(Pi, p)
    assert rho <= 0.9
    psi = np.array([2.0, -1.0])
    tail = np.tile([10.0, 5.0], (5, 1))
    st_ = make_state(Pi, 1e-30 * np.eye(2), psi, p, tail)
    path, f = simulate_path(st_, 60, rng_stream(0))
    gap0 = np.abs(tail[-1] - psi).max()
    assert np.abs(path[-1] - psi).max() < 0.01 * gap0
    np.testing.assert_allclose(f, 1.0)


def test_white_noise_one_step_is_steady_state():
    st_ = make_state(np.zeros((2, 2)), 1e-30 * np.eye(2), [3.0, 1.0], 1, np.ones((5, 2)))
    path, _ = simulate_path(st_, 1, rng_stream(1))
    np.testing.assert_allclose(path[0], [3.0, 1.0], atol=1e-12)


def test_constant_volatility_limit():
    st_ = make_state(np.zeros((1, 1)), np.eye(1), [0.0], 1, np.zeros((5, 1)), phi=0.0, sigma2=1e-30, h_last=2.0)
    _, f = simulate_path(st_, 10, rng_stream(2))
    np.testing.assert_allclose(f, 1.0, atol=1e-12)


def test_shock_scale_is_f_times_sigma():
    Sigma = np.array([[1.0, 0.5], [0.5, 2.0]])
    st_ = make_state(np.zeros((2, 2)), Sigma, [0.0, 0.0], 1, np.zeros((5, 2)), phi=1.0, sigma2=1e-30,
                     h_last=np.log(4.0))
    pd_ = simulate_predictive([st_] * 20_000, 1, rng_stream(3), origin=0, ids=("a", "b"), n_m=2)
    x = pd_.paths[:, -1]
    np.testing.assert_allclose(np.cov(x.T), 4 * Sigma, rtol=0.05)


def test_minnesota_intercept_form():
    Pi = np.array([[0.5, 1.0]])
    tail = np.full((5, 1), 2.0)
    st_ = make_state(Pi, 1e-30 * np.eye(1), [2.0], 1, tail, intercept_form=True)
    path, _ = simulate_path(st_, 1, rng_stream(0))
    assert path[0, 0] == pytest.approx(1.0 + 0.5 * 2.0)


def mixed_draws(S=200, H=12, seed=0):
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(S):
        Pi = np.zeros((2, 8))
        Pi[:, :2] = 0.3 * np.eye(2)
        states.append(make_state(Pi, np.eye(2), [1.0, 2.0], 4, rng.normal(size=(5, 2)), phi=0.9, sigma2=0.05))
    origin = as_month("2010-04")
    return simulate_predictive(states, H, rng_stream(seed), origin=origin, ids=("m", "q"), n_m=1)


def test_quarterly_draws_are_aggregates_of_monthly_paths():
    pd_ = mixed_draws()
    dates, vals = pd_.quarterly_aggregates()
    assert [format_quarter(int(d)) for d in dates[:2]] == ["2010Q2", "2010Q3"]
    for k, d in enumerate(dates):
        row = pd_._row(int(d))
        ref = aggregate_path(pd_.paths[:, row - 4: row + 1, 1].T).ravel()
        np.testing.assert_allclose(vals[:, k, 0], ref, atol=1e-13)


def test_horizon_conventions():
    pd_ = mixed_draws(H=8)
    assert pd_.horizon_date("m", 1) == as_month("2010-05")
    assert pd_.horizon_date("q", 0) == as_month("2010-06")
    assert pd_.max_horizon("q") == 2
    with pytest.raises(DataError):
        pd_.draws_for(["m"], as_month("2012-01"))


def test_summarize_cases():
    x = np.tile([1.0, 2.0], (10, 1))
    s = summarize(x)
    np.testing.assert_array_equal(s.mean, [1.0, 2.0])
    assert np.all(s.cov == 0) and s.singular
    y = np.arange(11.0)
    assert summarize(y).quantiles[0.5][0] == 5.0
    with pytest.raises(DataError):
        summarize(np.ones((1, 2)))


def test_summarize_mc_oracle():
    rng = np.random.default_rng(4)
    mu = np.array([1.0, -2.0])
    S0 = np.array([[1.0, 0.6], [0.6, 2.0]])
    x = rng.multivariate_normal(mu, S0, size=100_000)
    s = summarize(x)
    se = np.sqrt(np.diag(S0) / x.shape[0])
    assert np.all(np.abs(s.mean - mu) < 3 * se)
    se_cov = np.sqrt((S0 ** 2 + np.outer(np.diag(S0), np.diag(S0))) / x.shape[0])
    assert np.all(np.abs(s.cov - S0) < 3 * se_cov)


def test_files_round_trip(tmp_path):
    pd_ = mixed_draws(S=30)
    save_predictive(pd_, tmp_path / "p.npz")
    back = load_predictive(tmp_path / "p.npz")
    np.testing.assert_array_equal(back.paths, pd_.paths)
    assert back.ids == pd_.ids and back.origin == pd_.origin
    write_forecast_csv(pd_, tmp_path / "f.csv")
    head = (tmp_path / "f.csv").read_text().splitlines()[0]
    assert head == "variable,horizon,date,mean,sd,q05,q50,q95"


def test_input_guards():
    with pytest.raises(ConfigurationError):
        simulate_predictive([], 3, rng_stream(0), origin=0, ids=("a",), n_m=1)
    st_ = make_state(np.zeros((1, 1)), np.eye(1), [0.0], 1, np.zeros((5, 1)))
    with pytest.raises(ConfigurationError):
        simulate_predictive([st_], 0, rng_stream(0), origin=0, ids=("a",), n_m=1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000), st.floats(-0.9, 0.9))
def test_deterministic_recursion_matches_numpy(seed, a):
    rng = np.random.default_rng(seed)
    tail = rng.normal(size=(5, 1))
    st_ = make_state(np.array([[a]]), 1e-30 * np.eye(1), [0.5], 1, tail)
    path, _ = simulate_path(st_, 8, rng_stream(seed))
    x = tail[-1, 0]
    for j in range(8):
        x = 0.5 + a * (x - 0.5)
        assert path[j, 0] == pytest.approx(x, abs=1e-12)
