import math

import numpy as np
import pytest

from ldpnet import ConfigError, CorrelationKernel, ModelParams
from ldpnet.empirical import shift
from ldpnet.network import PathConfiguration, simulate_reference
from ldpnet.rncheck import (
    Functional,
    log_mean_exp,
    pushforward_check,
    rn_analytic,
    rn_check,
    rn_mc_estimate,
)

ZERO = CorrelationKernel.dirac(0.0)
SEP = CorrelationKernel.separable_geometric(0.25, 0.5, 0.5)


def test_log_mean_exp_stable():
    x = np.array([1000.0, 1000.0 + math.log(3.0)])
    m, _ = log_mean_exp(x)
    assert m == pytest.approx(1000.0 + math.log(2.0), abs=1e-12)


def test_degenerate_field_is_exactly_zero():
    p = ModelParams(n=1, T=2, j_bar=0.0)
    u = simulate_reference(p, seed=3)
    est, se = rn_mc_estimate(u, ZERO, p, 5000, seed=1)
    assert est == 0.0 and se == 0.0
    assert rn_analytic(u, ZERO, p) == 0.0
    assert rn_check(u, ZERO, p, 100, seed=1).z_score == 0.0


def closed_form_single(u, p, j_var):
    """log E exp((v G - G^2/2) / sigma^2) for scalar G ~ N(j_bar f(u_0), j_var f(u_0)^2)."""
    f0 = p.gain(u[0, 0])
    m, s2 = p.j_bar * f0, j_var * f0**2
    v = u[0, 1] - p.gamma * u[0, 0] - p.theta_bar
    a, b = v / p.sigma**2, 1 / (2 * p.sigma**2)
    d = 1 + 2 * b * s2
    return -0.5 * math.log(d) + (a * a * s2 + 2 * a * m - 2 * b * m * m) / (2 * d)


def test_single_neuron_closed_form():
    p = ModelParams(n=0, T=1, j_bar=0.8, sigma=1.1, gamma=0.3, theta_bar=0.2)
    u = PathConfiguration(0, 1, np.array([[0.7, 1.4]]))
    exact = closed_form_single(u.values, p, 0.6)
    K = CorrelationKernel.dirac(0.6)
    assert rn_analytic(u, K, p) == pytest.approx(exact, abs=1e-12)
    est, se = rn_mc_estimate(u, K, p, 100_000, seed=5)
    assert abs(est - exact) < 3 * se


def test_rn_identity_desk_scale():
    p = ModelParams(n=1, T=2, theta_std=0.3)
    u = simulate_reference(p, seed=21)
    r = rn_check(u, SEP, p, 100_000, seed=22)
    assert r.mc_stderr > 0
    assert abs(r.z_score) < 3


def test_rn_analytic_shift_invariant():
    p = ModelParams(n=2, T=2, theta_std=0.2)
    u = simulate_reference(p, seed=4)
    base = rn_analytic(u, SEP, p)
    for m in range(1, 5):
        assert rn_analytic(shift(u, m), SEP, p) == pytest.approx(base, abs=1e-12)


def test_thread_count_does_not_change_estimates():
    p = ModelParams(n=1, T=2)
    u = simulate_reference(p, seed=0)
    assert rn_mc_estimate(u, SEP, p, 5000, 9, threads=1) == rn_mc_estimate(u, SEP, p, 5000, 9, threads=4)
    a = pushforward_check(Functional("mean_f"), SEP, p, 3000, 9, threads=1)
    b = pushforward_check(Functional("mean_f"), SEP, p, 3000, 9, threads=3)
    assert (a.lhs, a.rhs, a.z_score) == (b.lhs, b.rhs, b.z_score)


def test_sample_guard():
    p = ModelParams(n=0, T=1)
    with pytest.raises(ConfigError):
        rn_mc_estimate(simulate_reference(p, 0), SEP, p, 1, 0)


def test_functionals():
    p = ModelParams(n=1, T=2, j_bar=2.0)
    x = np.arange(9.0).reshape(3, 3) / 4
    f = p.gain(x)
    assert Functional("one")(x, p) == 1.0
    assert Functional("mean_f", t=1)(x, p) == pytest.approx(f[:, 1].mean())
    lag = Functional("lag_corr", t=2, lag=1)(x, p)
    assert lag == pytest.approx(np.mean(f[:, 2] * np.roll(f[:, 2], -1)))
    c = p.j_bar * f[:, :2].mean(axis=0)
    assert Functional("halfspace", weights=(1.0, -1.0), offset=0.0)(x, p) == float(c[0] - c[1] >= 0)
    with pytest.raises(ConfigError):
        Functional("median")(x, p)


def test_pushforward_degenerate_exact():
    p = ModelParams(n=1, T=2, j_bar=0.0)
    r = pushforward_check(Functional("one"), ZERO, p, 2000, seed=3)
    assert r.lhs == 1.0 and r.rhs == 1.0 and r.z_score == 0.0


def test_pushforward_normalization():
    p = ModelParams(n=1, T=2)
    r = pushforward_check(Functional("one"), SEP, p, 100_000, seed=31)
    assert abs(r.lhs - 1.0) < 3 * r.lhs_stderr
    assert not r.unreliable


def test_pushforward_mean_f_dirac():
    p = ModelParams(n=1, T=2)
    r = pushforward_check(Functional("mean_f", t=1), CorrelationKernel.dirac(0.25), p, 100_000, seed=41)
    assert abs(r.z_score) < 3


def test_unreliable_flag():
    p = ModelParams(n=1, T=2)
    r = pushforward_check(Functional("one"), SEP, p, 500, seed=1, warn_nats=1e-3)
    assert r.unreliable
