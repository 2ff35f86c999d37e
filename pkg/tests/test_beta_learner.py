import numpy as np
import pytest

from artifact.beta_learner import (COS_SIN, GdConfig, MomentRequest, cos_moment, eps2_for, fit_beta,
                                   gradient, loss, moment_matrix, moments, steps_for, theorem_schedule)
from artifact.concepts import gaussian, make_instance, sample_w_star, uniform
from artifact.errors import NonConvergence


def _mc(dist_sampler, f, n=400000, seed=0):
    x = dist_sampler(np.random.default_rng(seed), n)
    return float(np.mean(f(x)))


def test_cos_sin_vanishes_on_symmetric():
    for dist in (uniform(5.0), gaussian([2.0, 3.0], None)):
        v = cos_moment(MomentRequest(2, 1, (0.3, 0.4), (0.1, 0.7), COS_SIN, dist))
        assert abs(v) < 1e-12


def test_gaussian_closed_form():
    s = 0.4
    dist = gaussian([s, s], None)
    w, v = np.array([0.3, 0.5]), np.array([0.6, -0.2])
    ref = 0.5 * (np.exp(-2 * np.pi**2 * s**2 * np.sum((w - v) ** 2))
                 + np.exp(-2 * np.pi**2 * s**2 * np.sum((w + v) ** 2)))
    assert cos_moment(MomentRequest(1, 1, tuple(w), tuple(v), dist=dist)) == pytest.approx(ref, rel=1e-12)


def test_uniform_moment_matches_monte_carlo():
    R = 3.0
    dist = uniform(R)
    w, v = np.array([0.45, 0.9]), np.array([0.2, 0.7])
    val = cos_moment(MomentRequest(2, 1, tuple(w), tuple(v), dist=dist))
    ref = _mc(lambda r, n: r.uniform(-R, R, (n, 2)),
              lambda x: np.cos(4 * np.pi * x @ w) * np.cos(2 * np.pi * x @ v))
    assert abs(val - ref) < 5e-3


def test_uniform_diagonal_near_half():
    # |E[cos^2(2 pi j x.w)] - 1/2| <= 1/(8 pi j |w|_inf R) for a box of half-width R
    R_w, R = 1.0, 40
    w = sample_w_star(2, R_w, 0)
    G = moment_matrix(w, w, 3, uniform(R))
    for j in range(1, 4):
        assert abs(G[j - 1, j - 1] - 0.5) <= 1 / (8 * np.pi * j * np.max(np.abs(w)) * R)
    off = G - np.diag(np.diag(G))
    assert np.max(np.abs(off)) < 0.05


def test_loss_nonnegative_and_zero_at_target():
    rng = np.random.default_rng(0)
    dist = uniform(20.0)
    inst = make_instance(2, 1.0, 3, sample_w_star(2, 1.0, 1), [0.5, 0.3, 0.2])
    assert abs(loss(inst, inst.w_star, inst.beta_star, dist)) < 1e-12
    for _ in range(20):
        b = rng.normal(size=3)
        assert loss(inst, sample_w_star(2, 1.0, int(rng.integers(100))), b, dist) >= -1e-12


def test_gradient_matches_finite_difference():
    dist = gaussian([3.0, 3.0], None)
    inst = make_instance(2, 1.0, 2, sample_w_star(2, 1.0, 2), [0.6, 0.4])
    wh = inst.w_star + 1e-3
    b = np.array([0.1, -0.3])
    g = gradient(inst, wh, b, dist)
    h = 1e-6
    fd = [(loss(inst, wh, b + h * e, dist) - loss(inst, wh, b - h * e, dist)) / (2 * h) for e in np.eye(2)]
    assert np.allclose(g, fd, atol=1e-7)


def test_gd_recursion_exact_gradient():
    dist = uniform(30.0)
    inst = make_instance(2, 1.0, 2, sample_w_star(2, 1.0, 3), [0.7, 0.3])
    mo = moments(inst, inst.w_star, dist)
    res = fit_beta(inst, inst.w_star, dist, GdConfig(eta=0.5, t_max=6, eps=0.0, raise_on_failure=False))
    beta = np.zeros(2)
    for k, it in enumerate(res.iterates):
        assert np.allclose(it, beta)
        beta = beta - 0.5 * (2 * mo.G @ beta - 2 * mo.H.T @ inst.beta_star)
    # with near-identity moments the error contracts by about (1 - eta) per step
    errs = [e for _, _, e in res.loss_trace]
    assert errs[-1] <= 0.5**6 * errs[0] + 6 * res.eps2_actual


def test_fit_early_stop_and_nonconvergence():
    dist = uniform(30.0)
    inst = make_instance(2, 1.0, 2, sample_w_star(2, 1.0, 4), [0.7, 0.3])
    res = fit_beta(inst, inst.w_star, dist, GdConfig(eps=0.1))
    assert res.loss_trace[-1][1] <= 0.1
    with pytest.raises(NonConvergence) as ei:
        fit_beta(inst, inst.w_star, dist, GdConfig(eps=1e-12, t_max=2))
    assert len(ei.value.args) >= 1


def test_schedule_consistency():
    D, eps = 2, 0.1
    sch = theorem_schedule(2, D, 1.0, eps)
    assert sch["t"] == steps_for(D, sch["eps3"])
    assert sch["eps2"] == pytest.approx(eps2_for(D, sch["eps3"]))
    t_real = np.log(2 * np.sqrt(D) / sch["eps3"]) / np.log(2)
    assert 0.5 * t_real * sch["eps2"] == pytest.approx(sch["eps3"] / (2 * np.sqrt(D)))
    assert sch["t"] - 1 < t_real <= sch["t"]
    assert sch["R"] >= D**2 / eps
    with pytest.raises(ValueError):
        GdConfig(eta=1.0)
