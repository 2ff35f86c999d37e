import csv

import numpy as np
import pytest

from artifact.concepts import build_packing_net, uniform
from artifact.errors import UnsupportedKind
from artifact.hardness_bench import (average_correlation, correlation_matrix, default_gaussian,
                                     gaussian_cos_expectation, gradient_concentration_experiment,
                                     pair_bound, pair_correlation, sda_proxy, write_concentration_csv,
                                     write_correlations_csv)


def test_gaussian_cos_expectation():
    assert gaussian_cos_expectation([0.0, 0.0], 1.0) == 1.0
    x = np.random.default_rng(0).normal(0, 0.5, (400000, 2))
    t = np.array([1.0, -2.0])
    assert abs(gaussian_cos_expectation(t, 0.5) - np.mean(np.cos(x @ t))) < 5e-3
    with pytest.raises(ValueError):
        gaussian_cos_expectation(t, 0.0)


def test_singleton_rho():
    w, s = np.array([0.3, 0.4]), 0.7
    rep = average_correlation([w], s, 0.5)
    assert rep.rho == pytest.approx(0.5 * (1 + np.exp(-8 * np.pi**2 * s**2 * (w @ w))))
    assert rep.violations == 0 and rep.max_offdiag == 0.0


def test_matrix_matches_pairs():
    net = build_packing_net(3, 1.0, 0.51, 64, seed=0)
    C = correlation_matrix(net, 0.4)
    for i in range(len(net)):
        for j in range(len(net)):
            assert C[i, j] == pytest.approx(pair_correlation(net[i], net[j], 0.4), abs=1e-14)


def test_rho_bound_and_pair_bound():
    R_w, s = 1.0, 0.5
    net = build_packing_net(4, R_w, 0.51, 128, seed=1)
    rep = average_correlation(net, s, R_w)
    n = rep.size
    assert rep.rho <= np.max(np.diag(rep.matrix)) / n + rep.max_offdiag + 1e-15
    assert rep.violations == 0 and rep.max_offdiag <= pair_bound(s, R_w)


def test_sda_proxy_monotone_in_gamma():
    net = build_packing_net(5, 1.0, 0.51, 256, seed=2)
    rep = average_correlation(net, 0.6, 1.0)
    vals = [sda_proxy(rep, g) for g in (1e-3, 1e-2, 0.1, 0.6)]
    assert vals == sorted(vals) and vals[-1] >= 1


def test_csv_writers(tmp_path):
    net = build_packing_net(2, 1.0, 0.51, 16, seed=0)
    rep = average_correlation(net, 0.5, 1.0)
    p = tmp_path / "c.csv"
    write_correlations_csv(p, rep)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["w_index", "v_index", "value", "bound"]
    assert len(rows) == 1 + rep.size * (rep.size - 1)
    rows_c = [{"d": 2, "variance": 0.1, "n": 3}]
    write_concentration_csv(tmp_path / "g.csv", rows_c)
    assert list(csv.reader(open(tmp_path / "g.csv")))[0] == ["d", "variance", "n"]


def test_concentration_deterministic_and_unsupported():
    args = ([2, 4], 1.0, 2, default_gaussian(0.6), [0.6, 0.4])
    a = gradient_concentration_experiment(*args, trials=2, seed=5)
    b = gradient_concentration_experiment(*args, trials=2, seed=5)
    assert a == b and all(r["variance"] >= 0 for r in a)
    with pytest.raises(ValueError):
        gradient_concentration_experiment([2], 1.0, 2, default_gaussian(0.6), [1.0])
    from artifact.concepts import logistic
    with pytest.raises(UnsupportedKind):
        gradient_concentration_experiment([2], 1.0, 1, logistic(1.0, 10), [1.0])
    assert gradient_concentration_experiment([2], 1.0, 1, uniform(10.0), [1.0])[0]["n"] >= 1
