from fractions import Fraction

import numpy as np
import pytest

from artifact.concepts import gaussian, make_instance, sample_w_star
from artifact.discretizer import DiscretizationParams, tau_bound, theorem_params
from artifact.errors import AmplificationExhausted, MissingCoordinate, ToleranceTooLarge, ZeroDenominator
from artifact.euclid import candidate_periods, continued_fraction_convergents, kronecker_block_bound
from artifact.period_finder import (PeriodFindingResult, find_period_coordinate, reconstruct_w,
                                    round_candidates, simple_case_amplified, simple_case_recover,
                                    verify_period_nonuniform, verify_period_uniform)
from artifact.qsq_oracle import NoiseModel, Oracle


def _fracs(b, c):
    return [(cv.numerator, cv.denominator) for cv in continued_fraction_convergents(b, c)]


def test_convergents_examples():
    assert _fracs(355, 113) == [(3, 1), (22, 7), (355, 113)]
    assert _fracs(8, 5) == [(1, 1), (2, 1), (3, 2), (8, 5)]
    assert _fracs(1, 1) == [(1, 1)]


def test_convergents_zero_denominator():
    with pytest.raises(ZeroDenominator):
        continued_fraction_convergents(3, 0)


def test_convergents_best_approximation():
    # every b/c with |b/c - x| < 1/(2c^2) is a convergent
    rng = np.random.default_rng(0)
    for _ in range(200):
        num, den = int(rng.integers(1, 10**6)), int(rng.integers(1, 10**6))
        x = Fraction(num, den)
        cvs = set(_fracs(num, den))
        for c in rng.integers(1, 10**4, 30):
            b = round(x * int(c))
            if b > 0 and abs(Fraction(b, int(c)) - x) < Fraction(1, 2 * int(c) ** 2):
                f = Fraction(b, int(c))
                assert (f.numerator, f.denominator) in cvs


def test_candidate_periods_example():
    cvs = continued_fraction_convergents(3, 7)
    # b_i q / alpha for q = 70, alpha = 3
    # convergents 0/1, 1/2, 3/7 give b q / alpha = 0, 70/3, 70
    assert candidate_periods(cvs, 3, 70) == [23, 24, 70]
    assert candidate_periods(cvs, 3, 70, radius=30) == [23, 24]
    with pytest.raises(ValueError):
        candidate_periods(cvs, 0, 70)


def test_kronecker_bound_vs_brute():
    for nu in (Fraction(355, 1130), Fraction(7, 19), Fraction(1, 3)):
        for N in (1, 5, 17, 60):
            pts = np.array([float((n * nu) % 1) for n in range(N)])
            worst = 0
            for a in np.linspace(0, 1, 101):
                for b in np.linspace(a, 1, 51):
                    worst = max(worst, abs(np.sum((pts >= a) & (pts < b)) - N * (b - a)))
            assert worst <= kronecker_block_bound(nu, N) + 1e-9


def test_round_candidates_contains_period():
    q, S = 10**6, Fraction(3217, 7)
    y1, y2 = 5 * q / S, 3 * q / S
    lo, hi = 100, 1000
    c = round_candidates(y1 + Fraction(1, 4), y2 - Fraction(1, 3), q, lo, hi)
    assert int(S) in c or int(S) + 1 in c


def test_simple_case_recover():
    q, S = 144, 9
    assert simple_case_recover(Fraction(2 * q, S), q, 9) == 9
    assert simple_case_recover(Fraction(3 * q, S), q, 9) == 3
    assert simple_case_recover(0, q, 9) == 0
    assert simple_case_amplified([Fraction(3 * q, S), Fraction(2 * q, S)], q, 9) == 9


def _ver_instance(i, nonuniform):
    rng = np.random.default_rng(100 + i)
    d, D = 1 + i % 2, 1 + i % 3
    R_w = float(rng.uniform(0.5, 2.0))
    w = sample_w_star(d, R_w, i) if d > 1 else np.array([R_w])
    b = np.sort(rng.dirichlet(np.ones(D)))[::-1]
    inst = make_instance(d, R_w, D, w, b)
    _, ver, tau = theorem_params(d, D, R_w, 0.2, nonuniform=nonuniform)
    return inst, ver, tau


def test_verify_uniform_examples():
    inst, ver, tau = _ver_instance(0, False)
    oracle = Oracle(inst, noise=NoiseModel(tau, "adversarial", 0))
    S = ver.M1 / inst.w_star[0]
    assert verify_period_uniform(inst, ver, 0, int(round(S)), oracle)
    assert not verify_period_uniform(inst, ver, 0, int(round(S / 2)), oracle)
    big = Oracle(inst, noise=NoiseModel(10 * tau_bound(ver.M1, ver.M2, inst.cap_D, inst.R_w), "random"))
    with pytest.raises(ToleranceTooLarge):
        verify_period_uniform(inst, ver, 0, int(round(S)), big)


def test_verify_uniform_vs_nonuniform_agree():
    for i in range(20):
        # M2 = 16D lies inside both the uniform and the non-uniform windows
        inst, ver, _ = _ver_instance(i, True)
        D = inst.cap_D
        ver = DiscretizationParams(ver.M1, 16 * D, ver.R_tilde, 1, "verification", True)
        tau = min(tau_bound(ver.M1, ver.M2, D, inst.R_w), tau_bound(ver.M1, ver.M2, D, inst.R_w, nonuniform=True))
        R_max = ver.R_tilde * ver.M1 * inst.cap_D
        dist = gaussian([2 * np.sqrt(np.pi) * R_max] * inst.d, R_max)
        ou = Oracle(inst, None, NoiseModel(tau, "adversarial", i))
        on = Oracle(inst, dist, NoiseModel(tau, "adversarial", i))
        S = ver.M1 / inst.w_star[0]
        for T in (int(np.floor(S)), int(np.ceil(2 * S)), int(round(1.5 * S)), int(round(S / 3))):
            assert verify_period_uniform(inst, ver, 0, T, ou, seed=i) == \
                verify_period_nonuniform(inst, ver, 0, T, on, seed=i)


def _find(seed):
    inst = make_instance(1, 1.0, 1, [1.0], [1.0])
    four, ver, tau = theorem_params(1, 1, 1.0, 0.5)
    oracle = Oracle(inst, noise=NoiseModel(tau, "random", seed))
    return inst, four, oracle, find_period_coordinate(inst, four, ver, 0, oracle, seed=seed)


def test_find_period_simple_case_and_replay():
    inst, four, oracle, res = _find(3)
    assert res.accepted and abs(four.M1 / res.a - 1.0) <= 1.0 / res.a
    assert res.qsq_count == oracle.count
    tested = sum(len(t["tested"]) for t in res.trace)
    assert res.qsq_count == 2 * res.attempts + inst.cap_D * tested
    _, _, _, again = _find(3)
    assert again.a == res.a and again.trace == res.trace


def test_find_period_exhausted():
    inst = make_instance(1, 1.0, 1, [1.0], [1.0])
    four, ver, tau = theorem_params(1, 1, 1.0, 0.5)
    oracle = Oracle(inst, noise=NoiseModel(tau, "random", 0))
    # lo > hi leaves no admissible candidate
    bad = DiscretizationParams(four.M1, four.M2, 2, 1, "fourier")
    with pytest.raises(AmplificationExhausted):
        find_period_coordinate(inst, bad, ver, 0, oracle, max_attempts=3)


def test_reconstruct_w():
    rs = [PeriodFindingResult(0, 100, True), PeriodFindingResult(1, 250, True)]
    assert np.allclose(reconstruct_w(rs, 500), [5.0, 2.0])
    with pytest.raises(MissingCoordinate):
        reconstruct_w(rs[:1], 500, d=2)
    with pytest.raises(MissingCoordinate):
        reconstruct_w([rs[0], PeriodFindingResult(1)], 500)
