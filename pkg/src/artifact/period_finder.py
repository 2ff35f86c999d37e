"""Hallgren-style period finding: Fourier samples, convergents, candidates, verification."""
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, log

import numpy as np

from .concepts import audit_assumptions
from .discretizer import tau_bound
from .errors import (AmplificationExhausted, AssumptionAuditFailed,
                     MissingCoordinate, ToleranceTooLarge)
from .euclid import Convergent, candidate_periods, continued_fraction_convergents, convergents_of, lcm

__all__ = ["Convergent", "PeriodFindingResult", "candidate_periods", "continued_fraction_convergents",
           "verify_period_uniform", "verify_period_nonuniform", "find_period_coordinate",
           "reconstruct_w", "simple_case_recover", "simple_case_amplified"]


@dataclass
class PeriodFindingResult:
    coordinate: int
    a: int = None
    accepted: bool = False
    attempts: int = 0
    qsq_count: int = 0
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {"coordinate": self.coordinate, "a": self.a, "accepted": self.accepted,
                "attempts": self.attempts, "qsq_count": self.qsq_count}


# ---------------------------------------------------------------- verification

def _step4_extra(M1, R_w):
    return (2 * np.pi * R_w / M1) ** 2 / 8


def uniform_thresholds(M1, M2, D, R_w):
    t1 = (21 / (40 * D) - 3 / M2) / M2**2
    t2 = ((20 / 39) * D + (2 / 15 - _step4_extra(M1, R_w) + 2 * D**2 / M2) / (2 * D)) / M2**2
    return t1, t2


def nonuniform_thresholds(M1, M2, D, R_w):
    t1 = (5 / (14 * D) - 9 / (2 * M2)) / M2**2
    t2 = ((13 / 25) * D + (2 / 9 - _step4_extra(M1, R_w) + 3 * D**2 / M2) / (2 * D)) / M2**2
    return t1, t2


def _verify(instance, params, k, T, oracle, thresholds, seed):
    D = instance.cap_D
    t1, t2 = thresholds
    alphas = []
    for m in range(1, D + 1):
        hint = float(t1) if m == 1 else "up"
        r = oracle.shift_correlation(params, k, T, m=m, seed=hash((seed, k, int(T), m)) & 0xFFFFFFFF,
                                     hint=hint)
        alphas.append(r.alpha)
    ok = float(alphas[0]) >= t1 and float(sum(alphas)) <= t2
    return ok, alphas


def verify_period_uniform(instance, params, k, T, oracle, seed=0, return_alphas=False):
    """Shift-correlation test: yes iff alpha_1 >= t1 and sum_m alpha_m <= t2."""
    M1, M2, D = params.M1, params.M2, instance.cap_D
    bound = tau_bound(M1, M2, D, instance.R_w)
    if oracle.noise.tau > bound:
        raise ToleranceTooLarge(f"tau = {oracle.noise.tau:.3e} exceeds {bound:.3e}")
    ok, alphas = _verify(instance, params, k, T, oracle, uniform_thresholds(M1, M2, D, instance.R_w), seed)
    return (ok, alphas) if return_alphas else ok


def verify_period_nonuniform(instance, params, k, T, oracle, seed=0, return_alphas=False, audit=True):
    M1, M2, D = params.M1, params.M2, instance.cap_D
    if audit and oracle.dist is not None:
        R_max = params.R_tilde * M1 * D
        rep = audit_assumptions(oracle.dist.with_radius(R_max), M1, D, instance.R_w, d=instance.d)
        if not rep.ok:
            raise AssumptionAuditFailed(str(rep.to_dict()))
    bound = tau_bound(M1, M2, D, instance.R_w, nonuniform=True)
    if oracle.noise.tau > bound:
        raise ToleranceTooLarge(f"tau = {oracle.noise.tau:.3e} exceeds {bound:.3e}")
    ok, alphas = _verify(instance, params, k, T, oracle, nonuniform_thresholds(M1, M2, D, instance.R_w), seed)
    return (ok, alphas) if return_alphas else ok


# ---------------------------------------------------------------- full loop

def _centred_abs(y, q):
    y = Fraction(y) % q
    return q - y if y > Fraction(q, 2) else y


def round_candidates(y1, y2, q, lo, hi):
    """Candidate periods from two noisy samples, consistent between both samples."""
    a, b = _centred_abs(y1, q), _centred_abs(y2, q)
    if a < 1 or b < 1:
        return []
    out = set()
    for cv in convergents_of(a / b):
        s1 = Fraction(cv.numerator * q) / a
        s2 = Fraction(cv.denominator * q) / b
        if abs(s1 - s2) > 2:
            continue
        for t in candidate_periods([cv], a, q):
            if t >= 2 and lo <= t <= hi:
                out.add(t)
    return sorted(out)


def find_period_coordinate(instance, four_params, ver_params, j, oracle, delta=0.1, C=2.0,
                           max_attempts=None, nonuniform=False, seed=0):
    """Repeat {two samples -> convergents -> candidates -> verification} until acceptance."""
    d, R_w, D = instance.d, instance.R_w, instance.cap_D
    A = four_params.M1 * d**2 / R_w
    rounds = int(ceil(C * log(1 / delta) * log(A) ** 4))
    if max_attempts is not None:
        rounds = min(rounds, int(max_attempts))
    q = 2 * four_params.radius
    lo = four_params.M1 / R_w - 1
    hi = four_params.M1 * d**2 / R_w + 1
    verify = verify_period_nonuniform if nonuniform else verify_period_uniform
    res = PeriodFindingResult(j)
    for r in range(rounds):
        y1 = oracle.fourier_sample(four_params, j, seed=hash((seed, j, r, 0)) & 0xFFFFFFFF)
        y2 = oracle.fourier_sample(four_params, j, seed=hash((seed, j, r, 1)) & 0xFFFFFFFF)
        res.qsq_count += 2
        res.attempts = r + 1
        cands = round_candidates(y1, y2, q, lo, hi)
        tested = []
        for t in cands:
            res.qsq_count += D
            ok = verify(instance, ver_params, j, t, oracle, seed=hash((seed, j, r)) & 0xFFFFFFFF)
            tested.append((t, bool(ok)))
            if ok:
                res.a, res.accepted = t, True
                break
        res.trace.append({"round": r, "y1": str(y1), "y2": str(y2), "tested": tested})
        if res.accepted:
            return res
    raise AmplificationExhausted(f"coordinate {j}: no candidate accepted in {rounds} rounds", res.trace)


def reconstruct_w(results, M1, d=None):
    d = d if d is not None else len(results)
    by = {r.coordinate: r for r in results if r is not None}
    out = np.empty(d)
    for j in range(d):
        r = by.get(j)
        if r is None or not r.accepted or r.a is None:
            raise MissingCoordinate(f"coordinate {j} has no accepted period")
        out[j] = M1 / r.a
    return out


# ---------------------------------------------------------------- simple case (integer period)

def simple_case_recover(y, q, A):
    """Denominator of the last convergent of y/q with denominator <= A (0 if none)."""
    y = _centred_abs(y, q)
    if y == 0:
        return 0
    best = 0
    for cv in convergents_of(Fraction(y) / q):
        if cv.denominator <= A:
            best = cv.denominator
    return best


def simple_case_amplified(samples, q, A):
    """Period estimate from several shots.

    Each shot yields a divisor of S (or a spurious value under noise). Candidates are the
    recovered denominators and their pairwise lcms up to A; the winner explains the most
    shots (its multiples included), ties going to the larger candidate.
    """
    dens = [s for s in (simple_case_recover(y, q, A) for y in samples) if s]
    if not dens:
        return 0
    cands = set(dens)
    for i, a in enumerate(dens):
        for b in dens[i + 1:]:
            m = lcm(a, b)
            if m <= A:
                cands.add(m)
    return max(cands, key=lambda c: (sum(c % s == 0 for s in dens), c))
