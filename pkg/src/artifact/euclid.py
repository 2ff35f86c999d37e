"""Continued fractions, convergents and Kronecker-sequence discrepancy bounds."""
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .errors import ZeroDenominator


@dataclass(frozen=True)
class Convergent:
    numerator: int
    denominator: int
    index: int


def partial_quotients(b, c):
    """Partial quotients of b/c via Euclid's algorithm (exact integers)."""
    if c == 0:
        raise ZeroDenominator("continued fraction of b/0")
    out = []
    while c:
        a, r = divmod(b, c)
        out.append(a)
        b, c = c, r
    return out


def continued_fraction_convergents(b, c):
    b, c = int(b), int(c)
    if c == 0:
        raise ZeroDenominator("continued fraction of b/0")
    if b <= 0 or c < 0:
        raise ValueError("need b, c > 0")
    out = []
    p0, q0, p1, q1 = 1, 0, 0, 1
    for i, a in enumerate(partial_quotients(b, c)):
        p0, p1 = a * p0 + p1, p0
        q0, q1 = a * q0 + q1, q0
        if q0 == 0:
            continue
        out.append(Convergent(p0, q0, len(out)))
    return out


def convergents_of(x: Fraction):
    return continued_fraction_convergents(x.numerator, x.denominator)


def candidate_periods(convergents, alpha, q, radius=None):
    """floor and ceil of b_i q / alpha for every convergent b_i/c_i, deduplicated and sorted."""
    alpha = Fraction(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    out = set()
    for cv in convergents:
        t = Fraction(cv.numerator * int(q)) / alpha
        lo = t.numerator // t.denominator
        for v in (lo, lo if t.denominator == 1 else lo + 1):
            if v >= 1 and (radius is None or v <= radius):
                out.add(int(v))
    return sorted(out)


def ostrowski_digits(nu: Fraction, N, monotone=False):
    """(sum_{i>=1} b_i, b_0) of the greedy Ostrowski expansion N = sum_i b_i q_i.

    A block of q_i >= 2 consecutive points of {theta0 + n nu} has extreme
    discrepancy count at most 2; the b_0 leftover points are single points.
    monotone=True returns bounds valid for every N' <= N (used with weights).
    """
    N = int(N)
    if N <= 0:
        return 0, 0
    nu = nu - (nu.numerator // nu.denominator)
    if nu == 0:
        return 0, N
    a = partial_quotients(nu.numerator, nu.denominator)[1:]
    qs = [1]
    q_prev = 0
    for ai in a:
        q_new = ai * qs[-1] + q_prev
        q_prev = qs[-1]
        if q_new > N:
            break
        qs.append(q_new)
    k = len(qs) - 1
    if monotone:
        if k == 0:
            return 0, N
        return N // qs[k] + sum(a[1:k]), a[0]
    digits = []
    rem = N
    for qi in reversed(qs):
        digits.append(rem // qi)
        rem %= qi
    digits = digits[::-1]
    return sum(digits[1:]), digits[0]


def kronecker_block_bound(nu: Fraction, N):
    """Upper bound on N * D_N for N consecutive points of {theta0 + n nu}, any theta0."""
    multi, single = ostrowski_digits(nu, N, monotone=True)
    return 2 * multi + single


def lcm(a, b):
    return a * b // gcd(a, b)
