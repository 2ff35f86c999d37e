"""Truncated, discretized target h(x) = floor(M2m g(x/M1m))/M2m and its pseudoperiodicity."""
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from math import ceil, pi, sqrt

import numpy as np
from scipy.optimize import brentq

from .errors import InfeasibleScale, OutOfDomain


@dataclass(frozen=True)
class DiscretizationParams:
    M1: int
    M2: int
    R_tilde: int
    m: int = 1
    mode: str = "fourier"          # "fourier": R = R_tilde; "verification": R = R_tilde * M1m
    theorem_mode: bool = False

    @property
    def c(self):
        return Fraction(self.M2, self.M1)

    @property
    def M1m(self):
        return self.m * self.M1

    @property
    def M2m(self):
        return self.m * self.M2

    @property
    def radius(self):
        return self.R_tilde if self.mode == "fourier" else self.R_tilde * self.M1m

    def harmonic(self, m):
        return replace(self, m=m)

    def to_dict(self):
        return {"M1": self.M1, "M2": self.M2, "R_tilde": self.R_tilde, "m": self.m,
                "mode": self.mode, "theorem_mode": self.theorem_mode}


@dataclass(frozen=True)
class DiscretizedSample:
    numerator: int
    scale: int

    @property
    def value(self):
        return Fraction(self.numerator, self.scale)


def g_tilde(beta, theta):
    theta = np.asarray(theta, dtype=float)
    j = np.arange(1, len(beta) + 1)
    return np.cos(2 * np.pi * np.multiply.outer(theta, j)) @ np.asarray(beta)


SNAP = 1e-9


def h_numerator(beta, M2m, theta):
    """floor(M2m * g~(theta)), floor toward -inf, as integers.

    Values within SNAP of an integer are read as exact level hits, so the floor
    does not depend on last-bit rounding of theta.
    """
    v = M2m * g_tilde(beta, theta)
    r = np.rint(v)
    v = np.where(np.abs(v - r) < SNAP, r, v)
    return np.floor(v).astype(np.int64)


def theta_of(instance, M1m, x):
    """x.w / M1m reduced mod 1, for integer points x of shape (..., d)."""
    x = np.asarray(x)
    t = x @ (instance.w_star / M1m)
    return t - np.floor(t)


def h_values(instance, params, x):
    """Integer numerators of h at integer points x (no domain check)."""
    return h_numerator(instance.beta_star, params.M2m, theta_of(instance, params.M1m, x))


def _check_domain(x, R):
    x = np.asarray(x)
    if np.any(x < -R) or np.any(x >= R):
        raise OutOfDomain(f"point outside [-{R}, {R})")


def discretize_value(instance, params, x):
    x = np.asarray(x, dtype=np.int64).reshape(instance.d)
    _check_domain(x, params.radius)
    num = int(h_values(instance, params, x))
    return DiscretizedSample(num, params.M2m)


def pseudoperiod_fraction(instance, params, j, ell_values=(-3, -2, -1, 1, 2, 3), base=None):
    """Fraction of k in {0..floor(S)} with h(k + floor/ceil(l S) e_j) = h(k) for every l."""
    d = instance.d
    base = np.zeros(d, dtype=np.int64) if base is None else np.asarray(base, dtype=np.int64)
    S = Fraction(params.M1m) / Fraction(instance.w_star[j])
    R = params.radius
    ks = np.arange(0, int(S) + 1, dtype=np.int64)

    def h_at(kj):
        X = np.tile(base, (len(kj), 1))
        X[:, j] = kj
        _check_domain(X, R)
        return h_values(instance, params, X)

    h0 = h_at(ks)
    ok = np.ones(len(ks), dtype=bool)
    for ell in ell_values:
        t = ell * S
        lo = t.numerator // t.denominator
        hi = lo if t.denominator == 1 else lo + 1
        ok &= (h_at(ks + lo) == h0) | (h_at(ks + hi) == h0)
    return float(np.mean(ok))


# ---------------------------------------------------------------- step structure of h~

def _critical_points(beta):
    """Zeros of g~'(theta) on [0,1): roots of sum_j j beta_j (z^{D+j} - z^{D-j})."""
    D = len(beta)
    coef = np.zeros(2 * D + 1)
    for j, b in enumerate(beta, start=1):
        coef[D + j] += j * b
        coef[D - j] -= j * b
    pts = [0.0, 0.5]
    nz = np.flatnonzero(coef)
    if len(nz):
        poly = coef[nz[0]:nz[-1] + 1][::-1]
        if len(poly) > 1:
            for z in np.roots(poly):
                if abs(abs(z) - 1) < 1e-6:
                    pts.append(float(np.angle(z) / (2 * np.pi) % 1.0))

    def dg(t):
        return -sum(j * b * np.sin(2 * np.pi * j * t) for j, b in enumerate(beta, start=1))

    grid = np.linspace(0, 1, 256 * D + 1)
    vals = np.array([dg(t) for t in grid])
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        pts.append(brentq(dg, grid[i], grid[i + 1], xtol=1e-15))
    pts = np.sort(np.mod(pts, 1.0))
    keep = [pts[0]]
    for p in pts[1:]:
        if p - keep[-1] > 1e-12:
            keep.append(p)
    if 1.0 - keep[-1] + keep[0] < 1e-12 and len(keep) > 1:
        keep.pop()
    return np.array(keep)


@lru_cache(maxsize=256)
def _steps_cached(beta, M2m):
    beta = np.array(beta)
    crit = _critical_points(beta)
    cuts = list(crit)
    ext = np.append(crit, crit[0] + 1.0)
    for a, b in zip(ext[:-1], ext[1:]):
        ga, gb = g_tilde(beta, a), g_tilde(beta, b)
        lo, hi = sorted((ga, gb))
        for lev in range(int(np.ceil(M2m * lo)), int(np.floor(M2m * hi)) + 1):
            L = lev / M2m
            if lo < L < hi:
                cuts.append(brentq(lambda t: g_tilde(beta, t) - L, a, b, xtol=1e-15) % 1.0)
    cuts = np.unique(np.mod(cuts, 1.0))
    return cuts


def step_breakpoints(beta, M2m):
    """Sorted points of [0,1) where h~ may be discontinuous (level crossings and extrema)."""
    return _steps_cached(tuple(float(b) for b in beta), int(M2m))


def step_function(beta, M2m, shifts=(0.0,)):
    """Step description of prod_s h~(theta + s) on the circle.

    Returns (points, seg_len, seg_val, pt_val): breakpoints, segment lengths and
    values (segment i runs from points[i] to points[i+1], cyclically) and the
    values taken at the breakpoints themselves, all in units of numerators.
    """
    base = step_breakpoints(beta, M2m)
    pts = np.unique(np.concatenate([np.mod(base - s, 1.0) for s in shifts]))
    nxt = np.append(pts[1:], pts[0] + 1.0)
    seg_len = nxt - pts
    mid = pts + seg_len / 2

    def prod(t):
        out = np.ones_like(t)
        for s in shifts:
            out = out * h_numerator(beta, M2m, t + s)
        return out

    return pts, seg_len, prod(mid).astype(float), prod(pts).astype(float)


def circular_variation(seg_val, pt_val):
    """Total variation around the circle of a step function including point values."""
    seq = np.empty(2 * len(seg_val))
    seq[0::2] = pt_val
    seq[1::2] = seg_val
    return float(np.sum(np.abs(np.diff(np.append(seq, seq[0])))))


# ---------------------------------------------------------------- theorem-mode schedule

def theorem_m1(d, D, R_w, eps1, nonuniform=False):
    """M1 = max(70 pi d D^3 R_w, R_w^2/eps1) (d^2 for the non-uniform case), plus R_w.

    Also large enough that an integer M2 fits between its lower bound and M1/(8 pi D R_w).
    """
    dd = d**2 if nonuniform else d
    lo = 63 * D / 5 if nonuniform else 40 * D / 7
    window = 8 * pi * D * R_w * (int(np.floor(lo)) + 2)
    return int(ceil(max(70 * pi * dd * D**3 * R_w, R_w**2 / eps1 + R_w, window)))


def tau_bound(M1, M2, D, R_w, nonuniform=False):
    s = (2 * pi * R_w / M1) ** 2 / 8
    if nonuniform:
        return min((5 / (42 * D) - 3 / (2 * M2)) / M2**2,
                   (2 / 9 - s + 3 * D**2 / M2) / (2 * D**2 * M2**2))
    return min((7 / (40 * D) - 1 / M2) / M2**2,
               (2 / 15 - s + 2 * D**2 / M2) / (2 * D**2 * M2**2))


def choose_m2(M1, D, R_w, nonuniform=False):
    """M2 balancing the completeness and soundness margins, clamped to the feasible window."""
    lo = 63 * D / 5 if nonuniform else 40 * D / 7
    hi = M1 / (8 * pi * D * R_w)
    lo_i, hi_i = int(np.floor(lo)) + 1, int(np.ceil(hi)) - 1
    if lo_i > hi_i:
        raise InfeasibleScale(f"no integer M2 in ({lo:.3f}, {hi:.3f}) for M1={M1}")
    target = round((35 if nonuniform else 11) * D)
    return int(min(max(target, lo_i), hi_i))


def verification_r_tilde(d, D, R_w):
    return int(ceil(max(39 * sqrt(d) / (4 * pi * R_w), 54 * D**2 * sqrt(d) / (pi * R_w))))


def fourier_r_tilde(M1, d, R_w, tau):
    A = Fraction(M1 * d**2) / Fraction(R_w)
    v = 6 * (Fraction(1, 2) + Fraction(tau)) * A * A
    return -(-v.numerator // v.denominator)


def theorem_params(d, D, R_w, eps1, nonuniform=False, M1=None):
    """(fourier params, verification params, tau) from the guarantee formulas."""
    M1 = M1 or theorem_m1(d, D, R_w, eps1, nonuniform)
    M2 = choose_m2(M1, D, R_w, nonuniform)
    tau = tau_bound(M1, M2, D, R_w, nonuniform)
    rt = fourier_r_tilde(M1, d, R_w, tau)
    four = DiscretizationParams(M1, M2, rt, 1, "fourier", True)
    # one R~ serves both stages; the larger one keeps the sum-to-integral budget negligible
    ver = DiscretizationParams(M1, M2, max(rt, verification_r_tilde(d, D, R_w)), 1, "verification", True)
    return four, ver, tau
