"""QSQ oracle simulator for the Fourier-sampling and shift-correlation observables.

Observable normalisation: <O_{k,m}> = (1/(G M2m^2)) sum_x p(x) p(x+T e_k) h(x) h(x+T e_k)
with h in (1/M2m)Z, the shift cyclic in coordinate k, and G = sum_x p(x)^2.
"""
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import ceil, pi

import numpy as np
from scipy import integrate

from .discretizer import (circular_variation, h_numerator, h_values,
                          step_breakpoints, step_function)
from .errors import BackendBudgetExceeded, InfeasibleScale, QuadratureFailure
from .euclid import ostrowski_digits

BRUTE_MAX_POINTS = 10**7
DIRECT_SUM_MAX = 2 * 10**7
DENSE_Q_MAX = 2**22
DENSE_BUDGET = 2**27
BRAGG_HARMONICS = 2**17
FEJER_HALF_WIDTH = 4096
DYADIC_BITS = 64


# ---------------------------------------------------------------- noise

@dataclass(frozen=True)
class NoiseModel:
    tau: float = 0.0
    mode: str = "random"          # "zero" | "random" | "adversarial"
    seed: int = 0


def to_dyadic(x, bits=DYADIC_BITS):
    if isinstance(x, Fraction):
        num = x * (1 << bits)
        return Fraction(round(num), 1 << bits)
    return Fraction(round(float(x) * 2.0**bits)) / (1 << bits) if abs(x) < 2**60 else Fraction(round(x))


def perturb(value, budget, noise, rng, hint=None):
    """value + noise with |noise| <= tau - budget - 2^-bits, rounded to a dyadic rational."""
    amp = noise.tau - budget - 2.0**-DYADIC_BITS
    if noise.mode == "zero" or noise.tau == 0 or amp <= 0:
        return to_dyadic(value)
    if noise.mode == "adversarial":
        if hint is None:
            sgn = -np.sign(float(value)) or 1.0
        elif hint == "up":
            sgn = 1.0
        elif hint == "down":
            sgn = -1.0
        else:
            sgn = 1.0 if float(value) < hint else -1.0
        e = sgn * amp
    else:
        e = rng.uniform(-amp, amp)
    return to_dyadic(float(value) + e)


@dataclass
class QsqResponse:
    alpha: Fraction
    backend: str
    error_budget: float
    value: float = 0.0


@dataclass(frozen=True)
class QsqQuery:
    observable: str               # "fourier" | "shift"
    coordinate: int
    params: object
    tau: float
    shift: int = 0
    modulus: int = 0


# ---------------------------------------------------------------- 1-D building blocks

def exp_sum_1d(coord, f, radius, mode="integral", normalized=False):
    """sum_{x=-R}^{R-1} p^2(x) e^{2 pi i f x} or int_{-R}^{R} p^2(x) e^{2 pi i f x} dx.

    radius=None means untruncated (integral mode only).
    """
    if abs(f) > 1e6:
        raise ValueError("|f| must be at most 1e6")
    kind = coord.kind
    R = radius
    if mode == "integral":
        if kind == "uniform":
            if R is None:
                raise ValueError("uniform needs a finite radius")
            val = 2.0 * R if f == 0 else np.sin(2 * pi * f * R) / (pi * f)
            return complex(val / (2.0 * R) if normalized else val)
        if kind == "gaussian":
            sig = coord.sigma
            tail = 1.0 if R is None else _gauss_tail(R, sig)
            if R is None or tail < 1e-14:
                val = np.exp(-sig**2 * (2 * pi * f) ** 2 / 2)
                return complex(val if normalized else val * sig * np.sqrt(2 * pi))
        if R is None:
            lim = _effective_support(coord)
        else:
            lim = float(R)
        val = _quad_cos(coord, f, lim)
        if normalized:
            val /= _quad_cos(coord, 0.0, lim)
        return complex(val)
    # discrete sum
    R = int(R)
    if kind == "uniform" and f == 0:
        return complex(1.0 if normalized else 2 * R)
    if kind == "uniform":
        z = np.exp(2j * pi * f)
        if abs(z - 1) < 1e-15:
            s = 2 * R
        else:
            s = np.exp(-2j * pi * f * R) * (z ** (2 * R) - 1) / (z - 1)
        return complex(s / (2 * R) if normalized else s)
    if 2 * R > DIRECT_SUM_MAX:
        raise InfeasibleScale(f"discrete sum over {2 * R} points exceeds the direct-sum budget")
    x = np.arange(-R, R, dtype=float)
    w = coord.p2(x)
    s = np.sum(w * np.exp(2j * pi * f * x))
    return complex(s / w.sum() if normalized else s)


def _gauss_tail(R, sig):
    from scipy.special import erfc
    return float(erfc(R / (sig * np.sqrt(2))))


def _effective_support(coord):
    if coord.kind == "gaussian":
        return 40 * coord.sigma
    if coord.kind == "gen_gaussian":
        return coord.s * 40 ** (1 / coord.alpha) * 2
    return 80 * coord.s


def _quad_cos(coord, f, lim):
    """2 int_0^lim p^2(x) cos(2 pi f x) dx with adaptive quadrature, rel tol 1e-10."""
    omega = 2 * pi * f
    nsub = int(min(5000, 50 + abs(f) * lim * 4))
    with warnings.catch_warnings():
        # the returned error estimate is checked below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if omega == 0:
            val, err = integrate.quad(lambda t: coord.p2(t), 0, lim, limit=nsub, epsabs=0, epsrel=1e-12)
        else:
            val, err = integrate.quad(lambda t: coord.p2(t), 0, lim, weight="cos", wvar=omega,
                                      limit=nsub, epsabs=1e-300, epsrel=1e-12)
        scale = integrate.quad(lambda t: coord.p2(t), 0, lim, limit=nsub)[0]
    if err > 1e-10 * max(abs(val), 1e-3 * scale, 1e-300):
        raise QuadratureFailure(f"quadrature error {err:.2e} at f={f}")
    return 2 * val


def weighted_row_sum(func, a, b):
    """(sum_{x=a}^{b-1} func(x), error bound) with Euler-Maclaurin beyond the direct budget."""
    n = b - a
    if n <= 0:
        return 0.0, 0.0
    if n <= DIRECT_SUM_MAX:
        tot = 0.0
        step = 1 << 22
        for s in range(a, b, step):
            x = np.arange(s, min(b, s + step), dtype=float)
            tot += float(np.sum(func(x)))
        return tot, 1e-15 * n
    fa, fb = float(func(float(a))), float(func(float(b)))
    val, qerr = integrate.quad(func, float(a), float(b), limit=500, epsrel=1e-13)
    h = 1e-3 * n
    dfa = (float(func(a + h)) - float(func(a - h))) / (2 * h)
    dfb = (float(func(b + h)) - float(func(b - h))) / (2 * h)
    s = val - (fb - fa) / 2 + (dfb - dfa) / 12
    grid = np.linspace(a, b, 20001)
    df = np.gradient(func(grid), grid)
    rem = 2 * float(np.sum(np.abs(np.diff(df)))) / 12
    return s + fa, rem + qerr + abs(dfb - dfa) * 1e-3 + 1e-15 * n


# ---------------------------------------------------------------- oracle

@dataclass
class Oracle:
    instance: object
    dist: object = None                 # DistributionSpec; None means uniform
    noise: NoiseModel = field(default_factory=NoiseModel)
    backend: str = "analytic"           # "analytic" | "brute"
    analytic_mode: str = "step"         # "step" | "cosine"
    fourier_sampler: str = "auto"       # "auto" | "dense" | "bragg"
    dense_budget: int = DENSE_BUDGET
    count: int = 0
    trace: list = field(default_factory=list)

    @property
    def uniform(self):
        return self.dist is None or self.dist.kind == "uniform"

    def coord(self, j):
        from .concepts import uniform
        return (self.dist or uniform(1)).coord(j)

    def _log(self, rec):
        self.count += 1
        self.trace.append(rec)

    # ------------------------------------------------------------ shift correlation
    def shift_correlation(self, params, k, T, m=1, seed=0, hint=None, backend=None):
        backend = backend or self.backend
        p = params.harmonic(m)
        if backend == "brute":
            value, budget = brute_shift_correlation(self.instance, p, k, T, self.dist)
        elif self.analytic_mode == "cosine":
            value, budget = cosine_shift_correlation(self.instance, p, k, T, self.dist,
                                                     nonuniform=not self.uniform)
        else:
            value, budget = step_shift_correlation(self.instance, p, k, T, self.dist)
        if budget > self.noise.tau / 2:
            raise BackendBudgetExceeded(f"error budget {budget:.3e} exceeds tau/2 = {self.noise.tau / 2:.3e}")
        rng = np.random.default_rng([self.noise.seed, seed, 1])
        alpha = perturb(value, budget, self.noise, rng, hint)
        resp = QsqResponse(alpha, backend, budget, float(value))
        self._log({"observable": "shift", "coordinate": k, "shift": int(T), "harmonic": m,
                   "params": p.to_dict(), "tau": self.noise.tau, "alpha": float(alpha),
                   "backend": backend, "error_budget": budget})
        return resp

    # ------------------------------------------------------------ Fourier sampling
    def fourier_sample(self, params, j, seed=0):
        rng = np.random.default_rng([self.noise.seed, seed, 0])
        R = params.radius
        q = 2 * R
        groups = 2 * params.M2m + 1
        sampler = self.fourier_sampler
        if sampler == "auto":
            sampler = "dense" if (q <= DENSE_Q_MAX and q * groups <= self.dense_budget) else "bragg"
        if sampler == "dense":
            if q * groups > self.dense_budget:
                raise InfeasibleScale(f"q*groups = {q * groups} exceeds budget {self.dense_budget}")
            offset = self._slice_offset(params, j, rng)
            prob = fourier_distribution(self.instance, params, j, self.dist, offset)
            y = int(rng.choice(q, p=prob))
            defect = 0.0
        else:
            if not self.uniform:
                raise InfeasibleScale(f"q = {q} too large for the dense sampler with non-uniform weights")
            y, defect = bragg_sample(self.instance, params, j, rng)
        yq = self._noisy_int(y, rng)
        self._log({"observable": "fourier", "coordinate": j, "modulus": q, "params": params.to_dict(),
                   "tau": self.noise.tau, "alpha": str(yq), "backend": sampler, "error_budget": defect})
        return yq

    def _noisy_int(self, y, rng):
        if self.noise.mode == "zero" or self.noise.tau == 0:
            return Fraction(y)
        if self.noise.mode == "adversarial":
            e = self.noise.tau
        else:
            e = rng.uniform(-self.noise.tau, self.noise.tau)
        return Fraction(y) + to_dyadic(e)

    def _slice_offset(self, params, j, rng):
        """x_{-j}.w_{-j} for a slice drawn from the p^2 marginal of the other coordinates."""
        d = self.instance.d
        if d == 1:
            return 0.0
        R = params.radius
        tot = 0.0
        for i in range(d):
            if i == j:
                continue
            if self.uniform:
                xi = int(rng.integers(-R, R))
            else:
                x = np.arange(-R, R, dtype=float)
                w = self.coord(i).p2(x)
                xi = int(rng.choice(x, p=w / w.sum()))
            tot += xi * self.instance.w_star[i]
        return tot


# ---------------------------------------------------------------- brute force

def _grid(R, d):
    ax = np.arange(-R, R, dtype=np.int64)
    return np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)


def brute_shift_correlation(instance, params, k, T, dist=None):
    R, d = params.radius, instance.d
    if (2 * R) ** d > BRUTE_MAX_POINTS:
        raise InfeasibleScale(f"domain of {(2 * R) ** d} points exceeds the brute-force limit")
    X = _grid(R, d)
    Xs = X.copy()
    Xs[:, k] = (X[:, k] + T + R) % (2 * R) - R
    h0 = h_values(instance, params, X)
    h1 = h_values(instance, params, Xs)
    M4 = params.M2m ** 4
    if dist is None or dist.kind == "uniform":
        return Fraction(int(np.sum(h0 * h1)), len(X) * M4), 0.0
    w0 = np.ones(len(X))
    w1 = np.ones(len(X))
    G = 1.0
    for i in range(d):
        c = dist.coord(i)
        w0 *= c.p(X[:, i])
        w1 *= c.p(Xs[:, i])
        G *= float(np.sum(c.p2(np.arange(-R, R))))
    return float(np.sum(w0 * w1 * h0 * h1) / G / M4), 0.0


def brute_force_expectation(instance, params, observable, dist=None):
    """Exact expectation by enumeration; observable = ("shift", k, T) or ("fourier", j)."""
    if observable[0] == "shift":
        return float(brute_shift_correlation(instance, params, observable[1], observable[2], dist)[0])
    prob = fourier_distribution_full(instance, params, observable[1], dist)
    q = len(prob)
    return float(np.sum(prob * np.arange(q)) / q)


# ---------------------------------------------------------------- analytic: step mode

def _row_weights(dist, k, R, T):
    """Sum of a(x)=p_k(x)p_k(x+T) over the unwrapped and wrapped parts, G_k, and error."""
    if dist is None or dist.kind == "uniform":
        return float(2 * R - T), float(T), float(2 * R), 0.0
    c = dist.coord(k)
    sA, eA = weighted_row_sum(lambda x: c.p(x) * c.p(x + T), -R, R - T)
    sB, eB = weighted_row_sum(lambda x: c.p(x) * c.p(x + T - 2 * R), R - T, R)
    G, eG = weighted_row_sum(lambda x: c.p2(x), -R, R)
    return sA, sB, G, eA + eB + eG


EXACT_ROW_MAX = 2**24


def _exact_row(beta, M2m, theta0, nu, delta, N):
    """sum_{n<N} h~(theta0 + n nu) h~(theta0 + n nu + delta) in numerator units, exactly."""
    period = nu.denominator
    n_eval = min(N, period)
    if n_eval > EXACT_ROW_MAX:
        return None
    n = np.arange(n_eval, dtype=np.int64)
    frac_nu = nu - (nu.numerator // nu.denominator)
    # n * nu mod 1 computed in integers to avoid drift
    t = (n * frac_nu.numerator % frac_nu.denominator) / frac_nu.denominator if frac_nu.denominator < 2**62 \
        else np.mod(n * float(frac_nu), 1.0)
    t = np.mod(theta0 + t, 1.0)
    prod = h_numerator(beta, M2m, t) * h_numerator(beta, M2m, np.mod(t + delta, 1.0))
    if N <= period:
        return int(np.sum(prod))
    full, rem = divmod(N, period)
    return int(full * np.sum(prod) + np.sum(prod[:rem]))


def step_shift_correlation(instance, params, k, T, dist=None):
    """Shift correlation from the step structure of h~ with a rigorous error budget.

    Each row along coordinate k is a Kronecker sequence theta0 + n nu; its sum is
    N times the circle integral of h~(t)h~(t+delta) up to the Ostrowski/Koksma
    discrepancy bound.  Single rows (d = 1, uniform weights) are summed exactly
    whenever the sequence period or length is small enough.
    """
    R = params.radius
    T = int(T) % (2 * R)
    beta = instance.beta_star
    M2m = params.M2m
    nu = Fraction(float(instance.w_star[k])) / params.M1m
    shifts = ((2 * R - T, -R, T), (T, R - T, T - 2 * R))
    M4 = float(M2m) ** 4
    uni = dist is None or dist.kind == "uniform"
    if instance.d == 1 and uni:
        tot = 0
        for N, start, sh in shifts:
            if N == 0:
                continue
            th0 = float((start * nu) % 1)
            dl = float((sh * nu) % 1)
            r = _exact_row(beta, M2m, th0, nu, dl, N)
            if r is None:
                break
            tot += r
        else:
            value = Fraction(tot, 2 * R) / int(M2m) ** 4
            return value, 1e-15 * abs(float(value))
    sA, sB, G, werr = _row_weights(dist, k, R, T)
    value = 0.0
    disc = 0.0
    vmax = 1.0
    for (N, start, sh), wsum in zip(shifts, (sA, sB)):
        if N == 0:
            continue
        dl = float((sh * nu) % 1)
        _, L, v, pv = step_function(beta, M2m, (0.0, dl))
        integ = float(np.sum(L * v))
        V = circular_variation(v, pv)
        osc = float(max(np.max(np.abs(v - integ)), np.max(np.abs(pv - integ))))
        multi, single = ostrowski_digits(nu, N, monotone=not uni)
        value += wsum * integ
        disc += 2 * V * multi + osc * single
        vmax = max(vmax, V)
    value /= G * M4
    budget = (disc + werr * M2m**2) / (G * M4)
    budget += 1e-12 * abs(value) + 64 * np.finfo(float).eps * vmax / M4
    return value, float(budget)


# ---------------------------------------------------------------- analytic: cosine mode

def cosine_shift_correlation(instance, params, k, T, dist=None, nonuniform=False):
    """Un-rounded cosine expansion summed exactly; rounding gap charged as eps_d."""
    R, d = params.radius, instance.d
    T = int(T) % (2 * R)
    M1m, M2m = params.M1m, params.M2m
    w = np.asarray(instance.w_star) / M1m
    beta = instance.beta_star
    D = len(beta)
    uni = dist is None or dist.kind == "uniform"

    def row(i, f, lo, hi, shift):
        if uni:
            if f == 0:
                return complex(hi - lo)
            z = np.exp(2j * pi * f)
            return complex(np.exp(2j * pi * f * lo) * (z ** (hi - lo) - 1) / (z - 1))
        if hi - lo > DIRECT_SUM_MAX:
            raise InfeasibleScale("cosine mode needs a direct sum for non-uniform weights")
        c = dist.coord(i)
        x = np.arange(lo, hi, dtype=float)
        xs = (x + shift + R) % (2 * R) - R
        return complex(np.sum(c.p(x) * c.p(xs) * np.exp(2j * pi * f * x)))

    G = 1.0
    if not uni:
        for i in range(d):
            G *= float(np.sum(dist.coord(i).p2(np.arange(-R, R, dtype=float))))
    else:
        G = float(2 * R) ** d
    total = 0.0
    for j in range(1, D + 1):
        for jp in range(1, D + 1):
            for sgn in (1, -1):
                # cos a cos b = (cos(a+b) + cos(a-b))/2 with a = 2 pi j t, b = 2 pi j' (t + shift)
                n = j + sgn * jp
                acc = 0.0 + 0j
                for lo, hi, sh in ((-R, R - T, T), (R - T, R, T - 2 * R)):
                    prod = np.exp(2j * pi * sgn * jp * sh * w[k])
                    for i in range(d):
                        if i == k:
                            prod *= row(i, n * w[i], lo, hi, T)
                        else:
                            prod *= row(i, n * w[i], -R, R, 0)
                    acc += prod
                total += 0.5 * beta[j - 1] * beta[jp - 1] * acc.real
    value = total / G / M2m**2
    eps_d = (3.0 if nonuniform else 2.0) / M2m**3
    return value, eps_d


# ---------------------------------------------------------------- Fourier distributions

def fourier_distribution(instance, params, j, dist=None, offset=0.0):
    """Exact Pr(y), y in [0, q), for the row along coordinate j with fixed x_{-j} offset."""
    R = params.radius
    q = 2 * R
    x = np.arange(-R, R, dtype=np.int64)
    t = (x * float(instance.w_star[j]) + offset) / params.M1m
    h = h_numerator(instance.beta_star, params.M2m, t - np.floor(t))
    p = np.ones(q) if dist is None or dist.kind == "uniform" else dist.coord(j).p(x.astype(float))
    return grouped_dft_distribution(h, p)


def grouped_dft_distribution(values, amps):
    """Pr(y) = (1/(q G)) sum_v |sum_x amps(x) 1[values(x)=v] e^{2 pi i x y/q}|^2, q = len(values)."""
    values = np.asarray(values)
    amps = np.asarray(amps, dtype=float)
    q = len(values)
    G = float(np.sum(amps * amps))
    prob = np.zeros(q)
    for v in np.unique(values):
        f = np.where(values == v, amps, 0.0)
        prob += np.abs(np.fft.fft(f)) ** 2
    prob /= q * G
    return prob


def fourier_distribution_full(instance, params, j, dist=None):
    """Pr(y) mixed over all slices x_{-j} (brute force over the other coordinates)."""
    d, R = instance.d, params.radius
    if d == 1:
        return fourier_distribution(instance, params, j, dist, 0.0)
    others = [i for i in range(d) if i != j]
    if (2 * R) ** d > BRUTE_MAX_POINTS:
        raise InfeasibleScale("slice enumeration exceeds the brute-force limit")
    X = _grid(R, d - 1)
    wts = np.ones(len(X))
    if dist is not None and dist.kind != "uniform":
        for a, i in enumerate(others):
            wts *= dist.coord(i).p2(X[:, a].astype(float))
    wts /= wts.sum()
    prob = np.zeros(2 * R)
    wo = np.asarray(instance.w_star)[others]
    for xo, wt in zip(X, wts):
        prob += wt * fourier_distribution(instance, params, j, dist, float(xo @ wo))
    return prob


def sample_from(prob, n, seed):
    return np.random.default_rng(seed).choice(len(prob), size=n, p=prob)


# ---------------------------------------------------------------- Bragg model for large q

@lru_cache(maxsize=64)
def _harmonic_masses(beta, M2m, n_h):
    """p_n = sum_v |c_{v,n}|^2 for the level-set indicators of h~, |n| <= n_h."""
    beta = np.array(beta)
    cuts = step_breakpoints(beta, M2m)
    nxt = np.append(cuts[1:], cuts[0] + 1.0)
    mids = (cuts + nxt) / 2
    vals = h_numerator(beta, M2m, np.mod(mids, 1.0))
    n = np.arange(-n_h, n_h + 1)
    nz = n != 0
    mass = np.zeros(len(n))
    for v in np.unique(vals):
        sel = vals == v
        c = np.zeros(len(n), dtype=complex)
        c[~nz] = np.sum(nxt[sel] - cuts[sel])
        for a, b in zip(cuts[sel], nxt[sel]):
            c[nz] += (np.exp(-2j * pi * n[nz] * a) - np.exp(-2j * pi * n[nz] * b)) / (2j * pi * n[nz])
        mass += np.abs(c) ** 2
    return n, mass, np.cumsum(mass)


def bragg_sample(instance, params, j, rng, n_h=BRAGG_HARMONICS, K=FEJER_HALF_WIDTH):
    """Draw y for huge q = 2R (uniform rows): Bragg peak n with mass p_n, Fejer offset.

    Returns (y, tv_defect) where tv_defect bounds the mass handled approximately
    (harmonic tail drawn uniformly plus the Fejer window truncation).
    """
    R = params.radius
    q = 2 * R
    n, mass, cdf = _harmonic_masses(tuple(float(b) for b in instance.beta_star), params.M2m, n_h)
    tail = max(0.0, 1.0 - float(cdf[-1]))
    if rng.random() < tail:
        return int(rng.integers(0, q)), tail + 1.0 / (pi**2 * K)
    idx = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(n) - 1)
    nn = int(n[idx])
    nu = Fraction(float(instance.w_star[j])) / params.M1m
    centre = (-nn * q * nu) % q
    base = centre.numerator // centre.denominator
    frac = float(centre - base)
    ks = np.arange(-K, K + 1)
    u = ks - frac
    with np.errstate(invalid="ignore", divide="ignore"):
        wt = np.sin(pi * u) ** 2 / (q**2 * np.sin(pi * u / q) ** 2)
    wt[~np.isfinite(wt)] = 1.0
    cw = np.cumsum(wt)
    k = int(ks[min(int(np.searchsorted(cw, rng.random() * cw[-1], side="right")), len(ks) - 1)])
    return int((base + k) % q), tail + 1.0 / (pi**2 * K)
