"""Problem instances, input distributions, the constrained sphere set and its packing net."""
from dataclasses import dataclass, field

import numpy as np

from .errors import (BetaNormViolation, NormMismatch, OrthantViolation,
                     RejectionBudgetExceeded, UnsupportedKind)

KINDS = ("uniform", "gaussian", "gen_gaussian", "logistic")


@dataclass(frozen=True)
class ConceptInstance:
    d: int
    R_w: float
    w_star: np.ndarray
    cap_D: int
    beta_star: np.ndarray

    def to_dict(self):
        return {"d": self.d, "R_w": float(self.R_w), "w_star": [float(v) for v in self.w_star],
                "cap_D": self.cap_D, "beta_star": [float(v) for v in self.beta_star]}

    @staticmethod
    def from_dict(obj):
        return make_instance(obj["d"], obj["R_w"], obj["cap_D"], obj["w_star"], obj["beta_star"])


def make_instance(d, R_w, cap_D, w_star, beta_star):
    w = np.asarray(w_star, dtype=float).reshape(-1)
    b = np.asarray(beta_star, dtype=float).reshape(-1)
    if len(w) != d:
        raise NormMismatch(f"w_star has length {len(w)}, expected {d}")
    if len(b) != cap_D:
        raise BetaNormViolation(f"beta_star has length {len(b)}, expected {cap_D}")
    if R_w <= 0 or abs(np.linalg.norm(w) - R_w) > 1e-12 * R_w:
        raise NormMismatch(f"|w| = {np.linalg.norm(w)!r} but R_w = {R_w!r}")
    lo = R_w / d**2
    if np.any(w < lo):
        raise OrthantViolation(f"min w_j = {w.min()!r} < R_w/d^2 = {lo!r}")
    if abs(np.abs(b).sum() - 1.0) > 1e-12:
        raise BetaNormViolation(f"|beta|_1 = {np.abs(b).sum()!r}")
    w.setflags(write=False)
    b.setflags(write=False)
    return ConceptInstance(int(d), float(R_w), w, int(cap_D), b)


def sample_w_star(d, R_w, seed, batch=4096, max_draws=10**7):
    """Uniform draw from S_w: sphere sample folded into the orthant, then min-entry filter."""
    if d == 1:
        return np.array([float(R_w)])
    rng = np.random.default_rng(seed)
    lo = R_w / d**2
    drawn = 0
    while drawn < max_draws:
        g = np.abs(rng.standard_normal((batch, d)))
        w = R_w * g / np.linalg.norm(g, axis=1, keepdims=True)
        drawn += batch
        ok = np.flatnonzero(np.all(w >= lo, axis=1))
        if len(ok):
            return w[ok[0]]
    raise RejectionBudgetExceeded(f"no point of S_w in {drawn} draws (acceptance < {1 / max(drawn, 1):.1e})")


def _angle(u, V, R_w):
    return np.arccos(np.clip(V @ u / R_w**2, -1.0, 1.0))


def build_packing_net(d, R_w, min_angle=0.51, budget=256, seed=0, n_candidates=None):
    """Greedy first-fit packing of S_w with pairwise geodesic angle >= min_angle."""
    if not 0 < min_angle < np.pi / 2:
        raise ValueError("min_angle must lie in (0, pi/2)")
    if d == 1:
        return np.array([[float(R_w)]])
    n_candidates = n_candidates or max(4000, 40 * budget)
    rng = np.random.default_rng(seed)
    lo = R_w / d**2
    cand = []
    while sum(len(c) for c in cand) < n_candidates:
        g = np.abs(rng.standard_normal((4096, d)))
        w = R_w * g / np.linalg.norm(g, axis=1, keepdims=True)
        cand.append(w[np.all(w >= lo, axis=1)])
    cand = np.concatenate(cand)[:n_candidates]
    net = np.empty((budget, d))
    n = 0
    for u in cand:
        if n and np.min(_angle(u, net[:n], R_w)) < min_angle:
            continue
        net[n] = u
        n += 1
        if n == budget:
            break
    return net[:n].copy()


def eval_target(instance, x):
    """g(x) = sum_j beta_j cos(2 pi j x.w) for x of shape (..., d)."""
    x = np.asarray(x, dtype=float)
    t = x @ instance.w_star
    j = np.arange(1, instance.cap_D + 1)
    return np.cos(2 * np.pi * np.multiply.outer(t, j)) @ instance.beta_star


# ---------------------------------------------------------------- distributions

@dataclass(frozen=True)
class DistributionSpec:
    """Product distribution with density proportional to p^2 = prod_j p_j^2."""
    kind: str
    truncation_R: float
    sigma: tuple = ()
    alpha: tuple = ()
    s: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedKind(self.kind)

    def coord(self, j):
        return _Coord(self, j)

    def to_dict(self):
        return {"kind": self.kind, "truncation_R": self.truncation_R, "sigma": list(self.sigma),
                "alpha": list(self.alpha), "s": list(self.s)}

    @staticmethod
    def from_dict(obj):
        return DistributionSpec(obj["kind"], obj["truncation_R"], tuple(obj.get("sigma", ())),
                                tuple(obj.get("alpha", ())), tuple(obj.get("s", ())))

    def with_radius(self, R):
        return DistributionSpec(self.kind, R, self.sigma, self.alpha, self.s)


def uniform(R):
    return DistributionSpec("uniform", R)


def gaussian(sigma, R):
    return DistributionSpec("gaussian", R, sigma=tuple(float(v) for v in np.atleast_1d(sigma)))


def gen_gaussian(alpha, s, R):
    return DistributionSpec("gen_gaussian", R, alpha=tuple(int(a) for a in np.atleast_1d(alpha)),
                            s=tuple(float(v) for v in np.atleast_1d(s)))


def logistic(s, R):
    return DistributionSpec("logistic", R, s=tuple(float(v) for v in np.atleast_1d(s)))


def _pick(vals, j):
    return vals[j] if len(vals) > 1 else vals[0]


class _Coord:
    """One coordinate factor p_j of a DistributionSpec."""

    def __init__(self, dist, j):
        self.kind = dist.kind
        if self.kind == "gaussian":
            self.sigma = _pick(dist.sigma, j)
        elif self.kind == "gen_gaussian":
            self.alpha, self.s = _pick(dist.alpha, j), _pick(dist.s, j)
        elif self.kind == "logistic":
            self.s = _pick(dist.s, j)

    def p2(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        if self.kind == "uniform":
            return np.ones_like(x)
        if self.kind == "gaussian":
            return np.exp(-x**2 / (2 * self.sigma**2))
        if self.kind == "gen_gaussian":
            return np.exp(-(x / self.s) ** self.alpha)
        return 1.0 / np.cosh(x / (2 * self.s)) ** 2

    def p(self, x):
        return np.sqrt(self.p2(x))

    def dp(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            return np.zeros_like(x)
        if self.kind == "gaussian":
            return -x / (2 * self.sigma**2) * self.p(x)
        if self.kind == "gen_gaussian":
            return -0.5 * self.alpha * x ** (self.alpha - 1) / self.s**self.alpha * self.p(x)
        u = x / (2 * self.s)
        return -np.tanh(u) / np.cosh(u) / (2 * self.s)

    def log_concave(self):
        return True


# ---------------------------------------------------------------- assumption audit

@dataclass
class AssumptionAudit:
    passes: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    scale_condition: bool = True
    epsilon_r_formula: str = None

    @property
    def ok(self):
        return all(self.passes.values()) and self.scale_condition

    def to_dict(self):
        return {"passes": dict(self.passes), "margins": dict(self.margins),
                "scale_condition": self.scale_condition, "epsilon_r_formula": self.epsilon_r_formula}


_EPS_R = {"uniform": None, "gaussian": "exp(-Omega(r^2))",
          "gen_gaussian": "superpolynomial decay in r", "logistic": "exp(-Omega(r d))"}


def audit_assumptions(dist, M1, cap_D, R_w, grid_resolution=2001, d=1):
    """Grid audit of Assumptions 2-6 plus the closed-form scale conditions.

    Margins are worst cases over a uniform grid with endpoints included, hence
    lower bounds on the true margins.
    """
    if grid_resolution < 1000:
        raise ValueError("grid_resolution must be at least 1000")
    R = float(dist.truncation_R)
    x = np.linspace(-R, R, grid_resolution)
    ncoord = max(d, len(dist.sigma), len(dist.s), 1)
    m2 = m3 = m4 = m5 = np.inf
    crit = 0
    dbound = np.pi * cap_D * R_w / (2 * M1)
    for j in range(ncoord):
        c = dist.coord(j)
        p2 = c.p2(x)
        p = np.sqrt(p2)
        m2 = min(m2, 0.1 - np.max(np.abs(1 - p2)))
        m3 = min(m3, np.min(p), 1 - np.max(p))
        m4 = min(m4, 0.0 - np.max(np.abs(p2 - c.p2(-x))) + 0.0)
        m5 = min(m5, dbound - np.max(np.abs(c.dp(x))))
        dv = np.diff(p2)
        sg = np.sign(dv[dv != 0])
        crit = max(crit, int(np.count_nonzero(sg[1:] != sg[:-1])))
    m6 = 8 - crit
    a = AssumptionAudit()
    a.margins = {"A2": float(m2), "A3": float(m3), "A4": float(m4), "A5": float(m5), "A6": float(m6)}
    a.passes = {k: v >= 0 for k, v in a.margins.items()}
    if dist.kind == "gaussian":
        a.scale_condition = all(sg >= 2 * R * np.sqrt(np.pi) for sg in dist.sigma)
    elif dist.kind == "gen_gaussian":
        a.scale_condition = all(s >= 2 * R * np.sqrt(np.pi) for s in dist.s)
    elif dist.kind == "logistic":
        a.scale_condition = all(s >= max(4 * np.pi * R, M1 / (np.pi * cap_D * R_w)) for s in dist.s)
    a.epsilon_r_formula = _EPS_R[dist.kind]
    return a


def classical_bound_descriptor(dist_kind, d, R_w):
    """Asymptotic family of the classical gradient-method lower bound (no constants)."""
    if dist_kind == "gaussian":
        return {"form": "exp(min(d, R_w^2))", "grows_in": ["d", "R_w"], "exponent": min(d, R_w**2)}
    if dist_kind == "gen_gaussian":
        return {"form": "min(exp(d), superpoly(R_w))", "grows_in": ["d", "R_w"], "exponent": None}
    if dist_kind == "logistic":
        return {"form": "exp(d·R_w)", "grows_in": ["d", "R_w"], "exponent": d * R_w}
    raise UnsupportedKind(f"no classical hardness claim for {dist_kind}")
