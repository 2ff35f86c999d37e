"""Stage 2: gradient descent on the squared loss with closed-form trigonometric moments."""
from dataclasses import dataclass, field
from functools import lru_cache
from math import ceil, log, pi, sqrt

import numpy as np

from .errors import NonConvergence
from .qsq_oracle import exp_sum_1d

COS_COS, COS_SIN = "CosCos", "CosSin"


@dataclass(frozen=True)
class MomentRequest:
    j: int
    jp: int
    w: tuple
    wp: tuple
    trig_pair: str = COS_COS
    dist: object = None

    def __post_init__(self):
        if self.j < 1 or self.jp < 1:
            raise ValueError("harmonics start at 1")
        if self.trig_pair not in (COS_COS, COS_SIN):
            raise ValueError(self.trig_pair)


@lru_cache(maxsize=1 << 16)
def _char(dist, t):
    """E[exp(2 pi i t.x)] under the product density, t a tuple of frequencies."""
    out = 1.0 + 0j
    R = dist.truncation_R
    for k, f in enumerate(t):
        if f == 0.0:
            continue
        out *= exp_sum_1d(dist.coord(k), f, R, mode="integral", normalized=True)
    return out


def char_fn(dist, t):
    return _char(dist, tuple(float(v) for v in t))


def cos_moment(req):
    """E[trig(2 pi j x.w) trig'(2 pi j' x.w')] by splitting into exponentials and factoring."""
    w, wp = np.asarray(req.w, float), np.asarray(req.wp, float)
    a = req.j * w
    b = req.jp * wp
    em, ep = char_fn(req.dist, a - b), char_fn(req.dist, a + b)
    if req.trig_pair == COS_COS:
        return 0.5 * (em.real + ep.real)
    # cos(u) sin(v) = (sin(u+v) - sin(u-v)) / 2
    return 0.5 * (ep.imag - em.imag)


def moment_matrix(w, wp, D, dist):
    M = np.empty((D, D))
    for j in range(1, D + 1):
        for jp in range(1, D + 1):
            M[j - 1, jp - 1] = cos_moment(MomentRequest(j, jp, tuple(w), tuple(wp), COS_COS, dist))
    return M


@dataclass
class Moments:
    a: float            # beta*^T C(w*, w*) beta*
    H: np.ndarray       # H[j, k] = E[cos(2 pi j x.w*) cos(2 pi k x.w^)]
    G: np.ndarray       # G[k, k'] = E[cos(2 pi k x.w^) cos(2 pi k' x.w^)]


def moments(instance, w_hat, dist):
    D = instance.cap_D
    bs = instance.beta_star
    A = moment_matrix(instance.w_star, instance.w_star, D, dist)
    H = moment_matrix(instance.w_star, w_hat, D, dist)
    G = moment_matrix(w_hat, w_hat, D, dist)
    return Moments(float(bs @ A @ bs), H, G)


def _loss_from(mo, bs, beta):
    h = mo.H.T @ bs
    return float(mo.a - 2 * beta @ h + beta @ mo.G @ beta)


def _grad_from(mo, bs, beta):
    return 2 * mo.G @ beta - 2 * mo.H.T @ bs


def loss(instance, w_hat, beta, dist):
    """E[(g_{w*}(x) - sum_j beta_j cos(2 pi j x.w^))^2]."""
    return _loss_from(moments(instance, w_hat, dist), instance.beta_star, np.asarray(beta, float))


def gradient(instance, w_hat, beta, dist):
    return _grad_from(moments(instance, w_hat, dist), instance.beta_star, np.asarray(beta, float))


def gradient_error_bound(mo, bs, beta_cap=2.0):
    """Max over k of |dL/dbeta_k - (beta_k - beta*_k)| for any |beta| < beta_cap."""
    D = len(bs)
    I = np.eye(D)
    return float(np.max(beta_cap * np.abs(2 * mo.G - I).sum(axis=1) + np.abs(2 * mo.H - I).T @ np.abs(bs)))


# ---------------------------------------------------------------- schedule

def steps_for(D, eps3, eta=0.5):
    return int(ceil(log(2 * sqrt(D) / eps3) / log(1 / (1 - eta))))


def eps2_for(D, eps3, eta=0.5):
    """Gradient accuracy with eta * t * eps2 = eps3 / (2 sqrt D) at the real-valued step count.

    With t rounded up the product exceeds this by at most a factor (t + 1) / t.
    """
    return log(1 / (1 - eta)) * eps3 / (2 * eta * sqrt(D) * log(2 * sqrt(D) / eps3))


def theorem_schedule(d, D, R_w, eps, eta=0.5):
    """(R, eps1, eps2, eps3, t) with every constant written out."""
    eps3 = sqrt(eps)
    eps2 = eps2_for(D, eps3, eta)
    t = steps_for(D, eps3, eta)
    rd = sqrt(d)
    R = max(D**2 / eps, D**2 / eps2, 16 * D * rd / (pi * R_w * eps2),
            39 * rd / (4 * pi * R_w * eps), 54 * D**2 * rd / (pi * R_w * eps))
    R = int(ceil(R))
    eps1 = min(3 * eps2**3 / (40 * pi**2 * D**6 * d), R_w / (2 * D * rd),
               eps / (64 * pi**2 * D**2 * d * R**2))
    return {"R": R, "eps1": eps1, "eps2": eps2, "eps3": eps3, "t": t, "eta": eta}


@dataclass
class GdConfig:
    eta: float = 0.5
    t_max: int = None
    eps: float = 0.1
    eps1: float = None
    eps2: float = None
    eps3: float = None
    raise_on_failure: bool = True

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if self.eps3 is None:
            self.eps3 = sqrt(self.eps)

    def steps(self, D):
        return self.t_max if self.t_max is not None else steps_for(D, self.eps3, self.eta)


@dataclass
class FitResult:
    beta_hat: np.ndarray
    iterations: int
    loss_trace: list = field(default_factory=list)     # (iteration, loss, |beta - beta*|_2)
    iterates: list = field(default_factory=list)
    eps2_actual: float = None


def fit_beta(instance, w_hat, dist, config=None):
    """Gradient descent from beta = 0; stops after config.steps(D) iterations or at loss <= eps."""
    config = config or GdConfig()
    D = instance.cap_D
    bs = np.asarray(instance.beta_star, float)
    mo = moments(instance, w_hat, dist)
    beta = np.zeros(D)
    res = FitResult(beta, 0, eps2_actual=gradient_error_bound(mo, bs))
    t_max = config.steps(D)
    for t in range(t_max + 1):
        L = _loss_from(mo, bs, beta)
        res.loss_trace.append((t, L, float(np.linalg.norm(beta - bs))))
        res.iterates.append(beta.copy())
        if L <= config.eps or t == t_max:
            break
        beta = beta - config.eta * _grad_from(mo, bs, beta)
    res.beta_hat, res.iterations = beta, t
    if res.loss_trace[-1][1] > config.eps and config.raise_on_failure:
        raise NonConvergence(f"loss {res.loss_trace[-1][1]:.4g} > eps = {config.eps} after {t} steps",
                             res.loss_trace)
    return res
