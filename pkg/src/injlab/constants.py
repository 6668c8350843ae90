"""Closed forms and root-finders for the deterministic constants.

All prefactors are assembled in log space through ``math.lgamma`` so that
nothing overflows at large order ``p`` or dimension ``d``.  Every solver
follows the same discipline: bracketed bisection down to 1e-6, then Newton
polish to 1e-13, and the returned root is re-substituted into its defining
equation so callers can check the residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

__all__ = [
    "Field",
    "omega",
    "omega_prime",
    "sigma_p",
    "solve_e0",
    "solve_subag",
    "beta_k",
    "solve_gamma",
    "gamma_asymptotic_3term",
    "gamma_envelope",
    "lambert_w_minus1",
    "log_prefactor",
    "mu_p",
    "mu_p_cdf",
    "mu_p_radius",
    "ConstantsReport",
    "constants_report",
]

_SEAM_EPS = 1e-30


class Field(Enum):
    """Scalar field of the tensor model."""

    REAL = "real"
    COMPLEX = "complex"

    @classmethod
    def parse(cls, name: str) -> "Field":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown field {name!r}; expected 'real' or 'complex'")


def omega(u: float) -> float:
    """Log-potential of the standard semicircle law at u.

    Two-branch closed form; even in u and continuous across |u| = 2.
    """
    if not math.isfinite(u):
        raise ValueError("omega requires finite input")
    x = abs(u)
    inner = x * x / 4.0 - 0.5
    if x <= 2.0:
        return inner
    gap = x * x - 4.0
    if gap < _SEAM_EPS:
        # round-off just outside the seam: the bracketed term vanishes there
        return inner
    s = math.sqrt(gap)
    return inner - (x / 4.0 * s - math.log(math.sqrt(gap) / 2.0 + x / 2.0))


def omega_prime(u: float) -> float:
    """Derivative of the semicircle log-potential (its Stieltjes transform)."""
    x = abs(u)
    if x <= 2.0:
        return u / 2.0
    s = math.sqrt(x * x - 4.0)
    return math.copysign((x - s) / 2.0, u)


def sigma_p(p: int, u: float) -> float:
    """Annealed complexity rate: (1+log(p-1))/2 + omega(u sqrt(p/(p-1))) - u^2/2."""
    if p < 2:
        raise ValueError("sigma_p requires p >= 2")
    scale = math.sqrt(p / (p - 1.0))
    return (1.0 + math.log(p - 1.0)) / 2.0 + omega(u * scale) - u * u / 2.0


def _sigma_p_prime(p: int, u: float) -> float:
    scale = math.sqrt(p / (p - 1.0))
    return omega_prime(u * scale) * scale - u


def _bisect_newton(f, fprime, lo: float, hi: float, bisect_tol: float = 1e-6,
                   newton_tol: float = 1e-13, max_newton: int = 60) -> float:
    """Bracketed bisection to bisect_tol, then Newton polish to newton_tol."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise ArithmeticError(f"root not bracketed on [{lo}, {hi}]")
    a, b, fa = lo, hi, flo
    while b - a > bisect_tol:
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            a = b = m
            break
        if (fm > 0.0) == (fa > 0.0):
            a, fa = m, fm
        else:
            b = m
    x = 0.5 * (a + b)
    for _ in range(max_newton):
        fx = f(x)
        dfx = fprime(x)
        if dfx == 0.0:
            break
        step = fx / dfx
        x_new = x - step
        if x_new < lo or x_new > hi:
            x_new = min(max(x_new, lo), hi)
        if abs(x_new - x) <= newton_tol * max(1.0, abs(x)):
            x = x_new
            break
        x = x_new
    return x


def solve_e0(p: int) -> float:
    """Ground-state threshold: the positive root of sigma_p (sqrt(2) for p = 2)."""
    if p < 2:
        raise ValueError("solve_e0 requires p >= 2")
    if p == 2:
        return math.sqrt(2.0)
    lo = 2.0 * math.sqrt((p - 1.0) / p) + 1e-9
    hi = 2.0 + 2.0 * math.sqrt(math.log(p - 1.0) + 2.0)
    while sigma_p(p, hi) > 0.0:
        hi *= 1.5
    return _bisect_newton(lambda u: sigma_p(p, u), lambda u: _sigma_p_prime(p, u), lo, hi)


def _subag_residual(p: int, q: float) -> float:
    # cleared-denominator form of q^2/(p(1-q)) = -log(1-q)/(1 + p(1-q)/q);
    # behaves like q^2 (1 - p/2) near q = 0, avoiding 0/0 blow-up
    return q * q + p * q * (1.0 - q) + p * (1.0 - q) * math.log1p(-q)


def _subag_residual_prime(p: int, q: float) -> float:
    return 2.0 * q + p * (1.0 - 2.0 * q) - p * math.log1p(-q) - p


def solve_subag(p: int) -> tuple[float, float]:
    """Overlap q_c and ground-state constant from the replica-style implicit equation.

    Returns (q_c, e_star) with q_c in (0, 1) and
    e_star = sqrt((-log(1-q_c)) (1 + p(1-q_c)/q_c)).
    """
    if p < 3:
        raise ValueError("solve_subag requires p >= 3")
    lo, hi = 1e-9, 1.0 - 1e-9
    if (_subag_residual(p, lo) > 0.0) == (_subag_residual(p, hi) > 0.0):
        raise ArithmeticError("q_c not bracketed in (1e-9, 1-1e-9)")
    q = _bisect_newton(lambda x: _subag_residual(p, x),
                       lambda x: _subag_residual_prime(p, x), lo, hi)
    e_star = math.sqrt((-math.log1p(-q)) * (1.0 + p * (1.0 - q) / q))
    return q, e_star


def beta_k(d: int, kind: Field) -> float:
    """Volume-vs-prefactor constant in the large-p rate equation.

    Real:    log((d-1)/(2 pi))/2 + log(2 pi^{d/2} / Gamma(d/2)) / (d-1)
    Complex: log(d-1)/2 + log(2 sqrt(pi) / Gamma(d - 1/2)) / (2(d-1))
    """
    if d < 2:
        raise ValueError("beta_k requires d >= 2")
    if kind is Field.REAL:
        return 0.5 * math.log((d - 1.0) / (2.0 * math.pi)) + (
            math.log(2.0) + (d / 2.0) * math.log(math.pi) - math.lgamma(d / 2.0)
        ) / (d - 1.0)
    return 0.5 * math.log(d - 1.0) + (
        math.log(2.0) + 0.5 * math.log(math.pi) - math.lgamma(d - 0.5)
    ) / (2.0 * (d - 1.0))


def _gamma_residual(p: int, d: int, kind: Field, g: float) -> float:
    return math.log(p) / 2.0 + beta_k(d, kind) + omega(g) - g * g / 2.0


def solve_gamma(p: int, d: int, kind: Field) -> float:
    """Unique positive root of log(p)/2 + beta_K(d) + omega(g) - g^2/2 = 0."""
    if p < 2 or d < 2:
        raise ValueError("solve_gamma requires p >= 2 and d >= 2")
    b = beta_k(d, kind)
    hi = 2.0 + 2.0 * math.sqrt(math.log(p) + 2.0 * abs(b))
    return _bisect_newton(lambda g: _gamma_residual(p, d, kind, g),
                          lambda g: omega_prime(g) - g, 1e-9, hi)


def gamma_asymptotic_3term(p: int, d: int, kind: Field) -> float:
    """Three-term large-p expansion sqrt(log p) + loglog p/(2 sqrt(log p)) + beta/sqrt(log p)."""
    lp = math.log(p)
    return math.sqrt(lp) + math.log(lp) / (2.0 * math.sqrt(lp)) + beta_k(d, kind) / math.sqrt(lp)


def lambert_w_minus1(x: float) -> float:
    """Lower real branch of the Lambert W function on [-1/e, 0).

    Returns w <= -1 with w exp(w) = x to relative residual 1e-13.  Uses the
    branch-point series very near -1/e and Halley iteration elsewhere,
    started from log(-x) - log(-log(-x)).
    """
    if not (-1.0 / math.e - 1e-14 <= x < 0.0):
        raise ValueError("lambert_w_minus1 requires x in [-1/e, 0)")
    t = 1.0 + math.e * x  # 0 at the branch point
    if t <= 0.0:
        return -1.0
    if t < 1e-6:
        s = -math.sqrt(2.0 * t)
        w = -1.0 + s - s * s / 3.0 + 11.0 * s**3 / 72.0
    else:
        lx = math.log(-x)
        w = lx - math.log(-lx)
    for _ in range(60):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= 1e-14 * abs(x):
            break
        fp = ew * (1.0 + w)
        # Halley step: robust where the plain Newton derivative degenerates
        denom = fp - f * (2.0 + w) / (2.0 * (1.0 + w)) if w != -1.0 else fp
        if denom == 0.0:
            break
        w -= f / denom
    return w


def log_prefactor(p: int, d: int, kind: Field) -> float:
    """Log of the critical-point-count prefactor, assembled entirely in log space.

    Real case (N = p(d-1)):
        ((N+1)/2) log(N/(2 pi)) + p log(2 pi^{d/2} / Gamma(d/2))
    Complex case (N = 2p(d-1)+1):
        p(d-1) log(p(d-1)/pi) + p log 2 + (dp + (1-p)/2) log pi
        - log Gamma(d) - (p-1) log Gamma(d - 1/2)
    """
    if p < 2 or d < 2:
        raise ValueError("log_prefactor requires p >= 2 and d >= 2")
    if kind is Field.REAL:
        n = p * (d - 1)
        return (n + 1) / 2.0 * math.log(n / (2.0 * math.pi)) + p * (
            math.log(2.0) + (d / 2.0) * math.log(math.pi) - math.lgamma(d / 2.0)
        )
    m = p * (d - 1)
    return (
        m * math.log(m / math.pi)
        + p * math.log(2.0)
        + (d * p + (1 - p) / 2.0) * math.log(math.pi)
        - math.lgamma(d)
        - (p - 1) * math.lgamma(d - 0.5)
    )


def mu_p_radius(p: int) -> float:
    """Support radius 2 sqrt((p-1)/p) of the rescaled semicircle."""
    return 2.0 * math.sqrt((p - 1.0) / p)


def mu_p(p: int, u: float, x: float) -> float:
    """Density at x of the semicircle rescaled to radius 2 sqrt((p-1)/p), shifted by -u."""
    if p < 2:
        raise ValueError("mu_p requires p >= 2")
    c = (p - 1.0) / p
    arg = 4.0 * c - (x + u) ** 2
    if arg <= 0.0:
        return 0.0
    return math.sqrt(arg) / (2.0 * math.pi * c)


def mu_p_cdf(p: int, u: float, x: float) -> float:
    """Closed-form CDF of mu_p at x (antiderivative of the density)."""
    if p < 2:
        raise ValueError("mu_p_cdf requires p >= 2")
    r = mu_p_radius(p)
    y = x + u
    if y <= -r:
        return 0.0
    if y >= r:
        return 1.0
    return 0.5 + y * math.sqrt(r * r - y * y) / (math.pi * r * r) + math.asin(y / r) / math.pi


@dataclass
class ConstantsReport:
    """All analytic constants for one (p, d, field) triple, with solver residuals."""

    p: int
    d: int
    field: Field
    e0: float
    alpha: float
    beta: float
    gamma: float
    gamma_asymptotic_3term: float
    e_star: float
    q_c: float
    log_prefactor: float
    residuals: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "p": self.p,
            "d": self.d,
            "field": self.field.value,
            "e0": self.e0,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "gamma_asymptotic_3term": self.gamma_asymptotic_3term,
            "e_star": self.e_star,
            "q_c": self.q_c,
            "log_prefactor": self.log_prefactor,
            "residuals": dict(self.residuals),
        }
        return out


@lru_cache(maxsize=None)
def constants_report(p: int, d: int, kind: Field) -> ConstantsReport:
    """Build (and cache) the full constants report for (p, d, field).

    For p = 2 the overlap equation is not defined, so q_c and e_star are NaN
    and carry no residual entries.
    """
    e0 = solve_e0(p)
    gam = solve_gamma(p, d, kind)
    residuals = {
        "e0": 0.0 if p == 2 else sigma_p(p, e0),
        "gamma": _gamma_residual(p, d, kind, gam),
    }
    if p >= 3:
        q_c, e_star = solve_subag(p)
        # residual of the original (uncleared) implicit equation
        residuals["q_c"] = q_c * q_c / (p * (1.0 - q_c)) + math.log1p(-q_c) / (
            1.0 + p * (1.0 - q_c) / q_c
        )
    else:
        q_c, e_star = float("nan"), float("nan")
    return ConstantsReport(
        p=p,
        d=d,
        field=kind,
        e0=e0,
        alpha=math.sqrt(p) * e0,
        beta=beta_k(d, kind),
        gamma=gam,
        gamma_asymptotic_3term=gamma_asymptotic_3term(p, d, kind),
        e_star=e_star,
        q_c=q_c,
        log_prefactor=log_prefactor(p, d, kind),
        residuals=residuals,
    )


def gamma_envelope(p: int, d: int, kind: Field) -> tuple[float, float, float, float]:
    """The four rate constants (g_minus, g_dagger, g, g_star) for one (p, d, field).

    g_minus^2  = log p + 2 beta
    g_dagger^2 = log p + 2 beta + log(g_dagger^2) - 1/g_dagger   (largest root)
    g          = root of log(p)/2 + beta + omega(g) - g^2/2
    g_star     = sqrt(-W_{-1}(-exp(-2 beta)/p))
    """
    b = beta_k(d, kind)
    t2 = math.log(p) + 2.0 * b
    g_minus = math.sqrt(t2)
    hi = 2.0 + 2.0 * math.sqrt(t2 + 5.0)
    g_dag = _bisect_newton(
        lambda x: x * x - t2 - math.log(x * x) + 1.0 / x,
        lambda x: 2.0 * x - 2.0 / x - 1.0 / (x * x),
        1.3, hi,
    )
    g_star = math.sqrt(-lambert_w_minus1(-math.exp(-2.0 * b) / p))
    return g_minus, g_dag, solve_gamma(p, d, kind), g_star
