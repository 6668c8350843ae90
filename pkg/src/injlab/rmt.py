"""Block-hollow Gaussian ensembles and their spectra.

Two symmetric ensembles: the block-hollow GOE (a GOE matrix whose p
diagonal d x d blocks are zeroed) and its twisted variant
[[B, C, theta^T], [C, -B, .], [theta, ., 0]] built from two independent
block-hollow matrices plus a partially-zeroed Gaussian row.  These are the
conditional Hessian laws entering the critical-point bounds; spectra are
computed dense via LAPACK and summarized once, immutably.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .constants import mu_p_cdf, mu_p_radius
from .rng import normals

__all__ = [
    "EnsembleKind",
    "EnsembleMatrix",
    "SpectrumSummary",
    "sample_bhgoe",
    "sample_tbhgoe",
    "eigenvalues",
    "esd_w1",
    "stieltjes_mp",
    "stieltjes_empirical",
    "spectral_gap_ok",
    "log_abs_det",
]

SIZE_BUDGET = 6000


class EnsembleKind(Enum):
    BHGOE = "bhgoe"
    TBHGOE = "tbhgoe"


@dataclass
class EnsembleMatrix:
    model: EnsembleKind
    d: int  # block size
    p: int  # block count
    sigma2: float
    n: int
    data: np.ndarray
    seed: int


@dataclass
class SpectrumSummary:
    eigenvalues: np.ndarray  # sorted ascending
    op_norm: float

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


@lru_cache(maxsize=32)
def _offblock_mask(d: int, p: int) -> np.ndarray:
    block = np.arange(p * d) // d
    return (block[:, None] != block[None, :]).astype(np.float64)


def _check_size(n: int) -> None:
    if n > SIZE_BUDGET:
        raise ValueError(f"matrix side {n} exceeds budget {SIZE_BUDGET}")


def sample_bhgoe(d: int, p: int, sigma2: float | None = None, seed: int = 0,
                 trial: int = 0) -> EnsembleMatrix:
    """Block-hollow GOE: symmetric, N(0, sigma2) off-block entries, zero diagonal blocks.

    sigma2 defaults to 1/(p d), the normalization under which the spectrum
    fills [-2 sqrt((p-1)/p), 2 sqrt((p-1)/p)].
    """
    if d < 1 or p < 2:
        raise ValueError("sample_bhgoe requires d >= 1 and p >= 2")
    if sigma2 is None:
        sigma2 = 1.0 / (p * d)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    n = p * d
    _check_size(n)
    a = normals(seed, "rmt-bhgoe", trial, size=n * n).reshape(n, n)
    w = np.triu(a, 1) * math.sqrt(sigma2)
    w = w + w.T
    w *= _offblock_mask(d, p)
    return EnsembleMatrix(EnsembleKind.BHGOE, d, p, sigma2, n, w, seed)


def sample_tbhgoe(d: int, p: int, seed: int = 0, trial: int = 0) -> EnsembleMatrix:
    """Twisted block-hollow ensemble of side 2dp+1.

    Layout [[B, C, theta^T], [C, -B, .], [theta, ., 0]] with B, C independent
    block-hollow GOE(d, p, 1/(2dp)) and theta iid N(0, 1/(2dp)) except that
    the first d entries of each half are zero.
    """
    if d < 1 or p < 2:
        raise ValueError("sample_tbhgoe requires d >= 1 and p >= 2")
    m = d * p
    n = 2 * m + 1
    _check_size(n)
    sigma2 = 1.0 / (2.0 * m)
    b = sample_bhgoe(d, p, sigma2, seed=seed, trial=2 * trial).data
    c = sample_bhgoe(d, p, sigma2, seed=seed, trial=2 * trial + 1).data
    theta = normals(seed, "rmt-tbhgoe-theta", trial, size=2 * m) * math.sqrt(sigma2)
    theta[:d] = 0.0
    theta[m:m + d] = 0.0
    w = np.zeros((n, n))
    w[:m, :m] = b
    w[m:2 * m, m:2 * m] = -b
    w[:m, m:2 * m] = c
    w[m:2 * m, :m] = c
    w[2 * m, :2 * m] = theta
    w[:2 * m, 2 * m] = theta
    return EnsembleMatrix(EnsembleKind.TBHGOE, d, p, sigma2, n, w, seed)


def eigenvalues(mat: EnsembleMatrix | np.ndarray) -> SpectrumSummary:
    """Full spectrum of a symmetric matrix, sorted ascending."""
    data = mat.data if isinstance(mat, EnsembleMatrix) else mat
    if not np.all(np.isfinite(data)):
        raise ValueError("matrix has non-finite entries")
    lam = np.linalg.eigvalsh(data)
    return SpectrumSummary(eigenvalues=lam, op_norm=float(max(abs(lam[0]), abs(lam[-1]))))


def _semicircle_cdf_antideriv(p: int, x: float) -> float:
    """G(x) = int_{-r}^x F(t) dt for the radius-r semicircle CDF F; 0 left of -r, x right of r."""
    r = mu_p_radius(p)
    if x <= -r:
        return 0.0
    if x >= r:
        return float(x)
    return x * mu_p_cdf(p, 0.0, x) + 2.0 / (3.0 * math.pi * r * r) * (r * r - x * x) ** 1.5


def esd_w1(spec: SpectrumSummary, p: int, u: float = 0.0) -> float:
    """Exact Wasserstein-1 distance between the shifted empirical spectrum and mu_p(0).

    Integrates |F_emp - F| piecewise between consecutive eigenvalues using
    the closed-form semicircle CDF; crossings inside a segment are located
    by root bracketing, so no quantile grid is involved.
    """
    lam = np.sort(spec.eigenvalues) - u
    n = len(lam)
    r = mu_p_radius(p)
    cdf = lambda x: mu_p_cdf(p, 0.0, x)
    G = lambda x: _semicircle_cdf_antideriv(p, x)

    total = 0.0
    # left tail: F_emp = 0 on (-inf, lam[0])
    if lam[0] > -r:
        total += G(lam[0])
    # right tail: F_emp = 1 on (lam[-1], inf)
    if lam[-1] < r:
        total += (r - lam[-1]) - (G(r) - G(lam[-1]))
    for k in range(1, n):
        a, b = lam[k - 1], lam[k]
        if b <= a:
            continue
        c = k / n
        fa, fb = cdf(a), cdf(b)
        if fa >= c:  # F >= c on the whole segment (F nondecreasing)
            total += (G(b) - G(a)) - c * (b - a)
        elif fb <= c:
            total += c * (b - a) - (G(b) - G(a))
        else:
            xs = brentq(lambda x: cdf(x) - c, a, b, xtol=1e-14)
            total += c * (xs - a) - (G(xs) - G(a))
            total += (G(b) - G(xs)) - c * (b - xs)
    return total


def stieltjes_mp(p: int, z: complex) -> complex:
    """Self-consistent Stieltjes transform of mu_p(0) on the upper half plane.

    Solves 1 + (z + c m) m = 0 with c = (p-1)/p, taking the root with
    positive imaginary part.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("stieltjes_mp requires Im z > 0")
    c = (p - 1.0) / p
    s = np.sqrt(z * z - 4.0 * c)
    r1 = (-z + s) / (2.0 * c)
    r2 = (-z - s) / (2.0 * c)
    return complex(r1 if r1.imag > 0 else r2)


def stieltjes_empirical(spec: SpectrumSummary, z: complex) -> complex:
    """Empirical Stieltjes transform (1/n) sum 1/(lambda_i - z)."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("stieltjes_empirical requires Im z > 0")
    return complex(np.mean(1.0 / (spec.eigenvalues - z)))


def spectral_gap_ok(spec: SpectrumSummary, u: float, gap: float) -> bool:
    """True iff no eigenvalue lies in [u - gap, u + gap]."""
    if gap <= 0:
        raise ValueError("gap must be positive")
    lam = spec.eigenvalues
    i = np.searchsorted(lam, u - gap)
    return bool(i >= len(lam) or lam[i] > u + gap)


def log_abs_det(spec: SpectrumSummary, u: float) -> float:
    """Sum of log|lambda_i - u|; -inf sentinel if the shift is numerically singular."""
    diff = np.abs(spec.eigenvalues - u)
    if np.min(diff) < 1e-300:
        return float("-inf")
    return float(np.sum(np.log(diff)))
