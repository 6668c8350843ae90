"""Gaussian random tensors, injective-norm estimation, and entanglement measures.

The injective norm of an order-p tensor is NP-hard to certify, so the
estimator here is multistart alternating maximization: the pairing is
linear in each factor, so the per-slot optimum is exact and the absolute
value of the form never decreases along a sweep.  Whatever it returns is a
valid lower bound on the true norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import Field
from .rng import complex_normals, normals

__all__ = [
    "GaussianTensor",
    "FactorTuple",
    "InjNormEstimate",
    "sample_tensor",
    "hs_norm",
    "multilinear_value",
    "contract_all_but",
    "als_update",
    "estimate_injective_norm",
    "gauge_fix",
    "gme",
    "dist_sep",
]

ENTRY_BUDGET = 10**8


@dataclass
class GaussianTensor:
    """Dense order-p tensor with iid standard Gaussian entries."""

    p: int
    d: int
    field: Field
    entries: np.ndarray  # shape (d,)*p
    seed: int

    @property
    def n_entries(self) -> int:
        return self.d**self.p


@dataclass
class FactorTuple:
    """p unit vectors of dimension d; a candidate rank-one direction."""

    factors: list[np.ndarray]
    gauge_fixed: bool = False

    def copy(self) -> "FactorTuple":
        return FactorTuple([f.copy() for f in self.factors], self.gauge_fixed)


@dataclass
class InjNormEstimate:
    value: float
    tuple: FactorTuple
    restarts_used: int
    iterations: int
    converged: bool


def sample_tensor(p: int, d: int, field: Field, seed: int, index: int = 0) -> GaussianTensor:
    """Draw a Gaussian tensor from the stream (seed, "tensor", index).

    Real entries are standard normal; complex entries have independent real
    and imaginary parts of variance 1/2.
    """
    if p < 2 or d < 2:
        raise ValueError("sample_tensor requires p >= 2 and d >= 2")
    count = d**p
    if count > ENTRY_BUDGET:
        raise ValueError(f"tensor with {count} entries exceeds budget {ENTRY_BUDGET}")
    if field is Field.REAL:
        flat = normals(seed, "tensor", index, size=count)
    else:
        flat = complex_normals(seed, "tensor", index, size=count)
    return GaussianTensor(p=p, d=d, field=field, entries=flat.reshape((d,) * p), seed=seed)


def hs_norm(t: GaussianTensor) -> float:
    """Hilbert-Schmidt norm, sqrt of the sum of squared entry moduli."""
    return float(np.linalg.norm(t.entries.ravel()))


def multilinear_value(t: GaussianTensor, x: FactorTuple):
    """Pairing of the tensor with the rank-one direction; no conjugation."""
    if len(x.factors) != t.p or any(f.shape != (t.d,) for f in x.factors):
        raise ValueError("factor tuple shape does not match tensor")
    v = t.entries
    for k in reversed(range(t.p)):
        v = v @ x.factors[k]
    if t.field is Field.REAL:
        return float(v)
    return complex(v)


def contract_all_but(t: GaussianTensor, x: FactorTuple, slot: int) -> np.ndarray:
    """Contract every slot except `slot`, returning a length-d vector."""
    v = t.entries
    for k in range(t.p - 1, slot, -1):
        v = v @ x.factors[k]
    for k in range(slot):
        v = np.tensordot(x.factors[k], v, axes=(0, 0))
    return v


def _unit_from_stream(field: Field, d: int, seed: int, purpose: str, *idx: int) -> np.ndarray:
    if field is Field.REAL:
        v = normals(seed, purpose, *idx, size=d)
    else:
        v = complex_normals(seed, purpose, *idx, size=d)
    return v / np.linalg.norm(v)


def als_update(t: GaussianTensor, x: FactorTuple, slot: int, fallback_key=None) -> FactorTuple:
    """Replace factor `slot` by the exact per-slot maximizer of |pairing|.

    Real case: c/||c||; complex case: conj(c)/||c|| because the pairing is
    bilinear.  A numerically zero contraction (|c| < 1e-300) is resolved by
    resampling the slot from a deterministic auxiliary stream.
    """
    if not 0 <= slot < t.p:
        raise ValueError("slot out of range")
    c = contract_all_but(t, x, slot)
    nc = np.linalg.norm(c)
    out = x.copy()
    if nc < 1e-300:
        idx = fallback_key if fallback_key is not None else (0,)
        out.factors[slot] = _unit_from_stream(t.field, t.d, t.seed, "als-degenerate", slot, *idx)
        return out
    if t.field is Field.REAL:
        out.factors[slot] = c / nc
    else:
        out.factors[slot] = np.conj(c) / nc
    out.gauge_fixed = False
    return out


def estimate_injective_norm(
    t: GaussianTensor,
    restarts: int = 32,
    tol: float = 1e-10,
    max_iters: int = 500,
) -> InjNormEstimate:
    """Best alternating-maximization fixed point over multistart restarts.

    Restart r initializes slot k from the stream (seed, "als", r, k), so the
    result is reproducible regardless of evaluation order.  The returned
    value is a lower bound on the injective norm.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best_val = -1.0
    best = None
    best_iters = 0
    best_conv = False
    for r in range(restarts):
        x = FactorTuple([_unit_from_stream(t.field, t.d, t.seed, "als", r, k) for k in range(t.p)])
        prev = abs(multilinear_value(t, x))
        converged = False
        sweeps = 0
        for sweep in range(max_iters):
            sweeps = sweep + 1
            for slot in range(t.p):
                x = als_update(t, x, slot, fallback_key=(r, sweep))
            cur = abs(multilinear_value(t, x))
            if cur - prev <= tol * max(cur, 1e-300) and sweep > 0:
                converged = True
                prev = cur
                break
            prev = cur
        if prev > best_val:
            best_val = prev
            best = x
            best_iters = sweeps
            best_conv = converged
    return InjNormEstimate(
        value=best_val,
        tuple=best,
        restarts_used=restarts,
        iterations=best_iters,
        converged=best_conv,
    )


def gauge_fix(x: FactorTuple, t: GaussianTensor) -> FactorTuple:
    """Rotate per-slot phases so slots 2..p have a real first coordinate.

    The pairing becomes real and nonnegative, with unchanged modulus.  A
    zero first coordinate gets phase 0, compensated in slot 1.
    """
    if t.field is not Field.COMPLEX:
        raise ValueError("gauge_fix applies to complex tensors")
    theta_total = np.angle(multilinear_value(t, x))
    out = x.copy()
    phase_rest = 0.0
    for k in range(1, t.p):
        th = float(np.angle(out.factors[k][0]))
        out.factors[k] = out.factors[k] * np.exp(-1j * th)
        phase_rest += th
    out.factors[0] = out.factors[0] * np.exp(-1j * (theta_total - phase_rest))
    out.gauge_fixed = True
    return out


def _norm_value(t: GaussianTensor, restarts: int, estimate: InjNormEstimate | None) -> float:
    hs = hs_norm(t)
    if abs(hs - 1.0) > 1e-10:
        raise ValueError(f"state not normalized: ||T||_HS = {hs}")
    if estimate is None:
        estimate = estimate_injective_norm(t, restarts=restarts)
    return estimate.value


def gme(t: GaussianTensor, estimate: InjNormEstimate | None = None, restarts: int = 32) -> float:
    """Geometric entanglement -log(value^2) of a normalized state.

    Uses the multistart estimate, hence an upper bound on the true measure.
    """
    return -2.0 * math.log(_norm_value(t, restarts, estimate))


def dist_sep(t: GaussianTensor, estimate: InjNormEstimate | None = None, restarts: int = 32) -> float:
    """Distance sqrt(2 - 2 value) to the closest product state (upper bound)."""
    return math.sqrt(max(0.0, 2.0 - 2.0 * _norm_value(t, restarts, estimate)))
