"""Monte Carlo evaluation of the critical-point upper bounds.

The expected number of critical points of the tensor landscape at heights
in a set D is bounded by

    prefactor(p, d) * int_D exp(-c u^2) E|det(W - u)| du,

with W a block-hollow (real) or twisted block-hollow (complex) matrix of
block size d-1.  |det| spans hundreds of orders of magnitude, so all
aggregation happens in log space, and the same matrix samples are reused
across the u-grid (common random numbers), which makes the per-sample
integral an honest iid average and the delta-method stderr exact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .constants import Field, log_prefactor, sigma_p
from .rmt import eigenvalues, sample_bhgoe, sample_tbhgoe
from .rng import complex_normals, normals

__all__ = [
    "IntervalSet",
    "KacRiceEstimate",
    "LandscapePoint",
    "det_moment_mc",
    "kr_bound",
    "laplace_rate",
    "landscape_at_north_pole",
    "covariance_audit",
    "AuditReport",
    "MomentClass",
]

log = logging.getLogger(__name__)


class IntervalSet:
    """Ordered disjoint closed intervals over the extended reals."""

    def __init__(self, intervals):
        ints = [(float(a), float(b)) for a, b in intervals]
        for a, b in ints:
            if math.isnan(a) or math.isnan(b) or a > b:
                raise ValueError(f"bad interval [{a}, {b}]")
            if math.isinf(a) and math.isinf(b) and a == b:
                raise ValueError("degenerate infinite interval")
        ints.sort()
        for (a1, b1), (a2, b2) in zip(ints, ints[1:]):
            if a2 <= b1:
                raise ValueError("intervals must be disjoint")
        if not ints:
            raise ValueError("interval set must be nonempty")
        self.intervals = ints

    @classmethod
    def reals(cls) -> "IntervalSet":
        return cls([(-math.inf, math.inf)])

    @classmethod
    def of(cls, *pairs) -> "IntervalSet":
        return cls(list(pairs))

    def truncated(self, u_max: float) -> tuple["IntervalSet", bool]:
        out = []
        clipped = False
        for a, b in self.intervals:
            a2, b2 = max(a, -u_max), min(b, u_max)
            if (a2, b2) != (a, b):
                clipped = True
            if a2 <= b2:
                out.append((a2, b2))
        if not out:
            raise ValueError("interval set empty after truncation")
        return IntervalSet(out), clipped

    def __repr__(self):
        return "IntervalSet(%s)" % ", ".join(f"[{a:g}, {b:g}]" for a, b in self.intervals)


@dataclass
class KacRiceEstimate:
    p: int
    d: int
    field: Field
    interval_set: IntervalSet
    log_bound: float
    mc_stderr_log: float
    grid_points: int
    samples_per_point: int
    laplace_prediction: float
    log_prefactor: float
    grid_u: np.ndarray
    grid_log_mean_det: np.ndarray
    grid_stderr_log: np.ndarray


@dataclass
class LandscapePoint:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def laplace_rate(p: int, dset: IntervalSet) -> float:
    """sup over D of the complexity rate, exact by concavity and evenness.

    The rate is even and concave with its maximum at 0, so the supremum on
    each interval is attained at 0 clamped into the interval.
    """
    if p < 2:
        raise ValueError("laplace_rate requires p >= 2")
    best = -math.inf
    for a, b in dset.intervals:
        u = min(max(0.0, a), b)
        best = max(best, sigma_p(p, u))
    return best


def _gauss_exponent(p: int, d: int, kind: Field) -> float:
    if kind is Field.REAL:
        return p * (d - 1) / 2.0
    return float(p * (d - 1))


def _matrix_side(p: int, d: int, kind: Field) -> int:
    return p * (d - 1) if kind is Field.REAL else 2 * p * (d - 1) + 1


def _spectra(p: int, d: int, kind: Field, n_samples: int, seed: int) -> np.ndarray:
    """Eigenvalues of n_samples ensemble draws at block size d-1, stacked (S, n)."""
    out = []
    for s in range(n_samples):
        if kind is Field.REAL:
            mat = sample_bhgoe(d - 1, p, None, seed=seed, trial=s)
        else:
            mat = sample_tbhgoe(d - 1, p, seed=seed, trial=s)
        out.append(eigenvalues(mat).eigenvalues)
    return np.array(out)


def _log_abs_det_grid(spectra: np.ndarray, us: np.ndarray) -> np.ndarray:
    """L[s, j] = sum_i log|lambda_{s,i} - u_j| with a -inf sentinel for exact hits."""
    diff = np.abs(spectra[:, :, None] - us[None, None, :])
    with np.errstate(divide="ignore"):
        return np.sum(np.log(diff), axis=1)


def _lse(a: np.ndarray, axis=None):
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m), axis=axis)) + np.squeeze(m, axis=axis)
    return out


def det_moment_mc(p: int, d: int, kind: Field, u: float, n_samples: int,
                  seed: int = 0) -> tuple[float, float]:
    """log E|det(W - u)| and its delta-method stderr on the log scale."""
    if n_samples < 2:
        raise ValueError("det_moment_mc requires n_samples >= 2")
    if p < 2 or d < 2:
        raise ValueError("det_moment_mc requires p >= 2 and d >= 2")
    spectra = _spectra(p, d, kind, n_samples, seed)
    ls = _log_abs_det_grid(spectra, np.array([float(u)]))[:, 0]
    if not np.any(np.isfinite(ls)):
        raise ArithmeticError("all determinant samples are singular at this shift")
    m = np.max(ls)
    w = np.exp(ls - m)
    mean_w = float(np.mean(w))
    log_mean = m + math.log(mean_w)
    stderr = float(np.std(w, ddof=1) / (mean_w * math.sqrt(n_samples)))
    return log_mean, stderr


def _simpson_log_weights(a: float, b: float, npts: int) -> tuple[np.ndarray, np.ndarray]:
    if npts < 3:
        npts = 3
    if npts % 2 == 0:
        npts += 1
    us = np.linspace(a, b, npts)
    h = (b - a) / (npts - 1)
    w = np.ones(npts)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return us, np.log(w * h / 3.0)


def _default_npts(length: float) -> int:
    n = max(3, int(math.ceil(33.0 * length)) + 1)
    return n if n % 2 == 1 else n + 1


def kr_bound(
    p: int,
    d: int,
    kind: Field,
    dset: IntervalSet,
    grid_points: int | None = None,
    samples_per_point: int = 200,
    seed: int = 0,
    refine: bool = True,
) -> KacRiceEstimate:
    """Monte Carlo upper bound on the expected critical-point count over D.

    Unbounded interval ends are truncated where the Gaussian factor provably
    dominates; the grid is composite Simpson per interval; matrix samples
    are common to every grid point.
    """
    n = _matrix_side(p, d, kind)
    lpref = log_prefactor(p, d, kind)
    u_max = (
        2.0
        + 2.0 * math.sqrt((p - 1.0) / p)
        + math.sqrt(2.0 * max(lpref, 0.0) / n + 40.0 / n)
    )
    dtrunc, clipped = dset.truncated(u_max)
    if clipped:
        log.info("interval set truncated to |u| <= %.6g (tail bound below e^-20 relative)", u_max)

    spectra = _spectra(p, d, kind, samples_per_point, seed)
    c_gauss = _gauss_exponent(p, d, kind)

    def integrate(level: int) -> tuple[float, float, np.ndarray, np.ndarray, np.ndarray]:
        all_u, all_logw = [], []
        for a, b in dtrunc.intervals:
            npts = grid_points if grid_points is not None else _default_npts(b - a)
            for _ in range(level):
                npts = 2 * npts - 1
            us, logw = _simpson_log_weights(a, b, npts)
            all_u.append(us)
            all_logw.append(logw)
        us = np.concatenate(all_u)
        logw = np.concatenate(all_logw)
        lmat = _log_abs_det_grid(spectra, us)  # (S, G)
        point_log = lmat + (-c_gauss * us**2 + logw)[None, :]
        log_y = _lse(point_log, axis=1)  # per-sample integral, (S,)
        m = np.max(log_y)
        w = np.exp(log_y - m)
        mean_w = float(np.mean(w))
        log_integral = m + math.log(mean_w)
        stderr = float(np.std(w, ddof=1) / (mean_w * math.sqrt(len(w))))
        logmean_det = _lse(lmat, axis=0) - math.log(lmat.shape[0])
        mw = np.exp(lmat - np.max(lmat, axis=0, keepdims=True))
        se_det = np.std(mw, axis=0, ddof=1) / (np.mean(mw, axis=0) * math.sqrt(lmat.shape[0]))
        return log_integral, stderr, us, logmean_det, se_det

    log_int, stderr, us, logmean_det, se_det = integrate(0)
    if refine:
        # double the grid until the quadrature error is buried in MC noise;
        # spectra are shared, so extra grid points cost only log|lambda - u| sums
        for level in range(1, 9):
            nxt = integrate(level)
            moved = abs(nxt[0] - log_int)
            log_int, stderr, us, logmean_det, se_det = nxt
            if moved <= 3.0 * max(stderr, 1e-15):
                break
        else:
            log.warning(
                "grid refinement did not settle below 3 stderr (last move %.3g, stderr %.3g)",
                moved, stderr,
            )

    return KacRiceEstimate(
        p=p,
        d=d,
        field=kind,
        interval_set=dtrunc,
        log_bound=lpref + log_int,
        mc_stderr_log=stderr,
        grid_points=len(us),
        samples_per_point=samples_per_point,
        laplace_prediction=laplace_rate(p, dset),
        log_prefactor=lpref,
        grid_u=us,
        grid_log_mean_det=logmean_det,
        grid_stderr_log=se_det,
    )


# ---------------------------------------------------------------------------
# landscape derivatives at the north pole
# ---------------------------------------------------------------------------

def _batch_landscape_real(entries: np.ndarray, p: int, d: int):
    """Value, gradient, Hessian of the chart pullback at 0 for a batch of tensors.

    Chart: drop the first coordinate of each sphere.  All derivatives are
    exact index gathers: the only nonlinearity is the reconstructed first
    coordinate, whose Hessian at the pole is -identity per slot.
    """
    s = entries.shape[0]
    n = p * (d - 1)
    scale = 1.0 / math.sqrt(n)
    origin = (slice(None),) + (0,) * p
    value = entries[origin] * scale

    grad = np.empty((s, n))
    for a in range(p):
        idx = [0] * p
        idx[a] = slice(1, None)
        grad[:, a * (d - 1):(a + 1) * (d - 1)] = entries[(slice(None), *idx)] * scale

    hess = np.zeros((s, n, n))
    for a in range(p):
        sl_a = slice(a * (d - 1), (a + 1) * (d - 1))
        hess[:, sl_a, sl_a] = -value[:, None, None] * np.eye(d - 1)[None, :, :]
        for b in range(a + 1, p):
            idx = [0] * p
            idx[a] = slice(1, None)
            idx[b] = slice(1, None)
            block = entries[(slice(None), *idx)] * scale
            sl_b = slice(b * (d - 1), (b + 1) * (d - 1))
            hess[:, sl_a, sl_b] = block
            hess[:, sl_b, sl_a] = np.swapaxes(block, 1, 2)
    return value, grad, hess


def _batch_landscape_complex(entries: np.ndarray, p: int, d: int):
    """Complex-chart analogue: coordinates are the real/imaginary parts of the
    free sphere coordinates, ordered [R-parts | I-parts | Im(first coord of slot 1)].
    """
    s = entries.shape[0]
    m = p * (d - 1)
    n = 2 * m + 1
    c = 1.0 / math.sqrt(m)
    origin = (slice(None),) + (0,) * p
    value = np.real(entries[origin]) * c

    single = np.empty((s, m), dtype=complex)
    for a in range(p):
        idx = [0] * p
        idx[a] = slice(1, None)
        single[:, a * (d - 1):(a + 1) * (d - 1)] = entries[(slice(None), *idx)]

    grad = np.empty((s, n))
    grad[:, :m] = np.real(single) * c
    grad[:, m:2 * m] = -np.imag(single) * c
    grad[:, 2 * m] = -np.imag(entries[origin]) * c

    hess = np.zeros((s, n, n))
    eye = np.eye(d - 1)
    for a in range(p):
        sl_ar = slice(a * (d - 1), (a + 1) * (d - 1))
        sl_ai = slice(m + a * (d - 1), m + (a + 1) * (d - 1))
        hess[:, sl_ar, sl_ar] = -value[:, None, None] * eye[None, :, :]
        hess[:, sl_ai, sl_ai] = -value[:, None, None] * eye[None, :, :]
        for b in range(a + 1, p):
            idx = [0] * p
            idx[a] = slice(1, None)
            idx[b] = slice(1, None)
            te = entries[(slice(None), *idx)]
            br = np.real(te) * c
            bi = -np.imag(te) * c
            sl_br = slice(b * (d - 1), (b + 1) * (d - 1))
            sl_bi = slice(m + b * (d - 1), m + (b + 1) * (d - 1))
            hess[:, sl_ar, sl_br] = br
            hess[:, sl_br, sl_ar] = np.swapaxes(br, 1, 2)
            hess[:, sl_ai, sl_bi] = -br
            hess[:, sl_bi, sl_ai] = -np.swapaxes(br, 1, 2)
            hess[:, sl_ar, sl_bi] = bi
            hess[:, sl_bi, sl_ar] = np.swapaxes(bi, 1, 2)
            hess[:, sl_ai, sl_br] = bi
            hess[:, sl_br, sl_ai] = np.swapaxes(bi, 1, 2)
    # row/column of the odd coordinate: zero against slot 1, gradient-linked otherwise
    theta_r = -np.imag(single) * c
    theta_i = -np.real(single) * c
    theta_r[:, : d - 1] = 0.0
    theta_i[:, : d - 1] = 0.0
    hess[:, 2 * m, :m] = theta_r
    hess[:, :m, 2 * m] = theta_r
    hess[:, 2 * m, m:2 * m] = theta_i
    hess[:, m:2 * m, 2 * m] = theta_i
    hess[:, 2 * m, 2 * m] = -value
    return value, grad, hess


def landscape_at_north_pole(t) -> LandscapePoint:
    """Field value, gradient, and Hessian of the normalized landscape at the pole."""
    batch = t.entries[None, ...]
    if t.field is Field.REAL:
        v, g, h = _batch_landscape_real(batch, t.p, t.d)
    else:
        v, g, h = _batch_landscape_complex(batch, t.p, t.d)
    return LandscapePoint(value=float(v[0]), gradient=g[0], hessian=h[0])


# ---------------------------------------------------------------------------
# covariance audit
# ---------------------------------------------------------------------------

@dataclass
class MomentClass:
    name: str
    count: int
    predicted: float
    empirical: float
    stderr: float

    @property
    def z(self) -> float:
        dev = abs(self.empirical - self.predicted)
        if self.stderr == 0.0:
            return 0.0 if dev < 1e-12 else math.inf
        return dev / self.stderr

    @property
    def ok(self) -> bool:
        return abs(self.empirical - self.predicted) <= 3.0 * self.stderr + 1e-12


@dataclass
class AuditReport:
    p: int
    d: int
    field: Field
    n_samples: int
    classes: list[MomentClass] = dc_field(default_factory=list)
    regression_slope: float = float("nan")

    @property
    def all_ok(self) -> bool:
        return all(c.ok for c in self.classes)

    @property
    def max_abs_deviation(self) -> float:
        return max(abs(c.empirical - c.predicted) for c in self.classes)

    @property
    def max_z(self) -> float:
        return max(c.z for c in self.classes)


def _pair_class(name, d1, idx_pairs, predicted):
    """Pooled moment over a set of column pairs: per-sample class mean, then stderr."""
    i = np.array([a for a, _ in idx_pairs], dtype=int)
    j = np.array([b for _, b in idx_pairs], dtype=int)
    y = np.einsum("sk,sk->s", d1[:, i], d1[:, j]) / len(i)
    s = len(y)
    return MomentClass(
        name=name,
        count=len(i),
        predicted=predicted,
        empirical=float(np.mean(y)),
        stderr=float(np.std(y, ddof=1) / math.sqrt(s)),
    )


def covariance_audit(p: int, d: int, kind: Field, n_samples: int, seed: int = 0) -> AuditReport:
    """Statistical audit of the landscape covariance structure at the pole.

    Every distinct predicted second moment of (value, gradient, Hessian)
    becomes one pooled class, compared to its prediction within the
    delta-method stderr.  In the complex case the Hessian's extra
    row coincides entrywise with slot-2..p gradient components (swap the
    real/imaginary tags and flip one sign), so those cross moments are
    +-1/(N-1) rather than zero and are audited at their true value.
    Also fits E[H_diag | value], whose slope must be -1.
    """
    if n_samples < 10**4:
        raise ValueError("covariance_audit requires n_samples >= 1e4")
    count = d**p
    if kind is Field.REAL:
        flat = normals(seed, "audit-real", size=n_samples * count)
        entries = flat.reshape((n_samples,) + (d,) * p)
        value, grad, hess = _batch_landscape_real(entries, p, d)
        n = p * (d - 1)
        var1 = 1.0 / n
    else:
        flat = complex_normals(seed, "audit-complex", size=n_samples * count)
        entries = flat.reshape((n_samples,) + (d,) * p)
        value, grad, hess = _batch_landscape_complex(entries, p, d)
        n = 2 * p * (d - 1) + 1
        var1 = 1.0 / (n - 1)

    # column layout: [value | gradient | upper-triangular Hessian entries]
    iu, ju = np.triu_indices(n)
    d1 = np.concatenate([value[:, None], grad, hess[:, iu, ju]], axis=1)
    col_v = 0
    col_g = lambda k: 1 + k
    upper_pos = {(int(a), int(b)): 1 + n + t for t, (a, b) in enumerate(zip(iu, ju))}
    col_h = lambda a, b: upper_pos[(a, b) if a <= b else (b, a)]

    # structural tags for Hessian entries
    if kind is Field.REAL:
        dm1 = d - 1
        slot = lambda k: k // dm1
        diag_pos = [(k, k) for k in range(n)]
        zero_pos = [(a, b) for a in range(n) for b in range(a + 1, n) if slot(a) == slot(b)]
        rand_pos = [(a, b) for a in range(n) for b in range(a + 1, n) if slot(a) != slot(b)]
        named_hh = []
        named_gh = []
    else:
        m = p * (d - 1)
        dm1 = d - 1
        kslot = lambda t: t // dm1
        diag_pos = [(k, k) for k in range(n)]
        zero_pos, rand_pos, named_hh, named_gh = [], [], [], []
        for a in range(m):
            for b in range(a + 1, m):
                same = kslot(a) == kslot(b)
                (zero_pos if same else rand_pos).append((a, b))          # RR
                (zero_pos if same else rand_pos).append((m + a, m + b))  # II
                if not same:
                    named_hh.append(((a, b), (m + a, m + b), -var1))     # B vs -B
        for a in range(m):
            for b in range(m):
                if kslot(a) == kslot(b):
                    zero_pos.append(tuple(sorted((a, m + b))))           # within-slot RI
                elif a < b:
                    rand_pos.append((a, m + b))
                    rand_pos.append((b, m + a))
                    named_hh.append(((a, m + b), (b, m + a), var1))      # RI transpose partner
        for t in range(m):  # extra row against R and I coordinates
            pos_r = (t, 2 * m)
            pos_i = (m + t, 2 * m)
            if kslot(t) == 0:
                zero_pos.extend([pos_r, pos_i])
            else:
                rand_pos.extend([pos_r, pos_i])
                named_gh.append((col_g(m + t), col_h(*pos_r), var1))     # g_I vs H[theta, R]
                named_gh.append((col_g(t), col_h(*pos_i), -var1))        # g_R vs H[theta, I]
        zero_pos = [tuple(sorted(z)) for z in zero_pos]
        rand_pos = [tuple(sorted(z)) for z in rand_pos]

    classes = [
        _pair_class("value_var", d1, [(col_v, col_v)], var1),
        _pair_class("value_grad", d1, [(col_v, col_g(k)) for k in range(n)], 0.0),
        _pair_class("grad_var", d1, [(col_g(k), col_g(k)) for k in range(n)], var1),
        _pair_class("grad_cross", d1,
                    [(col_g(a), col_g(b)) for a in range(n) for b in range(a + 1, n)], 0.0),
        _pair_class("value_hess_diag", d1, [(col_v, col_h(k, k)) for k in range(n)], -var1),
        _pair_class("value_hess_off", d1,
                    [(col_v, col_h(a, b)) for a, b in zero_pos + rand_pos], 0.0),
        _pair_class("hess_diag_var", d1, [(col_h(k, k), col_h(k, k)) for k in range(n)], var1),
        _pair_class("hess_zero_var", d1, [(col_h(a, b), col_h(a, b)) for a, b in zero_pos], 0.0),
        _pair_class("hess_rand_var", d1, [(col_h(a, b), col_h(a, b)) for a, b in rand_pos], var1),
        _pair_class("hess_diag_diag", d1,
                    [(col_h(a, a), col_h(b, b)) for a in range(n) for b in range(a + 1, n)], var1),
    ]
    if named_hh:
        classes.append(_pair_class(
            "hess_mirror_pairs", d1,
            [(col_h(*e1), col_h(*e2)) for e1, e2, pred in named_hh if pred < 0], -var1))
        classes.append(_pair_class(
            "hess_transpose_pairs", d1,
            [(col_h(*e1), col_h(*e2)) for e1, e2, pred in named_hh if pred > 0], var1))
    if named_gh:
        classes.append(_pair_class(
            "grad_hess_swap_plus", d1, [(a, b) for a, b, pred in named_gh if pred > 0], var1))
        classes.append(_pair_class(
            "grad_hess_swap_minus", d1, [(a, b) for a, b, pred in named_gh if pred < 0], -var1))

    # remainder: every strict-upper column pair not named above has predicted 0;
    # its per-sample sum comes from the all-pairs identity minus the named sums
    mcols = d1.shape[1]
    rowsum = d1.sum(axis=1)
    total_pairs = (rowsum**2 - np.einsum("sk,sk->s", d1, d1)) / 2.0
    named_pairs: set[tuple[int, int]] = set()
    named_sum = np.zeros(n_samples)
    def _named(cols):
        out = []
        for a, b in cols:
            key = (a, b) if a < b else (b, a)
            if a != b and key not in named_pairs:
                named_pairs.add(key)
                out.append(key)
        return out
    for cols, _pred in [
        ([(col_v, col_g(k)) for k in range(n)], 0.0),
        ([(col_g(a), col_g(b)) for a in range(n) for b in range(a + 1, n)], 0.0),
        ([(col_v, col_h(k, k)) for k in range(n)], -var1),
        ([(col_v, col_h(a, b)) for a, b in zero_pos + rand_pos], 0.0),
        ([(col_h(a, a), col_h(b, b)) for a in range(n) for b in range(a + 1, n)], var1),
        ([(col_h(*e1), col_h(*e2)) for e1, e2, _ in named_hh], 0.0),
        ([(a, b) for a, b, _ in named_gh], 0.0),
    ]:
        fresh = _named(cols)
        if fresh:
            i = np.array([a for a, _ in fresh])
            j = np.array([b for _, b in fresh])
            named_sum += np.einsum("sk,sk->s", d1[:, i], d1[:, j])
    n_rem = mcols * (mcols - 1) // 2 - len(named_pairs)
    y_rem = (total_pairs - named_sum) / n_rem
    classes.append(MomentClass(
        name="remainder_zero",
        count=n_rem,
        predicted=0.0,
        empirical=float(np.mean(y_rem)),
        stderr=float(np.std(y_rem, ddof=1) / math.sqrt(n_samples)),
    ))

    # conditional-mean check: diagonal Hessian entries regressed on the value
    hd = hess[:, range(n), range(n)].ravel()
    vv = np.repeat(value, n)
    slope = float(np.dot(hd - hd.mean(), vv - vv.mean()) / np.dot(vv - vv.mean(), vv - vv.mean()))

    return AuditReport(p=p, d=d, field=kind, n_samples=n_samples,
                       classes=classes, regression_slope=slope)
