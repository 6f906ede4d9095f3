"""Numerical kernel: exponential-integral family, Gauss hypergeometric for small
integer parameters, adaptive Gauss-Kronrod quadrature, and a monotone root finder.

Everything here is pure and stateless; all routines accept scalars, the array
routines (exp_e1, tricomi_psi11) also accept numpy arrays.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.5772156649015328606

__all__ = [
    "EULER_GAMMA",
    "NumericTolerance",
    "QuadratureResult",
    "IntegrationError",
    "BracketError",
    "exp_e1",
    "tricomi_psi11",
    "gauss_2f1",
    "gauss_2f1_near_unit",
    "integrate",
    "solve_root_monotone",
]


@dataclass(frozen=True)
class NumericTolerance:
    """Relative/absolute tolerance pair plus an iteration budget."""

    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    max_iter: int = 200

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.abs_tol < 0:
            raise ValueError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


# Defaults: two orders tighter than anything the experiment layer asserts.
SPECIAL_TOL = NumericTolerance(rel_tol=1e-10, abs_tol=0.0, max_iter=500)
QUAD_TOL = NumericTolerance(rel_tol=1e-8, abs_tol=1e-14, max_iter=2000)
ROOT_TOL = NumericTolerance(rel_tol=1e-10, abs_tol=0.0, max_iter=300)


class IntegrationError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance.

    Carries the partial estimate and its error bound.
    """

    def __init__(self, message, partial, error_bound):
        super().__init__(f"{message} (partial estimate {partial!r}, error bound {error_bound!r})")
        self.partial = partial
        self.error_bound = error_bound


class BracketError(RuntimeError):
    """No bracket for the requested target below the search ceiling."""


# ---------------------------------------------------------------------------
# exponential integral E1 and Tricomi Psi(1,1,x) = e^x E1(x)
# ---------------------------------------------------------------------------

_E1_SERIES_TERMS = 40


def _e1_series(x):
    """Power series E1(x) = -gamma - ln x + sum_k (-1)^{k+1} x^k / (k k!), x <= 1."""
    acc = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, _E1_SERIES_TERMS + 1):
        term = term * (-x) / k
        acc = acc - term / k
    return -EULER_GAMMA - np.log(x) + acc


def _psi_cf(x):
    """Continued fraction for e^x E1(x), stable for x >= 1.

    e^x E1(x) = 1/(x+1- 1^2/(x+3- 2^2/(x+5- ...))), evaluated with the
    modified Lentz scheme, vectorized over the input array.
    """
    tiny = 1e-300
    f = x + 1.0
    c = x + 1.0
    d = np.zeros_like(x)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 400):
        if not active.any():
            break
        a = -float(k * k)
        b = x + (2 * k + 1)
        d = b + a * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + a / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = c * d
        f = np.where(active, f * delta, f)
        active = active & (np.abs(delta - 1.0) > 1e-16)
    return 1.0 / f


def exp_e1(x):
    """Exponential integral E1(x) = int_x^inf e^{-t}/t dt for x > 0.

    Series below x=1, continued fraction above; relative accuracy ~1e-13
    over [1e-8, 700].
    """
    arr = np.asarray(x, dtype=float)
    if arr.size and not (arr > 0).all():
        raise ValueError("exp_e1 requires x > 0")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    lo = arr <= 1.0
    if lo.any():
        out[lo] = _e1_series(arr[lo])
    hi = ~lo
    if hi.any():
        out[hi] = np.exp(-arr[hi]) * _psi_cf(arr[hi])
    return float(out[0]) if scalar else out


def tricomi_psi11(x):
    """Tricomi confluent function Psi(1,1,x) = e^x E1(x) for x > 0.

    Evaluated without forming e^x, so it stays finite for arbitrarily
    large x (asymptotically 1/x).
    """
    arr = np.asarray(x, dtype=float)
    if arr.size and not (arr > 0).all():
        raise ValueError("tricomi_psi11 requires x > 0")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    lo = arr <= 1.0
    if lo.any():
        out[lo] = np.exp(arr[lo]) * _e1_series(arr[lo])
    hi = ~lo
    if hi.any():
        out[hi] = _psi_cf(arr[hi])
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Gauss hypergeometric 2F1 for small positive integer parameters
# ---------------------------------------------------------------------------


def _digamma_int(n):
    """psi(n) for integer n >= 1: -gamma + H_{n-1}."""
    return -EULER_GAMMA + sum(1.0 / k for k in range(1, n))


def _f21_series(a, b, c, z):
    """Raw Gauss series; converges for |z| < 1, used for |z| <= 0.5.

    Handles a terminating series when a or b is a nonpositive integer
    (which arises via the Pfaff transform for negative arguments).
    """
    total = 1.0
    term = 1.0
    for k in range(100000):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        if term == 0.0:
            break
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return total


def _f21_near_unit_neg(a, b, m, w):
    """2F1(a,b;c;1-w) for c = a+b-m, m >= 1, 0 < w < 1 (logarithmic case)."""
    c = a + b - m
    fact = math.factorial
    coef = fact(m - 1) * fact(c - 1) / (fact(a - 1) * fact(b - 1))
    s1 = 0.0
    term = 1.0
    for n in range(m):
        if n > 0:
            term *= (a - m + n - 1) * (b - m + n - 1) / (n * (n - m))
        s1 += term * w**n
    s1 *= coef * w ** (-m)
    if a - m < 1 or b - m < 1:
        return s1  # 1/Gamma of a nonpositive integer kills the log series
    pref = ((-1) ** m) * fact(c - 1) / (fact(a - m - 1) * fact(b - m - 1))
    lw = math.log(w)
    s2 = 0.0
    poch_a = poch_b = nfact = 1.0
    nmfact = float(fact(m))
    for n in range(500):
        if n > 0:
            poch_a *= a + n - 1
            poch_b *= b + n - 1
            nfact *= n
            nmfact *= n + m
        bracket = lw - _digamma_int(n + 1) - _digamma_int(n + m + 1) \
            + _digamma_int(a + n) + _digamma_int(b + n)
        t = poch_a * poch_b / (nfact * nmfact) * bracket * w**n
        s2 += t
        if n > 4 and abs(t) <= 1e-17 * abs(s2):
            break
    return s1 - pref * s2


def _f21_near_unit_zero(a, b, w):
    """2F1(a,b;a+b;1-w) for 0 < w < 1 (logarithmic case, c-a-b = 0)."""
    pref = math.factorial(a + b - 1) / (math.factorial(a - 1) * math.factorial(b - 1))
    lw = math.log(w)
    s = 0.0
    poch_a = poch_b = nfact = 1.0
    for n in range(500):
        if n > 0:
            poch_a *= a + n - 1
            poch_b *= b + n - 1
            nfact *= n
        bracket = 2.0 * _digamma_int(n + 1) - _digamma_int(a + n) - _digamma_int(b + n) - lw
        t = poch_a * poch_b / nfact**2 * bracket * w**n
        s += t
        if n > 4 and abs(t) <= 1e-17 * abs(s):
            break
    return pref * s


def _f21_near_unit_pos(a, b, m, w):
    """2F1(a,b;c;1-w) for c = a+b+m, m >= 1, 0 < w < 1."""
    c = a + b + m
    fact = math.factorial
    s1 = 0.0
    term = 1.0
    for n in range(m):
        if n > 0:
            term *= (a + n - 1) * (b + n - 1) / (n * (n - m))
        s1 += term * w**n
    s1 *= fact(m - 1) * fact(c - 1) / (fact(a + m - 1) * fact(b + m - 1))
    pref = ((-1) ** m) * fact(c - 1) / (fact(a - 1) * fact(b - 1))
    lw = math.log(w)
    s2 = 0.0
    poch_a = poch_b = nfact = 1.0
    nmfact = float(fact(m))
    for n in range(500):
        if n > 0:
            poch_a *= a + m + n - 1
            poch_b *= b + m + n - 1
            nfact *= n
            nmfact *= n + m
        bracket = lw - _digamma_int(n + 1) - _digamma_int(n + m + 1) \
            + _digamma_int(a + n + m) + _digamma_int(b + n + m)
        t = poch_a * poch_b / (nfact * nmfact) * bracket * w**n
        s2 += t
        if n > 4 and abs(t) <= 1e-17 * abs(s2):
            break
    return s1 - pref * (w**m) * s2


def gauss_2f1_near_unit(a, b, c, one_minus_z):
    """2F1(a,b;c;z) parameterized by w = 1-z, for 0 < w <= 0.5.

    Entry point for callers that know 1-z to full precision (the ratio-SIR
    upper-bound CDF needs z within ~1e-16 of 1); integer a, b >= 1, c >= 1.
    """
    w = float(one_minus_z)
    if not 0.0 < w <= 0.5:
        raise ValueError("gauss_2f1_near_unit requires 0 < 1-z <= 0.5")
    m = c - a - b
    if m < 0:
        return _f21_near_unit_neg(a, b, -m, w)
    if m == 0:
        return _f21_near_unit_zero(a, b, w)
    return _f21_near_unit_pos(a, b, m, w)


def gauss_2f1(a, b, c, z):
    """Gauss hypergeometric 2F1(a,b;c;z) for small positive integers a, b, c
    and real z < 1.

    Raw series for |z| <= 0.5, Pfaff transform for z < -0.5, and the
    degenerate (integer c-a-b, logarithmic) linear transformations for
    0.5 < z < 1, so arguments arbitrarily close to 1 stay accurate.
    """
    for name, v in (("a", a), ("b", b), ("c", c)):
        if int(v) != v or v < 1:
            raise ValueError(f"gauss_2f1 parameter {name} must be a positive integer, got {v!r}")
    a, b, c = int(a), int(b), int(c)
    z = float(z)
    if z >= 1.0:
        raise ValueError(f"gauss_2f1 requires z < 1, got {z}")
    if z == 0.0:
        return 1.0
    if z < -0.5:
        # Pfaff: (1-z)^{-a} 2F1(a, c-b; c; z/(z-1)); new argument in (1/3, 1)
        zz = z / (z - 1.0)
        if c - b >= 1:
            if zz <= 0.5:
                inner = _f21_series(a, c - b, c, zz)
            else:
                inner = gauss_2f1_near_unit(a, c - b, c, 1.0 - zz)
        else:
            inner = _f21_series(a, c - b, c, zz)  # terminating polynomial
        return (1.0 - z) ** (-a) * inner
    if z <= 0.5:
        return _f21_series(a, b, c, z)
    return gauss_2f1_near_unit(a, b, c, 1.0 - z)


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod quadrature
# ---------------------------------------------------------------------------

_KRONROD_NODES = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_KRONROD_WEIGHTS = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_GAUSS7_WEIGHTS = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full node/weight vectors on [-1, 1]
_XK = np.concatenate([-_KRONROD_NODES[:-1], _KRONROD_NODES[::-1]])
_WK = np.concatenate([_KRONROD_WEIGHTS[:-1], _KRONROD_WEIGHTS[::-1]])
_WG = np.zeros_like(_WK)
_WG[1:-1:2] = np.concatenate([_GAUSS7_WEIGHTS[:-1], _GAUSS7_WEIGHTS[::-1]])


def _gk15(f, a, b):
    """One Gauss-Kronrod 15 panel on [a, b]: (kronrod, error_estimate)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _XK), dtype=float)
    k = half * float(np.dot(_WK, fx))
    g = half * float(np.dot(_WG, fx))
    # QUADPACK-style rescaled error estimate
    avg = k / (b - a)
    resasc = half * float(np.dot(_WK, np.abs(fx - avg)))
    err = abs(k - g)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return k, err


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_bound: float
    panels: int

    def __float__(self):
        return self.value


def _transform(f, lo, hi):
    """Map an improper range onto a finite one; returns (g, a, b)."""
    lo = float(lo)
    hi = float(hi)
    if math.isfinite(lo) and math.isfinite(hi):
        return f, lo, hi
    if math.isfinite(lo) and hi == math.inf:
        def g(t):
            t = np.asarray(t, dtype=float)
            u = 1.0 - t
            return f(lo + t / u) / (u * u)
        return g, 0.0, 1.0
    if lo == -math.inf and math.isfinite(hi):
        def g(t):
            t = np.asarray(t, dtype=float)
            u = 1.0 - t
            return f(hi - t / u) / (u * u)
        return g, 0.0, 1.0
    if lo == -math.inf and hi == math.inf:
        def g(t):
            t = np.asarray(t, dtype=float)
            u = 1.0 - t * t
            return f(t / u) * (1.0 + t * t) / (u * u)
        return g, -1.0, 1.0
    raise ValueError(f"invalid integration range ({lo}, {hi})")


def integrate(f, lo, hi, tol=QUAD_TOL):
    """Adaptive Gauss-Kronrod quadrature of a vectorized integrand.

    `f` must accept a numpy array of abscissae and return the integrand
    values elementwise. Semi-infinite and doubly infinite ranges are mapped
    onto finite ones by rational substitution. Deterministic for fixed
    inputs. Raises IntegrationError (carrying the partial estimate) if the
    tolerance is not met within tol.max_iter panel subdivisions.
    """
    if lo == hi:
        return QuadratureResult(0.0, 0.0, 0)
    sign = 1.0
    if lo > hi:
        lo, hi, sign = hi, lo, -1.0
    g, a, b = _transform(f, lo, hi)
    val, err = _gk15(g, a, b)
    heap = [(-err, 0, a, b, val, err)]
    total_val, total_err = val, err
    counter = 1
    min_width = 1e-14 * (b - a)
    for _ in range(tol.max_iter):
        if total_err <= max(tol.abs_tol, tol.rel_tol * abs(total_val)):
            return QuadratureResult(sign * total_val, total_err, counter)
        neg_err, _, pa, pb, pval, perr = heapq.heappop(heap)
        if pb - pa <= min_width:
            # cannot subdivide further (integrable endpoint singularity);
            # keep the panel's contribution as is
            heapq.heappush(heap, (0.0, counter, pa, pb, pval, perr))
            counter += 1
            if all(item[0] == 0.0 for item in heap):
                break
            continue
        pm = 0.5 * (pa + pb)
        v1, e1 = _gk15(g, pa, pm)
        v2, e2 = _gk15(g, pm, pb)
        total_val += v1 + v2 - pval
        total_err += e1 + e2 - perr
        heapq.heappush(heap, (-e1, counter, pa, pm, v1, e1))
        heapq.heappush(heap, (-e2, counter + 1, pm, pb, v2, e2))
        counter += 2
    if total_err <= max(tol.abs_tol, tol.rel_tol * abs(total_val)):
        return QuadratureResult(sign * total_val, total_err, counter)
    raise IntegrationError(
        f"quadrature did not converge within {tol.max_iter} subdivisions",
        sign * total_val, total_err)


# ---------------------------------------------------------------------------
# monotone root finding
# ---------------------------------------------------------------------------


def solve_root_monotone(g, target, tol=ROOT_TOL, lo=0.0, ceiling=None, first_step=1.0):
    """Solve g(x) = target for a continuous nondecreasing g with g(lo) <= target.

    Bracket by geometric doubling from `lo`, then bisect. Returns x* with
    |g(x*) - target| <= tol.rel_tol * max(1, |target|). Raises BracketError
    if no bracket exists below `ceiling`.
    """
    resid_tol = tol.rel_tol * max(1.0, abs(target))
    glo = g(lo)
    if glo > target + resid_tol:
        raise BracketError(
            f"g(lo)={glo!r} already exceeds target={target!r} at lo={lo!r}")
    if abs(glo - target) <= resid_tol:
        return lo
    step = abs(first_step) if first_step else 1.0
    hi = lo + step
    ghi = g(hi)
    while ghi < target:
        if ceiling is not None and hi >= ceiling:
            raise BracketError(
                f"no bracket below ceiling {ceiling!r}: g({hi!r})={ghi!r} < target {target!r}")
        step *= 2.0
        hi = lo + step
        ghi = g(hi)
    a, b = lo, hi
    x = 0.5 * (a + b)
    for _ in range(tol.max_iter):
        x = 0.5 * (a + b)
        gx = g(x)
        if abs(gx - target) <= resid_tol:
            return x
        if gx < target:
            a = x
        else:
            b = x
        if b - a <= 1e-15 * max(1.0, abs(b)):
            break
    gx = g(x)
    if abs(gx - target) <= resid_tol:
        return x
    raise BracketError(
        f"bisection stalled: x={x!r}, residual {gx - target!r} exceeds {resid_tol!r}")
