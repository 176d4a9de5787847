"""Real-valued special functions and fixed-order Gauss-Legendre quadrature.

All routines are pure float64 functions, safe for concurrent use, and accept
scalars (and, where noted, ndarrays).  The hypergeometric and incomplete-beta
entry points provide the real analytic continuations to non-positive
arguments that the coverage formulas are built on; scipy backs the plain
positive-parameter cases (gammaln, regularized gammainc).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special as _sp

from .errors import NonConvergenceError, PoleError

# Series policy: budget of 10_000 terms, convergence declared when the term
# magnitude stays below 1e-16 of the partial sum for 3 consecutive terms.
MAX_SERIES_TERMS = 10_000
SERIES_RTOL = 1e-16
_STREAK = 3
_POLE_TOL = 1e-9

# Direct series is used for x in (_PFAFF_CUTOFF, 0]; below the cutoff the
# Pfaff transformation maps the argument into [1/3, 1), keeping the series
# within budget for x down to about -1e4.
_PFAFF_CUTOFF = -0.5


def is_nonpositive_integer(x: float, tol: float = _POLE_TOL) -> bool:
    """True when x lies within tol of 0, -1, -2, ..."""
    return x <= tol and abs(x - round(x)) <= tol


def ln_gamma(a: float) -> float:
    """ln Gamma(a) for a > 0."""
    if a <= 0:
        raise ValueError(f"ln_gamma requires a > 0, got {a}")
    return float(_sp.gammaln(a))


def lower_inc_gamma(a: float, x: float) -> float:
    """Lower incomplete gamma: integral of t^(a-1) e^(-t) over [0, x].

    For a < 0 (non-integer) the value is the standard analytic continuation,
    computed by the upward recurrence

        gamma(a, x) = (gamma(a + 1, x) + x^a e^(-x)) / a,

    applied until the parameter is positive.  On the first step below zero
    both numerator terms are positive, so the recurrence is stable in the
    regime the library uses (a in (-1, 0)).
    """
    if x < 0:
        raise ValueError(f"lower_inc_gamma requires x >= 0, got {x}")
    if is_nonpositive_integer(a):
        raise PoleError(f"lower incomplete gamma has poles at non-positive integers, got a={a}")
    if a > 0:
        return float(_sp.gammainc(a, x) * math.exp(_sp.gammaln(a)))
    if x == 0:
        raise ValueError("continued lower_inc_gamma diverges at x = 0 for a < 0")
    steps = int(math.ceil(-a))
    ahead = a + steps  # in (0, 1)
    val = float(_sp.gammainc(ahead, x) * math.exp(_sp.gammaln(ahead)))
    log_x, exp_mx = math.log(x), math.exp(-x)
    for j in range(1, steps + 1):
        aj = ahead - j
        val = (val + math.exp(aj * log_x) * exp_mx) / aj
    return val


def _hyp2f1_series(a: float, b: float, c: float, x) -> np.ndarray:
    """Power series for 2F1(a, b; c; x), |x| < 1, vectorized over x."""
    x = np.asarray(x, dtype=float)
    term = np.ones_like(x)
    total = np.ones_like(x)
    streak = np.zeros(x.shape, dtype=np.int64)
    for k in range(MAX_SERIES_TERMS):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * x
        total = total + term
        small = np.abs(term) <= SERIES_RTOL * np.abs(total)
        streak = np.where(small, streak + 1, 0)
        if int(streak.min()) >= _STREAK:
            return total
    raise NonConvergenceError(
        f"2F1 series did not converge within {MAX_SERIES_TERMS} terms "
        f"(a={a}, b={b}, c={c}, max|x|={float(np.max(np.abs(x))):.6g})"
    )


def _hyp2f1_pfaff(a: float, b: float, c: float, x) -> np.ndarray:
    """Pfaff transformation: 2F1(a,b;c;x) = (1-x)^(-a) 2F1(a, c-b; c; x/(x-1))."""
    x = np.asarray(x, dtype=float)
    return (1.0 - x) ** (-a) * _hyp2f1_series(a, c - b, c, x / (x - 1.0))


def hyp2f1_nonpos(a: float, b: float, c: float, x):
    """Gauss hypergeometric 2F1(a, b; c; x) for real parameters and x <= 0.

    x may be a scalar or an ndarray.  Raises PoleError when c is a
    non-positive integer, ValueError for positive x, and NonConvergenceError
    if the series budget is exhausted (arguments far beyond -1e4).
    """
    if is_nonpositive_integer(c):
        raise PoleError(f"2F1 undefined at non-positive integer c = {c}")
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa > 0):
        raise ValueError("hyp2f1_nonpos requires x <= 0")
    out = np.empty_like(xa)
    near = xa > _PFAFF_CUTOFF
    if near.any():
        out[near] = _hyp2f1_series(a, b, c, xa[near])
    if (~near).any():
        out[~near] = _hyp2f1_pfaff(a, b, c, xa[~near])
    return float(out[0]) if scalar else out


def inc_beta_cont(x, a: float, b: float):
    """Incomplete beta B(x; a, b), analytically continued.

    For x in [0, 1] this is the integral of t^(a-1) (1-t)^(b-1) over [0, x],
    evaluated through B(x; a, b) = (x^a / a) 2F1(a, 1-b; a+1; x); a and b may
    be any reals off the pole set (a a non-positive integer).

    For x < 0, x^a is ambiguous in real arithmetic.  This routine returns the
    principal real combination |x|^a 2F1(a, 1-b; a+1; x) / a, i.e. the value
    in which the formal phase (-1)^(-a) multiplying B(-y; a, b), y > 0, has
    already been absorbed: (-1)^(-a) (-y)^a == y^a.  Callers that need a
    different branch must supply their own phase; no complex intermediate is
    ever formed here.

    x may be a scalar or an ndarray with entries in (-inf, 1].
    """
    if is_nonpositive_integer(a):
        raise PoleError(f"inc_beta_cont has poles at non-positive integer a, got a={a}")
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa > 1.0):
        raise ValueError("inc_beta_cont requires x <= 1")
    if a < 0 and np.any(xa == 0.0):
        raise ValueError("continued inc_beta_cont diverges at x = 0 for a < 0")
    out = np.zeros_like(xa)
    pos = xa > 0
    if pos.any():
        xp = xa[pos]
        out[pos] = xp ** a * _hyp2f1_series(a, 1.0 - b, a + 1.0, xp) / a
    neg = xa < 0
    if neg.any():
        xn = xa[neg]
        out[neg] = (-xn) ** a * hyp2f1_nonpos(a, 1.0 - b, a + 1.0, xn) / a
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre abscissae/weights on [-1, 1]."""

    nodes: tuple
    weights: tuple
    order: int

    def __post_init__(self):
        if self.order < 1 or len(self.nodes) != self.order or len(self.weights) != self.order:
            raise ValueError("nodes/weights must both have length equal to the declared order")
        n = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if not np.all(np.diff(n) > 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(w <= 0) or abs(float(w.sum()) - 2.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 2")


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> QuadratureRule:
    """Gauss-Legendre rule of the given order (cached)."""
    x, w = leggauss(order)
    return QuadratureRule(tuple(x), tuple(w), order)


def quad_fixed(f, lo: float, hi: float, rule: QuadratureRule) -> float:
    """Fixed-order Gauss-Legendre estimate of the integral of f over [lo, hi].

    Exact for polynomials of degree <= 2*order - 1.  f is called once with
    the full node array; integrands that only accept scalars are looped over.
    """
    if hi < lo:
        raise ValueError(f"empty integration range [{lo}, {hi}]")
    if hi == lo:
        return 0.0
    x = np.asarray(rule.nodes)
    w = np.asarray(rule.weights)
    half = 0.5 * (hi - lo)
    t = 0.5 * (hi + lo) + half * x
    try:
        y = np.asarray(f(t), dtype=float)
        if y.shape != t.shape:
            raise TypeError
    except (TypeError, ValueError):
        y = np.array([float(f(ti)) for ti in t])
    return float(half * np.dot(w, y))
