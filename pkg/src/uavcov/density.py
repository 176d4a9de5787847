"""Coverage-maximizing ground-station density.

The density derivative of the LoS coverage integral admits a polynomial
surrogate whose coefficients are annulus integrals of the Toeplitz column:
the integrand rewrites exactly as

    pi lam e^(pi lam h^2) ||e^(pi lam C(u))||_1
        = e^(a(u) lam) * sum_{n < m} kappa_n(u) lam^(n+1),

with a(u) = pi (c_0(u) + h^2) and kappa_n(u) = pi^(n+1) ||N^n||_1 / n!
(N the strictly-lower part of C, nilpotent of index <= m).  Setting the
polynomial sum_n beta_n lam^n to zero yields a root-based estimate of the
optimal density; a log-grid search over the exact coverage curve provides
the reference optimum.  Roots are extracted from the companion matrix after
nondimensionalizing lam by 1/(pi R^2), which keeps the power basis
well-conditioned at physical densities of order 1e-6 m^-2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import special
from .coverage import _coeff_table, _check_tau, coverage_probability, toeplitz_exp_l1
from .errors import NoRootError
from .model import NetworkConfig

_REAL_ROOT_TOL = 1e-9
_MAX_COMPANION_DEGREE = 12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DensityPolynomial:
    """Coefficients beta_0..beta_m of the density polynomial plus the
    generating configuration (its density field is irrelevant)."""

    coefficients: tuple
    config: NetworkConfig

    def __post_init__(self):
        m = self.config.channel.m_los
        if len(self.coefficients) != m + 1:
            raise ValueError(f"expected {m + 1} coefficients, got {len(self.coefficients)}")
        r2 = self.config.los_radius ** 2
        if r2 > 0 and abs(self.coefficients[0] - math.pi * r2) > 1e-9 * math.pi * r2:
            raise ValueError("beta_0 must equal pi R^2")

    def __call__(self, density: float) -> float:
        return float(np.polyval(self.coefficients[::-1], density))


@dataclass(frozen=True)
class DensityOptimum:
    """Root-based density estimate plus (optionally) the grid-search optimum."""

    lambda_lb: float
    lambda_star_grid: float | None
    all_real_roots: tuple


def _kappa_row(entries: np.ndarray) -> np.ndarray:
    """kappa_0..kappa_{m-1} for one coefficient row."""
    m = len(entries)
    sub = np.zeros(m)
    sub[1:] = entries[1:]
    col = np.zeros(m)
    col[0] = 1.0
    out = np.empty(m)
    for n in range(m):
        out[n] = math.pi ** (n + 1) * np.abs(col).sum() / math.factorial(n)
        col = np.convolve(sub, col)[:m]
    return out


def a_of_u(u: float, tau: float, cfg: NetworkConfig) -> float:
    """Exponent slope a(u) = pi (c_0(u) + h^2) of the rewritten integrand."""
    tau = _check_tau(tau)
    r2 = cfg.los_radius ** 2
    if not 0.0 <= u <= r2:
        raise ValueError(f"u = {u} outside the LoS ball [0, {r2}]")
    c0 = _coeff_table(np.asarray([u]), tau, cfg)[0, 0]
    return math.pi * (float(c0) + cfg.altitude ** 2)


def kappa_n(u: float, n: int, tau: float, cfg: NetworkConfig) -> float:
    """kappa_n(u) = pi^(n+1) ||N^n||_1 / n!; zero for n >= m_los by nilpotency."""
    tau = _check_tau(tau)
    if n < 0:
        raise ValueError("n must be non-negative")
    m = cfg.channel.m_los
    if n >= m:
        return 0.0
    row = _coeff_table(np.asarray([u]), tau, cfg)[0]
    return float(_kappa_row(row)[n])


def integrand_identity_gap(u: float, lam: float, tau: float, cfg: NetworkConfig) -> float:
    """Absolute gap between the two forms of the LoS coverage integrand.

    |pi lam e^(pi lam h^2) ||e^(pi lam C(u))||_1
       - e^(a(u) lam) sum_n kappa_n(u) lam^(n+1)|

    The rewriting is an identity (the strictly-lower coefficients are
    non-negative, so no sign cancellation spoils the norm split); the gap
    should sit at rounding level, <= 1e-9 relative.
    """
    tau = _check_tau(tau)
    if not lam > 0:
        raise ValueError("lam must be strictly positive")
    row = _coeff_table(np.asarray([u]), tau, cfg)[0]
    h2 = cfg.altitude ** 2
    pil = math.pi * lam
    lhs = pil * math.exp(pil * h2) * toeplitz_exp_l1(row, pil)
    a_u = math.pi * (row[0] + h2)
    kap = _kappa_row(row)
    powers = lam ** np.arange(1, len(kap) + 1)
    rhs = math.exp(a_u * lam) * float(np.dot(kap, powers))
    return abs(lhs - rhs)


def beta_coeffs(tau: float, cfg: NetworkConfig, order: int = 64) -> DensityPolynomial:
    """Polynomial coefficients from Gauss-Legendre integrals over [0, R^2].

    beta_0 = pi R^2; beta_m = integral of a(u) kappa_{m-1}(u);
    otherwise beta_n = integral of a(u) kappa_{n-1}(u) + (n+1) kappa_n(u).
    """
    tau = _check_tau(tau)
    m = cfg.channel.m_los
    r2 = cfg.los_radius ** 2
    if r2 == 0.0:
        raise ValueError("density polynomial undefined for a zero LoS radius")
    rule = special.gauss_legendre(order)
    u = 0.5 * r2 * (np.asarray(rule.nodes) + 1.0)
    w = 0.5 * r2 * np.asarray(rule.weights)
    table = _coeff_table(u, tau, cfg)
    a_u = math.pi * (table[:, 0] + cfg.altitude ** 2)
    kap = np.vstack([_kappa_row(table[i]) for i in range(len(u))])
    betas = np.empty(m + 1)
    betas[0] = math.pi * r2
    for n in range(1, m):
        betas[n] = float(np.dot(w, a_u * kap[:, n - 1] + (n + 1) * kap[:, n]))
    betas[m] = float(np.dot(w, a_u * kap[:, m - 1]))
    return DensityPolynomial(tuple(betas), cfg)


def _real_positive_roots(coeffs_ascending: np.ndarray) -> list[float]:
    """Real positive roots of sum_n q_n x^n, via companion eigenvalues (or a
    bracketed sign scan for very high degree)."""
    q = np.asarray(coeffs_ascending, dtype=float)
    nz = np.nonzero(np.abs(q) > 1e-300)[0]
    if len(nz) == 0:
        return []
    q = q[: nz[-1] + 1]
    if len(q) < 2:
        return []
    if len(q) - 1 <= _MAX_COMPANION_DEGREE:
        roots = np.roots(q[::-1])
        radius = max(1e-300, float(np.max(np.abs(roots))))
        real = [float(r.real) for r in roots if abs(r.imag) <= _REAL_ROOT_TOL * radius]
        return sorted(r for r in real if r > 0)
    # fallback: sign scan + bisection on [0, 1e3] in nondimensional units
    xs = np.linspace(0.0, 1e3, 20001)
    vals = np.polyval(q[::-1], xs)
    found = []
    for i in range(len(xs) - 1):
        if vals[i] == 0.0:
            found.append(float(xs[i]))
        elif vals[i] * vals[i + 1] < 0:
            lo, hi = xs[i], xs[i + 1]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if np.polyval(q[::-1], mid) * np.polyval(q[::-1], lo) <= 0:
                    hi = mid
                else:
                    lo = mid
            found.append(0.5 * (lo + hi))
    return sorted(r for r in found if r > 0)


def lambda_lower_bound(
    tau: float,
    cfg: NetworkConfig,
    order: int = 64,
    grid=None,
    grid_order: int = 64,
) -> DensityOptimum:
    """Root-based estimate of the coverage-maximizing density.

    Solves sum_n beta_n lam^n = 0 in nondimensional units mu = lam pi R^2 and
    selects the smallest strictly positive real root at which the polynomial
    crosses from positive to negative (it starts at beta_0 = pi R^2 > 0, so
    this is the first descending zero of the derivative surrogate).  When a
    density grid is supplied, the exact-coverage grid optimum is attached as
    lambda_star_grid.
    """
    poly = beta_coeffs(tau, cfg, order=order)
    scale = math.pi * cfg.los_radius ** 2
    nondim = np.array([b * scale ** -n for n, b in enumerate(poly.coefficients)])
    nondim_roots = _real_positive_roots(nondim)

    def eval_nondim(mu: float) -> float:
        return float(np.polyval(nondim[::-1], mu))

    chosen = None
    anchors = [0.0] + nondim_roots
    for i, root in enumerate(nondim_roots):
        below = 0.5 * (anchors[i] + root)
        above = 0.5 * (root + nondim_roots[i + 1]) if i + 1 < len(nondim_roots) else 1.5 * root
        if eval_nondim(below) > 0.0 > eval_nondim(above):
            chosen = root
            break
    if chosen is None:
        raise NoRootError(
            f"no positive descending root: coefficients {poly.coefficients}",
            coefficients=poly.coefficients,
            config=cfg,
        )
    lam_lb = chosen / scale
    star = lambda_star_grid(tau, cfg, grid, order=grid_order) if grid is not None else None
    roots = tuple(r / scale for r in nondim_roots)
    return DensityOptimum(lambda_lb, star, roots)


def default_density_grid(lo: float = 1e-8, hi: float = 1e-4, points: int = 60) -> np.ndarray:
    """Log-spaced density grid in m^-2."""
    return np.logspace(math.log10(lo), math.log10(hi), points)


def lambda_star_grid(tau: float, cfg: NetworkConfig, grid, order: int = 64) -> float:
    """Grid argmax of the coverage probability over density, refined once by
    golden-section search on log-density between the neighbors of the argmax.

    A boundary argmax is returned as-is (no interior bracket to refine)."""
    tau = _check_tau(tau)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("density grid must be non-empty and strictly positive")
    grid = np.sort(grid)

    def cov(lam: float) -> float:
        return coverage_probability(tau, cfg.with_density(lam), order=order).total

    values = np.array([cov(lam) for lam in grid])
    idx = int(np.argmax(values))
    if idx == 0 or idx == len(grid) - 1 or len(grid) < 3:
        return float(grid[idx])
    lo, hi = math.log(grid[idx - 1]), math.log(grid[idx + 1])
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = cov(math.exp(x1)), cov(math.exp(x2))
    while hi - lo > 1e-4:
        if f1 > f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = cov(math.exp(x1))
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = cov(math.exp(x2))
    return math.exp(0.5 * (lo + hi))
