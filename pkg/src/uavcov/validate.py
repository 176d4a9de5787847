"""End-to-end correctness gates.

Four independent checks tie the fast analytic pipeline to slower oracles:

* finite differences of the quadrature-evaluated log-Laplace transform
  against the closed-form Toeplitz coefficients,
* the exact rewriting of the LoS coverage integrand used by the density
  polynomial,
* Monte Carlo agreement of the full coverage curve,
* the root-based density estimate against a grid search of the exact curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import density as density_mod
from .coverage import (
    _coeff_table,
    coverage_probability,
    log_laplace_los,
    log_laplace_nlos,
    toeplitz_exp_l1,
)
from .mc import BallLos, estimate_coverage
from .model import ChannelParams, LinkClass, NetworkConfig

FD_TOL = 1e-4
IDENTITY_TOL = 1e-9
MC_TOL_FLOOR = 0.01
MC_TOL_SIGMAS = 3.0


def reference_config() -> NetworkConfig:
    """The benchmark deployment used throughout tests and demos:
    1 station/km^2, 50 m altitude, 200 m blockage radius, 40 dBm / -97 dBm."""
    return NetworkConfig(density=1e-6, altitude=50.0, los_radius=200.0)


@dataclass
class GateResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ""
    extras: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"{status} {self.name}: worst {self.worst:.3e} vs tolerance {self.tolerance:.3e}"
        return msg + (f" ({self.detail})" if self.detail else "")


def random_scenario(rng: np.random.Generator):
    """One randomized (u, tau, cfg) draw spanning the supported parameter box."""
    alpha_los = rng.uniform(2.05, 3.0)
    alpha_nlos = rng.uniform(max(3.2, alpha_los + 0.3), 4.5)
    ch = ChannelParams(
        alpha_los=alpha_los,
        alpha_nlos=alpha_nlos,
        a_los=10.0 ** rng.uniform(-4.5, -3.5),
        a_nlos=10.0 ** rng.uniform(-3.5, -2.8),
        m_los=int(rng.integers(2, 7)),
    )
    altitude = rng.uniform(20.0, 120.0)
    cfg = NetworkConfig(
        density=10.0 ** rng.uniform(-6.5, -5.5),
        altitude=altitude,
        los_radius=rng.uniform(2.0, 6.0) * altitude,
        channel=ch,
    )
    tau = 10.0 ** rng.uniform(-0.5, 1.0)
    u = rng.uniform(0.05, 0.85) * cfg.los_radius ** 2
    return u, tau, cfg


_STENCILS = {
    1: ((-1, 1), (-0.5, 0.5), 1),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0), 2),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5), 3),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0), 4),
}


def _central_difference(f, s: float, n: int, step: float) -> float:
    offsets, weights, power = _STENCILS[n]
    return sum(w * f(s + k * step) for k, w in zip(offsets, weights)) / step ** power


def _fd_derivative(f, s: float, n: int) -> float:
    """n-th derivative by the central stencil, Richardson-extrapolated once
    (both stencils are O(step^2)); step = 1e-3 * s * n."""
    step = 1e-3 * s * n
    coarse = _central_difference(f, s, n, step)
    fine = _central_difference(f, s, n, step / 2.0)
    return (4.0 * fine - coarse) / 3.0


def finite_difference_gate(n_scenarios: int = 20, seed: int = 20260810,
                           eta_order: int = 160, corrupt_c1: bool = False) -> GateResult:
    """Closed-form coefficients vs scaled derivatives of the quadrature
    log-Laplace transform, for every order n <= min(4, m_los - 1).

    corrupt_c1 flips the sign of the analytic c_1 (mutation hook used to
    prove the gate can fail)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_detail = ""
    for _ in range(n_scenarios):
        u, tau, cfg = random_scenario(rng)
        ch = cfg.channel
        row = _coeff_table(np.asarray([u]), tau, cfg)[0].copy()
        if corrupt_c1 and len(row) > 1:
            row[1] = -row[1]
        s = (
            ch.m_los * tau * (u + cfg.altitude ** 2) ** (ch.alpha_los / 2.0)
            / ch.ref_gain(LinkClass.LOS)
        )
        pil = math.pi * cfg.density

        def eta(x, _u=u, _cfg=cfg, _order=eta_order):
            return log_laplace_los(x, _u, _cfg, order=_order) + log_laplace_nlos(
                x, _cfg, order=_order
            )

        # n = 0: the coefficient excludes the additive constant pi lam (u + h^2)
        analytic0 = pil * (row[0] + u + cfg.altitude ** 2)
        rel = abs(analytic0 - eta(s)) / abs(eta(s))
        if rel > worst:
            worst, worst_detail = rel, f"n=0 m={ch.m_los}"
        for n in range(1, min(4, ch.m_los - 1) + 1):
            target = (-s) ** n / math.factorial(n) * _fd_derivative(eta, s, n)
            rel = abs(pil * row[n] - target) / abs(target)
            if rel > worst:
                worst, worst_detail = rel, f"n={n} m={ch.m_los}"
        # keep failure output small: stop early once clearly broken
        if corrupt_c1 and worst > 100 * FD_TOL:
            break
    return GateResult("finite-difference gate", worst <= FD_TOL, worst, FD_TOL, worst_detail)


def identity_gate(n_draws: int = 50, seed: int = 20260811) -> GateResult:
    """Relative gap of the two integrand forms over randomized draws."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_draws):
        u, tau, cfg = random_scenario(rng)
        lam = 10.0 ** rng.uniform(-7.5, -4.5)
        gap = density_mod.integrand_identity_gap(u, lam, tau, cfg)
        row = _coeff_table(np.asarray([u]), tau, cfg)[0]
        pil = math.pi * lam
        lhs = pil * math.exp(pil * cfg.altitude ** 2) * toeplitz_exp_l1(row, pil)
        worst = max(worst, gap / abs(lhs))
    return GateResult("integrand identity gate", worst <= IDENTITY_TOL, worst, IDENTITY_TOL)


def mc_agreement_gate(cfg: NetworkConfig | None = None, taus=None, trials: int = 100_000,
                      seed: int = 1, order: int = 64, workers=None) -> GateResult:
    """|analytic - empirical| <= max(0.01, 3 stderr) at every threshold."""
    cfg = cfg or reference_config()
    taus = list(taus) if taus is not None else [10.0 ** (d / 10.0) for d in range(-10, 25, 5)]
    estimates = estimate_coverage(
        cfg, BallLos(cfg.los_radius), taus, trials, seed, metric="sir", workers=workers
    )
    worst = 0.0
    worst_detail = ""
    passed = True
    for est in estimates:
        analytic = coverage_probability(est.tau, cfg, order=order).total
        gap = abs(analytic - est.coverage)
        tol = max(MC_TOL_FLOOR, MC_TOL_SIGMAS * est.stderr)
        if gap / tol > worst:
            worst = gap / tol
            worst_detail = f"tau={est.tau:.4g}: |{analytic:.4f} - {est.coverage:.4f}| vs {tol:.4f}"
        passed &= gap <= tol
    return GateResult("analytic-vs-MC gate", passed, worst, 1.0, worst_detail)


def bound_gate(tau: float = 1.0, cfg: NetworkConfig | None = None, grid=None,
               order: int = 64) -> GateResult:
    """Root-based density estimate vs the grid-search optimum.

    Reports the ratio and the coverage gap.  Note: the root can land a few
    percent above the true optimum (the polynomial surrogate ignores the
    strictly negative density derivative of the NLoS term), in which case
    this gate fails honestly; see the acceptance notes.
    """
    cfg = cfg or reference_config()
    grid = grid if grid is not None else density_mod.default_density_grid()
    opt = density_mod.lambda_lower_bound(tau, cfg, order=order, grid=grid, grid_order=order)
    star = opt.lambda_star_grid
    ratio = opt.lambda_lb / star
    cov_star = coverage_probability(tau, cfg.with_density(star), order=order).total
    cov_lb = coverage_probability(tau, cfg.with_density(opt.lambda_lb), order=order).total
    detail = f"lb={opt.lambda_lb:.4e} star={star:.4e} cov_gap={cov_star - cov_lb:+.2e}"
    return GateResult(
        "density bound gate", opt.lambda_lb <= star, ratio, 1.0, detail,
        extras={"lambda_lb": opt.lambda_lb, "lambda_star_grid": star,
                "ratio": ratio, "coverage_gap": cov_star - cov_lb},
    )


def run_all(cfg: NetworkConfig | None = None, trials: int = 100_000, seed: int = 1,
            order: int = 64, workers=None) -> list[GateResult]:
    cfg = cfg or reference_config()
    return [
        finite_difference_gate(),
        identity_gate(),
        mc_agreement_gate(cfg, trials=trials, seed=seed, order=order, workers=workers),
        bound_gate(cfg=cfg, order=order),
    ]
