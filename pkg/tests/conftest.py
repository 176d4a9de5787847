"""Shared fixtures and independent oracles.

The conditional simulators here sample interferer fields directly from their
defining distributions (conditioned on the serving distance and class), so
they share no code path with the analytic pipeline they check.
"""

import math

import numpy as np
import pytest

from uavcov import NetworkConfig, reference_config


@pytest.fixture(scope="session")
def desk_cfg() -> NetworkConfig:
    return reference_config()


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def mc_conditional_los(u: float, tau: float, cfg: NetworkConfig, trials: int, seed: int):
    """Coverage given LoS service at ground distance sqrt(u), by direct
    simulation of the conditional interferer field: LoS stations on the
    annulus (u, R^2], NLoS stations beyond R out to the window."""
    ch = cfg.channel
    h2 = cfg.altitude ** 2
    r2 = cfg.los_radius ** 2
    win2 = max(5.0 * cfg.los_radius, 12.0 / math.sqrt(math.pi * cfg.density)) ** 2
    lam = cfg.density
    a_los = ch.sidelobe_gain * ch.a_los
    a_nlos = ch.sidelobe_gain * ch.a_nlos
    threshold_level = tau * (u + h2) ** (ch.alpha_los / 2.0)
    hits = 0
    for i in range(trials):
        rng = _rng(seed, i)
        n_los = rng.poisson(lam * math.pi * (r2 - u))
        n_nlos = rng.poisson(lam * math.pi * (win2 - r2))
        d2_los = u + (r2 - u) * rng.random(n_los)
        d2_nlos = r2 + (win2 - r2) * rng.random(n_nlos)
        g_los = rng.gamma(ch.m_los, a_los / ch.m_los, n_los)
        g_nlos = rng.gamma(1.0, a_nlos, n_nlos)
        interference = float(
            (g_los * (d2_los + h2) ** (-ch.alpha_los / 2.0)).sum()
            + (g_nlos * (d2_nlos + h2) ** (-ch.alpha_nlos / 2.0)).sum()
        )
        signal_gain = rng.gamma(ch.m_los, a_los / ch.m_los)
        hits += signal_gain > threshold_level * interference
    p = hits / trials
    return p, math.sqrt(p * (1.0 - p) / trials)


def mc_conditional_nlos(u: float, tau: float, cfg: NetworkConfig, trials: int, seed: int):
    """Coverage given NLoS service at ground distance sqrt(u) >= R: the
    interferer field is all-NLoS beyond the serving distance."""
    ch = cfg.channel
    h2 = cfg.altitude ** 2
    win2 = max(5.0 * math.sqrt(u), 12.0 / math.sqrt(math.pi * cfg.density)) ** 2
    lam = cfg.density
    a_nlos = ch.sidelobe_gain * ch.a_nlos
    threshold_level = tau * (u + h2) ** (ch.alpha_nlos / 2.0)
    hits = 0
    for i in range(trials):
        rng = _rng(seed, i)
        n = rng.poisson(lam * math.pi * (win2 - u))
        d2 = u + (win2 - u) * rng.random(n)
        g = rng.gamma(1.0, a_nlos, n)
        interference = float((g * (d2 + h2) ** (-ch.alpha_nlos / 2.0)).sum())
        signal_gain = rng.gamma(1.0, a_nlos)
        hits += signal_gain > threshold_level * interference
    p = hits / trials
    return p, math.sqrt(p * (1.0 - p) / trials)
