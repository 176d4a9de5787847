"""Monte Carlo oracle for the aerial-user downlink.

Simulates PPP station layouts in a finite disk, classifies each link as
LoS/NLoS (deterministic ball or a probabilistic model), draws Gamma fading
power gains, associates with the nearest station by ground distance, and
accumulates empirical SIR/SINR coverage.

Reproducibility contract: trial i draws from its own counter-based Philox
stream keyed by (seed, i), and results are aggregated in trial order, so an
estimate is bitwise identical for a given (seed, config, model, window)
regardless of worker count or scheduling.
"""

from __future__ import annotations

import functools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .errors import ConfigError, NumericalError
from .model import LinkClass, NetworkConfig

_MAX_EMPTY_RESAMPLES = 100


@dataclass(frozen=True)
class BallLos:
    """Deterministic blockage: LoS exactly within ground radius `radius` (m)."""

    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ConfigError("ball radius must be non-negative")


@dataclass(frozen=True)
class ProbabilisticLos:
    """Per-link Bernoulli blockage with probability prob(ground_dist_m, altitude_m).

    The callable must be picklable (a module-level function or partial) for
    multi-process estimation.
    """

    prob: Callable[[float, float], float]


LosModel = Union[BallLos, ProbabilisticLos]


def _logistic_elevation(a: float, b: float, ground_dist: float, altitude: float) -> float:
    theta_deg = math.degrees(math.atan2(altitude, ground_dist))
    return 1.0 / (1.0 + a * math.exp(-b * (theta_deg - a)))


def elevation_logistic(a: float = 9.61, b: float = 0.16) -> Callable[[float, float], float]:
    """Two-parameter logistic LoS probability in the elevation angle:

        p = 1 / (1 + a * exp(-b * (theta_deg - a))),  theta = atan(h / r).

    The defaults are representative urban-macro fit values; both parameters
    are environment-dependent configuration, not a claim of this library.
    """
    return functools.partial(_logistic_elevation, a, b)


@dataclass(frozen=True)
class SimWindow:
    """Sampling disk radius (m) for the truncated PPP around the user's projection."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError("window radius must be strictly positive")


def default_window(cfg: NetworkConfig, model: LosModel | None = None) -> SimWindow:
    """max(5 R, 12 / sqrt(pi lam)): covers the blockage ball and keeps the
    truncated far-field interference far below one standard error."""
    if cfg.density <= 0:
        raise ConfigError("default window requires a strictly positive density")
    radius = cfg.los_radius
    if isinstance(model, BallLos):
        radius = max(radius, model.radius)
    return SimWindow(max(5.0 * radius, 12.0 / math.sqrt(math.pi * cfg.density)))


@dataclass(frozen=True)
class McEstimate:
    """Empirical coverage at one threshold with its binomial standard error."""

    tau: float
    coverage: float
    trials: int
    stderr: float
    seed: int
    metric: str

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 1.0:
            raise NumericalError(f"coverage {self.coverage} outside [0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.metric not in ("sir", "sinr"):
            raise ValueError(f"metric must be 'sir' or 'sinr', got {self.metric}")


class TrialResult(NamedTuple):
    sir: float
    sinr: float
    serving_dist: float
    serving_los: bool


def _trial_rng(seed: int, index: int) -> np.random.Generator:
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_ppp(density: float, window: SimWindow, rng: np.random.Generator) -> np.ndarray:
    """One PPP realization on the window disk: an (n, 2) array of points.

    n ~ Poisson(density * pi * radius^2); the points are uniform on the disk
    (radius sqrt-transformed, angle uniform).
    """
    if density < 0:
        raise ValueError("density must be non-negative")
    n = rng.poisson(density * math.pi * window.radius ** 2)
    r = window.radius * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def _classify_dists(dists: np.ndarray, model: LosModel, altitude: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Boolean LoS mask for an array of ground distances."""
    if isinstance(model, BallLos):
        return dists <= model.radius
    p = np.array([model.prob(float(d), altitude) for d in dists])
    if np.any((p < 0) | (p > 1)):
        raise ConfigError("LoS probability model returned a value outside [0, 1]")
    return rng.random(len(dists)) < p


def classify(point, model: LosModel, altitude: float, rng: np.random.Generator) -> LinkClass:
    """Link class of one station at the given planar position."""
    d = float(np.hypot(*np.asarray(point, dtype=float)))
    los = bool(_classify_dists(np.array([d]), model, altitude, rng)[0])
    return LinkClass.LOS if los else LinkClass.NLOS


def sample_gain(link: LinkClass, ch, rng: np.random.Generator) -> float:
    """Power gain draw: Gamma(shape m_v, scale sidelobe_gain * a_v / m_v)."""
    m = ch.nakagami(link)
    return float(rng.gamma(m, ch.ref_gain(link) / m))


def _evaluate_realization(dists: np.ndarray, los_mask: np.ndarray, gains: np.ndarray,
                          cfg: NetworkConfig) -> TrialResult:
    """SIR/SINR of one realization; gains already include the reference-distance
    constants, so only the geometric factor is applied here."""
    ch = cfg.channel
    h2 = cfg.altitude ** 2
    alpha = np.where(los_mask, ch.alpha_los, ch.alpha_nlos)
    received = gains * (dists * dists + h2) ** (-alpha / 2.0)
    server = int(np.argmin(dists))
    signal = float(received[server])
    interference = float(received.sum() - received[server])
    sir = signal / interference if interference > 0.0 else math.inf
    sinr = signal / (interference + cfg.sigma_n_sq)
    return TrialResult(sir, sinr, float(dists[server]), bool(los_mask[server]))


def trial(cfg: NetworkConfig, model: LosModel, window: SimWindow,
          rng: np.random.Generator) -> TrialResult:
    """One network realization (resampled while empty, up to 100 attempts)."""
    ch = cfg.channel
    for _ in range(_MAX_EMPTY_RESAMPLES):
        points = sample_ppp(cfg.density, window, rng)
        if len(points) == 0:
            continue
        dists = np.hypot(points[:, 0], points[:, 1])
        los_mask = _classify_dists(dists, model, cfg.altitude, rng)
        shapes = np.where(los_mask, ch.m_los, ch.m_nlos)
        scales = np.where(
            los_mask, ch.ref_gain(LinkClass.LOS) / ch.m_los, ch.ref_gain(LinkClass.NLOS)
        )
        gains = rng.gamma(shapes, scales)
        return _evaluate_realization(dists, los_mask, gains, cfg)
    raise NumericalError(
        f"no station realized in the window after {_MAX_EMPTY_RESAMPLES} attempts "
        f"(density * area = {cfg.density * math.pi * window.radius ** 2:.3e})"
    )


class TrialArrays(NamedTuple):
    sir: np.ndarray
    sinr: np.ndarray
    serving_dist: np.ndarray
    serving_los: np.ndarray


def _run_range(cfg, model, window, seed, start, stop) -> TrialArrays:
    n = stop - start
    sir = np.empty(n)
    sinr = np.empty(n)
    dist = np.empty(n)
    los = np.empty(n, dtype=bool)
    for i in range(n):
        res = trial(cfg, model, window, _trial_rng(seed, start + i))
        sir[i], sinr[i], dist[i], los[i] = res
    return TrialArrays(sir, sinr, dist, los)


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("UAVCOV_THREADS", "")
    return max(1, int(env)) if env.strip() else 1


def simulate_trials(cfg: NetworkConfig, model: LosModel, trials: int, seed: int,
                    window: SimWindow | None = None,
                    workers: int | None = None) -> TrialArrays:
    """Run `trials` independent realizations, optionally across processes.

    Per-trial streams make the output independent of the split; chunks are
    reassembled in index order.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must fit in 64 bits")
    window = window or default_window(cfg, model)
    nworkers = _worker_count(workers)
    if nworkers == 1:
        return _run_range(cfg, model, window, seed, 0, trials)
    bounds = np.linspace(0, trials, nworkers + 1, dtype=int)
    spans = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=len(spans)) as pool:
        parts = list(pool.map(
            _run_range,
            *zip(*[(cfg, model, window, seed, a, b) for a, b in spans]),
        ))
    return TrialArrays(*(np.concatenate(f) for f in zip(*parts)))


def estimate_coverage(cfg: NetworkConfig, model: LosModel, taus, trials: int, seed: int,
                      metric: str = "sir", window: SimWindow | None = None,
                      workers: int | None = None) -> list[McEstimate]:
    """Empirical coverage at each threshold in `taus` (linear SIR units).

    All thresholds share the same trial realizations, so the estimates are
    exactly non-increasing in tau.  Zero-interference trials count as covered
    at any finite threshold (their SIR is +inf).
    """
    if metric not in ("sir", "sinr"):
        raise ValueError(f"metric must be 'sir' or 'sinr', got {metric}")
    arrays = simulate_trials(cfg, model, trials, seed, window=window, workers=workers)
    values = arrays.sir if metric == "sir" else arrays.sinr
    out = []
    for tau in taus:
        if not tau > 0:
            raise ValueError("thresholds must be strictly positive")
        p = float(np.mean(values > tau))
        se = math.sqrt(p * (1.0 - p) / trials)
        out.append(McEstimate(float(tau), p, trials, se, seed, metric))
    return out
