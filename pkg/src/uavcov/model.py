"""Network geometry and channel bookkeeping.

Ground stations form a planar PPP; the aerial user sits at altitude h above
the origin and is served by the station nearest in ground distance.  A link
is line-of-sight exactly when its ground distance is at most the blockage
radius R.  All quantities are SI (m, m^-2, W) and linear power ratios.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NumericalError


class LinkClass(enum.Enum):
    LOS = "los"
    NLOS = "nlos"


@dataclass(frozen=True)
class ChannelParams:
    """Per-link-class propagation constants (linear units).

    The power gain of a class-v link is Gamma distributed with shape m_v and
    scale sidelobe_gain * a_v / m_v, so its mean is sidelobe_gain * a_v.
    NLoS fading is Rayleigh (m_nlos fixed to 1).
    """

    alpha_los: float = 2.1
    alpha_nlos: float = 4.0
    a_los: float = 10.0 ** -4.11   # gain at 1 m reference distance
    a_nlos: float = 10.0 ** -3.29
    m_los: int = 3
    m_nlos: int = 1
    sidelobe_gain: float = 1.0

    def __post_init__(self):
        if self.m_nlos != 1:
            raise ConfigError("NLoS fading is Rayleigh: m_nlos must be 1")
        if int(self.m_los) != self.m_los or self.m_los < 1:
            raise ConfigError(f"m_los must be an integer >= 1, got {self.m_los}")
        for name in ("alpha_los", "alpha_nlos", "a_los", "a_nlos", "sidelobe_gain"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.alpha_nlos <= 2:
            raise ConfigError("alpha_nlos must exceed 2 for summable far-field interference")
        if self.alpha_nlos < self.alpha_los:
            raise ConfigError("alpha_nlos < alpha_los: NLoS may not attenuate slower than LoS")

    def alpha(self, link: LinkClass) -> float:
        return self.alpha_los if link is LinkClass.LOS else self.alpha_nlos

    def ref_gain(self, link: LinkClass) -> float:
        """Reference-distance gain including the sidelobe factor."""
        a = self.a_los if link is LinkClass.LOS else self.a_nlos
        return self.sidelobe_gain * a

    def nakagami(self, link: LinkClass) -> int:
        return self.m_los if link is LinkClass.LOS else self.m_nlos


@dataclass(frozen=True)
class NetworkConfig:
    """Deployment snapshot: density (m^-2), altitude (m), blockage radius (m),
    transmit/noise power (W) and the channel constants."""

    density: float
    altitude: float
    los_radius: float
    tx_power: float = 10.0        # 40 dBm
    noise_power: float = 10.0 ** -12.7  # -97 dBm
    channel: ChannelParams = field(default_factory=ChannelParams)

    def __post_init__(self):
        if self.density < 0 or self.altitude < 0 or self.los_radius < 0:
            raise ConfigError("density, altitude and los_radius must be non-negative")
        if not self.tx_power > 0:
            raise ConfigError("tx_power must be strictly positive")
        if self.noise_power < 0 or not math.isfinite(self.noise_power / self.tx_power):
            raise ConfigError("normalized noise power must be finite and non-negative")

    @property
    def sigma_n_sq(self) -> float:
        """Noise power normalized by transmit power."""
        return self.noise_power / self.tx_power

    def with_density(self, density: float) -> "NetworkConfig":
        return replace(self, density=density)


@dataclass(frozen=True)
class LosRadiusMap:
    """Monotone non-decreasing map from altitude (m) to blockage radius (m).

    Three representations: a constant, an affine law R = c0 + c1*h, or a
    lookup table with linear interpolation (clamped outside its range).
    """

    kind: str
    params: tuple

    @staticmethod
    def constant(radius: float) -> "LosRadiusMap":
        if radius < 0:
            raise ConfigError("constant radius must be non-negative")
        return LosRadiusMap("constant", (float(radius),))

    @staticmethod
    def affine(c0: float, c1: float) -> "LosRadiusMap":
        if c0 < 0 or c1 < 0:
            raise ConfigError("affine radius map needs c0 >= 0 and c1 >= 0")
        return LosRadiusMap("affine", (float(c0), float(c1)))

    @staticmethod
    def table(points) -> "LosRadiusMap":
        pts = sorted((float(h), float(r)) for h, r in points)
        if len(pts) < 2:
            raise ConfigError("table radius map needs at least two points")
        radii = [r for _, r in pts]
        if any(r < 0 for r in radii) or any(b < a for a, b in zip(radii, radii[1:])):
            raise ConfigError("table radii must be non-negative and non-decreasing in altitude")
        if len({h for h, _ in pts}) != len(pts):
            raise ConfigError("table altitudes must be distinct")
        return LosRadiusMap("table", tuple(pts))


def los_radius_at(radius_map: LosRadiusMap, altitude: float) -> float:
    """Blockage radius R(h) for the given altitude."""
    if altitude < 0:
        raise ValueError("altitude must be non-negative")
    if radius_map.kind == "constant":
        return radius_map.params[0]
    if radius_map.kind == "affine":
        c0, c1 = radius_map.params
        return c0 + c1 * altitude
    hs = np.array([h for h, _ in radius_map.params])
    rs = np.array([r for _, r in radius_map.params])
    return float(np.interp(altitude, hs, rs))


def path_loss(ground_dist_sq, altitude: float, link: LinkClass, ch: ChannelParams):
    """Distance law a_v * (d^2 + h^2)^(-alpha_v/2); accepts scalar or array d^2.

    The sidelobe factor is not applied here: it scales the fading
    distribution, not the distance law.
    """
    d2 = np.asarray(ground_dist_sq, dtype=float)
    if np.any(d2 < 0):
        raise ValueError("ground_dist_sq must be non-negative")
    r2 = d2 + altitude * altitude
    if np.any(r2 == 0):
        raise ValueError("path loss undefined at zero 3-D distance")
    a = ch.a_los if link is LinkClass.LOS else ch.a_nlos
    out = a * r2 ** (-ch.alpha(link) / 2.0)
    return float(out) if np.ndim(ground_dist_sq) == 0 else out


def delta_exponent(link: LinkClass, ch: ChannelParams) -> float:
    """2 / alpha_v, the interference tail exponent of class v."""
    return 2.0 / ch.alpha(link)


def assoc_prob(link: LinkClass, density: float, radius: float) -> float:
    """Probability that the serving station is of the given class.

    LoS association happens exactly when the blockage ball is non-empty:
    P_los = 1 - exp(-pi * density * radius^2).
    """
    if density < 0 or radius < 0:
        raise ValueError("density and radius must be non-negative")
    p_nlos = math.exp(-math.pi * density * radius * radius)
    return 1.0 - p_nlos if link is LinkClass.LOS else p_nlos


def serving_dist_pdf(link: LinkClass, r, cfg: NetworkConfig):
    """Density of the serving ground distance conditioned on the serving class.

    LoS branch: 2 pi lam r e^(-pi lam r^2) / P_los on [0, R], zero outside.
    NLoS branch: same numerator normalized by P_nlos, supported on [R, inf).
    """
    p = assoc_prob(link, cfg.density, cfg.los_radius)
    if p == 0.0:
        raise NumericalError(f"degenerate association: P({link.value}) = 0")
    rr = np.asarray(r, dtype=float)
    if np.any(rr < 0):
        raise ValueError("distance must be non-negative")
    lam = cfg.density
    dens = 2.0 * math.pi * lam * rr * np.exp(-math.pi * lam * rr * rr) / p
    if link is LinkClass.LOS:
        dens = np.where(rr <= cfg.los_radius, dens, 0.0)
    else:
        dens = np.where(rr >= cfg.los_radius, dens, 0.0)
    return float(dens) if np.ndim(r) == 0 else dens
