"""Unit conversions for the CLI boundary.

Everything inside the library is strict SI: metres, m^-2, watts, linear
power ratios.  dB / dBm / km^-2 exist only here.
"""

import math


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError(f"cannot express non-positive ratio {x} in dB")
    return 10.0 * math.log10(x)


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watt_to_dbm(p_w: float) -> float:
    if p_w <= 0:
        raise ValueError(f"cannot express non-positive power {p_w} in dBm")
    return 10.0 * math.log10(p_w) + 30.0


def per_km2_to_per_m2(x: float) -> float:
    return x * 1e-6


def per_m2_to_per_km2(x: float) -> float:
    return x * 1e6
