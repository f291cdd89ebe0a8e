"""Radio propagation and NOMA/SIC achievable rates.

Path loss follows the urban-macro style 128.1 + 37.6 log10(d_km) curve,
small-scale fading is Rayleigh with unit average power (so |g|^2 is
exponential with mean 1), and per-subcarrier rates use Shannon capacity in
bits/s with log base 2. With two users on one subcarrier the receiver
decodes the stronger signal first under interference from the weaker one,
cancels it, then decodes the weaker signal interference-free.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def pathloss_db(distance_km: float, offset_db: float = 128.1, slope_db: float = 37.6) -> float:
    """Distance-based path loss in dB; distance is in kilometres."""
    if distance_km <= 0:
        raise ValueError(f"distance must be > 0 km, got {distance_km}")
    return offset_db + slope_db * math.log10(distance_km)


def noise_power_w(psd_dbm_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power in Watt over the given bandwidth."""
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be > 0 Hz, got {bandwidth_hz}")
    noise_dbm = psd_dbm_hz + 10.0 * math.log10(bandwidth_hz)
    return 10.0 ** ((noise_dbm - 30.0) / 10.0)


def linear_gain(pathloss_db_value: float) -> float:
    """Large-scale power gain (beta) corresponding to a path loss in dB."""
    return 10.0 ** (-pathloss_db_value / 10.0)


def sample_fading(beta: np.ndarray, n_channels: int, rng: np.random.Generator) -> np.ndarray:
    """Per-slot squared channel gains |h|^2, shape (n_ues, n_channels).

    Each entry is an i.i.d. unit-mean exponential (Rayleigh power) draw
    scaled by the UE's large-scale gain beta.
    """
    beta = np.asarray(beta, dtype=float)
    return rng.exponential(1.0, size=(beta.size, n_channels)) * beta[:, None]


def noma_rates(
    ue_ids: Sequence[int],
    gains_sq: Sequence[float],
    powers_w: Sequence[float],
    noise_w: float,
    bandwidth_hz: float,
) -> dict[int, float]:
    """Achievable uplink rates in bps for 1 or 2 users sharing one subcarrier.

    For two users the one with the larger |h|^2 (ties broken toward the
    lower id) is decoded first, seeing the other as interference; the weaker
    one is decoded after cancellation against noise only.
    """
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be > 0")
    n = len(ue_ids)
    if n not in (1, 2):
        raise ValueError(f"subcarrier occupancy must be 1 or 2, got {n}")

    if n == 1:
        snr = gains_sq[0] * powers_w[0] / noise_w
        return {ue_ids[0]: bandwidth_hz * math.log2(1.0 + snr)}

    a, b = 0, 1
    if gains_sq[b] > gains_sq[a] or (gains_sq[b] == gains_sq[a] and ue_ids[b] < ue_ids[a]):
        a, b = 1, 0
    # a is the strong user, b the weak one
    strong = bandwidth_hz * math.log2(
        1.0 + gains_sq[a] * powers_w[a] / (noise_w + gains_sq[b] * powers_w[b])
    )
    weak = bandwidth_hz * math.log2(1.0 + gains_sq[b] * powers_w[b] / noise_w)
    return {ue_ids[a]: strong, ue_ids[b]: weak}
