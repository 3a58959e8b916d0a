"""Sparse LoS mmWave channels, ULA steering vectors and the BS-repeater gain."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import HALF_SECTOR_DEG, UeDrop, ue_azimuth_in_panel_frame

SPEED_OF_LIGHT = 299_792_458.0
NLOS_OFFSET_DB = -10.0


def dbm_to_watt(dbm: float) -> float:
    return 10 ** ((dbm - 30.0) / 10.0)


def wavelength(freq: float) -> float:
    return SPEED_OF_LIGHT / freq


def steering(m_antennas: int, theta: float) -> np.ndarray:
    """Half-wavelength ULA response ``[1, e^{j pi sin t}, ..., e^{j pi (M-1) sin t}]``.

    ``theta`` is in degrees and must lie in [-90, 90].
    """
    if m_antennas < 1:
        raise ValueError("m_antennas must be >= 1")
    if not -90.0 <= theta <= 90.0:
        raise ValueError(f"theta must be in [-90, 90] deg, got {theta}")
    return np.exp(1j * np.pi * np.arange(m_antennas) * np.sin(np.deg2rad(theta)))


def steering_matrix(m_antennas: int, thetas) -> np.ndarray:
    """Stack of steering vectors, shape ``(len(thetas), m_antennas)``."""
    thetas = np.asarray(thetas, dtype=float)
    if np.any(np.abs(thetas) > 90.0):
        raise ValueError("all angles must be in [-90, 90] deg")
    return np.exp(1j * np.pi * np.outer(np.sin(np.deg2rad(thetas)), np.arange(m_antennas)))


def path_gain(distance: float, carrier_freq: float, phase: float = 0.0) -> complex:
    """Free-space complex path gain with amplitude ``lambda_c / (4 pi d)``."""
    if distance <= 0:
        raise ValueError(f"distance must be positive, got {distance}")
    amp = wavelength(carrier_freq) / (4 * np.pi * distance)
    return complex(amp * np.exp(1j * phase))


def element_gain(theta: float, pattern: str = "isotropic") -> float:
    if pattern == "isotropic":
        return 1.0
    if pattern == "cosine":
        if abs(theta) > HALF_SECTOR_DEG:
            return 0.0
        return float(np.cos(np.deg2rad(theta)))
    raise ValueError(f"unknown element pattern {pattern!r}")


@dataclass(frozen=True)
class ChannelRealization:
    """Row channel from the serving panel to one UE (``h f`` gives the gain)."""

    h: np.ndarray
    path_gain: complex
    aod_at_panel: float
    panel: int


@dataclass(frozen=True)
class LinkBudget:
    beta: complex
    g_sq: float
    sigma_s_sq: float
    sigma_n_sq: float
    sigma_z_sq: float
    m_r: int = 8

    def __post_init__(self):
        if min(self.sigma_s_sq, self.sigma_n_sq, self.sigma_z_sq) <= 0 or self.g_sq <= 0:
            raise ValueError("all powers and the amplification factor must be positive")

    @property
    def snr_ceiling(self) -> float:
        """SNR limit for an unbounded beam gain, set by the forwarded relay noise."""
        return self.sigma_s_sq * abs(self.beta) ** 2 / (self.sigma_n_sq * self.m_r)


def ue_channel(
    drop: UeDrop,
    k: int,
    panel_antennas: int,
    freq: float,
    rng: np.random.Generator,
    *,
    element_pattern: str = "isotropic",
    nlos: bool = False,
) -> ChannelRealization:
    """LoS channel ``alpha * rho(theta) * a(theta)^H`` from UE ``k``'s serving panel.

    Draws one uniform phase from ``rng`` (plus an angle and phase for the
    optional NLoS path), so calling it for k = 0..K-1 with a shared generator
    gives the same phases regardless of ``panel_antennas``.
    """
    theta = ue_azimuth_in_panel_frame(drop, k)
    alpha = path_gain(float(drop.ranges[k]), freq, rng.uniform(0.0, 2 * np.pi))
    rho = element_gain(theta, element_pattern)
    h = alpha * rho * steering(panel_antennas, theta).conj()
    if nlos:
        theta2 = rng.uniform(-HALF_SECTOR_DEG, HALF_SECTOR_DEG)
        alpha2 = abs(alpha) * 10 ** (NLOS_OFFSET_DB / 20) * np.exp(1j * rng.uniform(0.0, 2 * np.pi))
        h = h + alpha2 * element_gain(theta2, element_pattern) * steering(panel_antennas, theta2).conj()
    return ChannelRealization(h, alpha, theta, int(drop.panel_of[k]))


def ue_channels(drop: UeDrop, panel_antennas: int, freq: float, rng, **kwargs) -> list[ChannelRealization]:
    return [ue_channel(drop, k, panel_antennas, freq, rng, **kwargs) for k in range(len(drop))]


def bs_asr_beta(
    m_b: int,
    m_r: int,
    d_br: float,
    freq: float,
    *,
    tx_power_dbm: float = 30.0,
    noise_asr_dbm: float = -85.0,
    noise_ue_dbm: float = -90.0,
) -> LinkBudget:
    """Fixed BS -> repeater gain ``beta = w_r^H H_br f_b`` with boresight-matched beams.

    With a rank-one LoS channel and unit-modulus matched beams at both ends
    the array gains add coherently, so ``|beta| = |alpha_br| * M_b * M_r``.
    The amplification follows the ``g^2 = 1/|beta|^2`` policy.
    """
    if m_b < 1 or m_r < 1:
        raise ValueError("antenna counts must be >= 1")
    alpha = path_gain(d_br, freq, 0.0)
    a_r = steering(m_r, 0.0)
    a_t = steering(m_b, 0.0)
    h_br = alpha * np.outer(a_r, a_t.conj())
    beta = complex(a_r.conj() @ h_br @ a_t)
    return LinkBudget(
        beta=beta,
        g_sq=1.0 / abs(beta) ** 2,
        sigma_s_sq=dbm_to_watt(tx_power_dbm),
        sigma_n_sq=dbm_to_watt(noise_asr_dbm),
        sigma_z_sq=dbm_to_watt(noise_ue_dbm),
        m_r=m_r,
    )


def link_budget_for(scenario) -> LinkBudget:
    return bs_asr_beta(
        scenario.bs_antennas,
        scenario.asr_antennas,
        scenario.bs_asr_distance,
        scenario.frequency,
        tx_power_dbm=scenario.tx_power_dbm,
        noise_asr_dbm=scenario.noise_asr_dbm,
        noise_ue_dbm=scenario.noise_ue_dbm,
    )


def export_channels_csv(path: str | Path, drop: UeDrop, channels: list[ChannelRealization]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ue", "range_m", "azimuth_deg", "alpha_db", "phase_rad"])
        for k, ch in enumerate(channels):
            writer.writerow([
                k,
                repr(float(drop.ranges[k])),
                repr(float(drop.azimuths[k])),
                repr(float(20 * np.log10(abs(ch.path_gain)))),
                repr(float(np.angle(ch.path_gain) % (2 * np.pi))),
            ])
