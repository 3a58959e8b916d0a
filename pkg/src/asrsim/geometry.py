"""Repeater geometry: panel sectors, UE drops and the key/value scenario file.

Global frame: the repeater sits at the origin, azimuths in degrees. Panel 1
looks at -60 deg and panel 2 at +60 deg, so together they cover
[-120, +120] deg. The BS is behind the repeater on the boresight of the
BS-facing panel and only enters through the fixed BS-repeater distance.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SECTOR_WIDTH_DEG = 120.0
HALF_SECTOR_DEG = SECTOR_WIDTH_DEG / 2


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


@dataclass(frozen=True)
class Scenario:
    """Scenario geometry together with the link-budget parameters."""

    frequency: float = 28e9
    tx_power_dbm: float = 30.0
    bs_antennas: int = 64
    asr_antennas: int = 8
    service_radius: float = 100.0
    bs_asr_distance: float = 200.0
    noise_asr_dbm: float = -85.0
    noise_ue_dbm: float = -90.0
    max_ue_count: int = 10
    num_subchannels: int = 8
    num_slots: int = 6
    min_ue_radius: float = 10.0
    panel_boresights: tuple[float, float] = (-60.0, 60.0)
    sector_width: float = SECTOR_WIDTH_DEG
    rng_seed: int = 0

    def __post_init__(self):
        if self.sector_width != SECTOR_WIDTH_DEG:
            raise ValueError(f"sector_width must be {SECTOR_WIDTH_DEG} deg, got {self.sector_width}")
        if len(self.panel_boresights) != 2:
            raise ValueError("exactly two serving panels are supported")
        p1, p2 = self.panel_boresights
        if abs(abs(p2 - p1) - SECTOR_WIDTH_DEG) > 1e-9:
            raise ValueError("serving panel boresights must be 120 deg apart")
        if not 0 < self.min_ue_radius < self.service_radius:
            raise ValueError("need 0 < min_ue_radius < service_radius")
        if self.frequency <= 0 or self.bs_asr_distance <= 0:
            raise ValueError("frequency and bs_asr_distance must be positive")
        if self.bs_antennas < 1 or self.asr_antennas < 1:
            raise ValueError("antenna counts must be >= 1")
        if self.max_ue_count < 0 or self.num_subchannels < 1 or self.num_slots < 0:
            raise ValueError("need num_ues >= 0, num_subchannels >= 1, num_slots >= 0")

    def sector(self, panel: int) -> tuple[float, float]:
        """Closed azimuth interval (deg) served by ``panel`` (1 or 2)."""
        bore = self.panel_boresights[panel - 1]
        return bore - HALF_SECTOR_DEG, bore + HALF_SECTOR_DEG

    @property
    def coverage(self) -> tuple[float, float]:
        lo = min(self.panel_boresights) - HALF_SECTOR_DEG
        hi = max(self.panel_boresights) + HALF_SECTOR_DEG
        return lo, hi


@dataclass(frozen=True)
class UeDrop:
    ranges: np.ndarray
    azimuths: np.ndarray
    panel_of: np.ndarray
    panel_boresights: tuple[float, float] = (-60.0, 60.0)

    def __len__(self):
        return len(self.ranges)

    @property
    def positions(self) -> list[tuple[float, float]]:
        return list(zip(self.ranges.tolist(), self.azimuths.tolist()))

    def digest(self) -> str:
        """Hash of the drop, used to audit paired sampling across modes."""
        h = hashlib.sha256()
        for arr in (self.ranges, self.azimuths, self.panel_of):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def panel_for_azimuth(azimuth: float, boresights=(-60.0, 60.0)) -> int:
    """Serving panel of a global azimuth; the shared boundary goes to panel 1."""
    for p, bore in enumerate(boresights, start=1):
        if abs(azimuth - bore) <= HALF_SECTOR_DEG + 1e-12:
            return p
    raise ValueError(f"azimuth {azimuth} deg is outside both panel sectors")


def drop_ues(scenario: Scenario, k: int, seed: int) -> UeDrop:
    """Drop ``k`` UEs uniformly in area over the 240 deg annular sector.

    The radius is drawn as ``sqrt(U(r_min^2, R^2))`` so that the density is
    uniform per unit area rather than per unit radius.
    """
    if k < 0:
        raise ValueError(f"number of UEs must be >= 0, got {k}")
    rng = np.random.default_rng(seed)
    lo, hi = scenario.coverage
    azimuths = rng.uniform(lo, hi, size=k)
    r2 = rng.uniform(scenario.min_ue_radius**2, scenario.service_radius**2, size=k)
    ranges = np.sqrt(r2)
    panel_of = np.array(
        [panel_for_azimuth(a, scenario.panel_boresights) for a in azimuths], dtype=np.int64
    )
    return UeDrop(ranges, azimuths, panel_of, tuple(scenario.panel_boresights))


def ue_azimuth_in_panel_frame(drop: UeDrop, k: int) -> float:
    """Azimuth of UE ``k`` relative to its serving panel boresight, in [-60, 60]."""
    bore = drop.panel_boresights[int(drop.panel_of[k]) - 1]
    local = float(drop.azimuths[k] - bore)
    return min(max(local, -HALF_SECTOR_DEG), HALF_SECTOR_DEG)


# config key -> (Scenario field, converter)
SCENARIO_KEYS = {
    "frequency": ("frequency", float),
    "tx_power_dbm": ("tx_power_dbm", float),
    "bs_antennas": ("bs_antennas", int),
    "asr_antennas": ("asr_antennas", int),
    "radius": ("service_radius", float),
    "bs_asr_distance": ("bs_asr_distance", float),
    "noise_asr_dbm": ("noise_asr_dbm", float),
    "noise_ue_dbm": ("noise_ue_dbm", float),
    "num_ues": ("max_ue_count", int),
    "num_subchannels": ("num_subchannels", int),
    "num_slots": ("num_slots", int),
    "min_ue_radius": ("min_ue_radius", float),
    "seed": ("rng_seed", int),
}


def read_keyvalue(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines (``#`` comments allowed) into a dict."""
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",)
    )
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return dict(parser["config"])


def scenario_from_mapping(values: dict[str, str]) -> Scenario:
    kwargs = {}
    for key, raw in values.items():
        if key not in SCENARIO_KEYS:
            continue
        name, conv = SCENARIO_KEYS[key]
        try:
            # multi-valued sweep keys (e.g. "num_ues = 10, 40") keep the first entry here
            kwargs[name] = conv(float(raw.split(",")[0]) if conv is int else raw.split(",")[0])
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    try:
        return Scenario(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path: str | Path) -> Scenario:
    """Load a :class:`Scenario` from a plain-text key/value file."""
    text = Path(path).read_text()
    return scenario_from_mapping(read_keyvalue(text))


def scenario_to_mapping(scenario: Scenario) -> dict[str, str]:
    out = {}
    for key, (name, _) in SCENARIO_KEYS.items():
        out[key] = repr(getattr(scenario, name))
    return out
