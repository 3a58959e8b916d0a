import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asrsim.geometry import (
    ConfigError,
    Scenario,
    drop_ues,
    load_scenario,
    panel_for_azimuth,
    read_keyvalue,
    scenario_from_mapping,
    scenario_to_mapping,
    ue_azimuth_in_panel_frame,
)


def test_default_scenario_sectors():
    s = Scenario()
    assert s.sector(1) == (-120.0, 0.0)
    assert s.sector(2) == (0.0, 120.0)
    assert s.coverage == (-120.0, 120.0)
    assert s.sector_width == 120.0


@pytest.mark.parametrize("kwargs", [
    {"min_ue_radius": 0.0},
    {"min_ue_radius": 100.0},
    {"panel_boresights": (-50.0, 60.0)},
    {"sector_width": 90.0},
    {"num_subchannels": 0},
])
def test_scenario_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        Scenario(**kwargs)


def test_empty_drop():
    d = drop_ues(Scenario(), 0, 1)
    assert len(d) == 0
    assert d.positions == []


def test_negative_count_rejected():
    with pytest.raises(ValueError):
        drop_ues(Scenario(), -1, 0)


def test_boundary_azimuth_goes_to_panel_one():
    assert panel_for_azimuth(0.0) == 1
    assert panel_for_azimuth(-0.001) == 1
    assert panel_for_azimuth(0.001) == 2
    assert panel_for_azimuth(-120.0) == 1
    assert panel_for_azimuth(120.0) == 2


def test_area_uniform_mean_range():
    s = Scenario()
    d = drop_ues(s, 10000, 7)
    R, r = s.service_radius, s.min_ue_radius
    expected = (2 / 3) * (R**3 - r**3) / (R**2 - r**2)
    assert abs(d.ranges.mean() - expected) / expected < 0.01


def test_closed_form_mean_matches_integration():
    R, r = 100.0, 10.0
    x = np.linspace(r, R, 200001)
    pdf = 2 * x / (R**2 - r**2)
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    numeric = trapezoid(x * pdf, x)
    assert numeric == pytest.approx((2 / 3) * (R**3 - r**3) / (R**2 - r**2), rel=1e-6)


def test_panel_split_is_balanced():
    d = drop_ues(Scenario(), 40, 3)
    frac = np.mean(d.panel_of == 1)
    # 3.3 sigma binomial band around one half
    assert abs(frac - 0.5) <= 3.3 * math.sqrt(0.25 / 40)


def _chi2_stat(counts):
    expected = counts.sum() / len(counts)
    return float(((counts - expected) ** 2 / expected).sum())


def test_chi_square_angle_and_area_bins():
    s = Scenario()
    d = drop_ues(s, 100_000, 11)
    bins = 20
    ang_counts, _ = np.histogram(d.azimuths, bins=bins, range=s.coverage)
    # equal-area radial bins: edges uniform in r^2
    edges = np.sqrt(np.linspace(s.min_ue_radius**2, s.service_radius**2, bins + 1))
    rad_counts, _ = np.histogram(d.ranges, bins=edges)
    # chi-square 99th percentile with 19 degrees of freedom
    critical = 36.19
    assert _chi2_stat(ang_counts) < critical
    assert _chi2_stat(rad_counts) < critical


def test_drop_is_deterministic():
    a = drop_ues(Scenario(), 25, 99)
    b = drop_ues(Scenario(), 25, 99)
    assert a.digest() == b.digest()
    assert np.array_equal(a.ranges, b.ranges) and np.array_equal(a.azimuths, b.azimuths)
    assert drop_ues(Scenario(), 25, 100).digest() != a.digest()


@settings(max_examples=50, deadline=None)
@given(k=st.integers(0, 60), seed=st.integers(0, 2**32 - 1))
def test_every_ue_in_exactly_one_sector(k, seed):
    s = Scenario()
    d = drop_ues(s, k, seed)
    for az, p in zip(d.azimuths, d.panel_of):
        lo, hi = s.coverage
        assert lo <= az <= hi
        assert p == panel_for_azimuth(az)
        inside = [q for q in (1, 2) if s.sector(q)[0] <= az < s.sector(q)[1] or (q == 2 and az == hi)]
        # the zero boundary lies in both closed sectors; the tie rule resolves it
        assert p in inside or az == 0.0
    assert np.all((d.ranges >= s.min_ue_radius) & (d.ranges <= s.service_radius))


def test_panel_frame_examples():
    s = Scenario()
    d = drop_ues(s, 3, 0)
    d = type(d)(np.array([50.0, 50.0, 50.0]), np.array([-60.0, 0.0, 60.0]), np.array([1, 1, 2]),
                s.panel_boresights)
    assert ue_azimuth_in_panel_frame(d, 0) == 0.0
    assert ue_azimuth_in_panel_frame(d, 1) == 60.0
    assert ue_azimuth_in_panel_frame(d, 2) == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_panel_frame_round_trip(seed):
    s = Scenario()
    d = drop_ues(s, 30, seed)
    for k in range(len(d)):
        local = ue_azimuth_in_panel_frame(d, k)
        assert -60.0 <= local <= 60.0
        assert local + s.panel_boresights[d.panel_of[k] - 1] == pytest.approx(d.azimuths[k], abs=1e-9)


def test_keyvalue_round_trip(tmp_path):
    s = Scenario(frequency=60e9, service_radius=80.0, max_ue_count=40)
    text = "\n".join(f"{k} = {v}" for k, v in scenario_to_mapping(s).items())
    path = tmp_path / "scenario.cfg"
    path.write_text("# comment line\n" + text + "\n")
    assert load_scenario(path) == s


def test_keyvalue_parsing_and_errors():
    vals = read_keyvalue("radius = 50  # inline\nnum_ues = 10, 40\n")
    assert vals == {"radius": "50", "num_ues": "10, 40"}
    s = scenario_from_mapping(vals)
    assert s.service_radius == 50.0 and s.max_ue_count == 10
    with pytest.raises(ConfigError):
        scenario_from_mapping({"radius": "far"})
    with pytest.raises(ConfigError):
        scenario_from_mapping({"radius": "5"})  # below min_ue_radius
    with pytest.raises(ConfigError):
        read_keyvalue("no separator here\n")
