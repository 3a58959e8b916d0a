import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asrsim.channel import (
    LinkBudget,
    bs_asr_beta,
    dbm_to_watt,
    element_gain,
    export_channels_csv,
    link_budget_for,
    path_gain,
    steering,
    ue_channel,
    ue_channels,
    wavelength,
)
from asrsim.geometry import Scenario, UeDrop, drop_ues


def _drop(azimuths, ranges=None, panels=None):
    az = np.asarray(azimuths, dtype=float)
    ranges = np.full(len(az), 50.0) if ranges is None else np.asarray(ranges, dtype=float)
    panels = np.where(az <= 0, 1, 2) if panels is None else np.asarray(panels)
    return UeDrop(ranges, az, panels, (-60.0, 60.0))


def test_steering_examples():
    assert np.allclose(steering(8, 0.0), np.ones(8))
    assert np.allclose(steering(2, 90.0), [1, -1])
    assert np.allclose(steering(8, 30.0), np.tile([1, 1j, -1, -1j], 2))


@pytest.mark.parametrize("theta", [-90.01, 91.0])
def test_steering_rejects_out_of_range(theta):
    with pytest.raises(ValueError):
        steering(4, theta)


@given(m=st.integers(1, 64), theta=st.floats(-90, 90))
def test_steering_norm_and_modulus(m, theta):
    a = steering(m, theta)
    assert np.allclose(np.abs(a), 1.0, atol=1e-12)
    assert np.vdot(a, a).real == pytest.approx(m)


def test_fspl_at_100m_28ghz():
    alpha = path_gain(100.0, 28e9)
    assert 20 * np.log10(abs(alpha)) == pytest.approx(-101.4, abs=0.05)
    # independent FSPL formula: 20 log10(d) + 20 log10(f) - 147.55
    fspl = 20 * np.log10(100.0) + 20 * np.log10(28e9) - 147.55
    assert -20 * np.log10(abs(alpha)) == pytest.approx(fspl, abs=0.01)


@given(d=st.floats(1.0, 1e4))
def test_path_gain_inverse_square(d):
    assert abs(path_gain(d, 28e9)) ** 2 / abs(path_gain(2 * d, 28e9)) ** 2 == pytest.approx(4.0)


def test_path_gain_phase_and_errors():
    a = path_gain(10.0, 28e9, 0.0)
    assert a.imag == 0.0 and a.real > 0
    assert np.angle(path_gain(10.0, 28e9, 1.0)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        path_gain(0.0, 28e9)


def test_boresight_ue_matched_gain():
    d = _drop([-60.0])
    ch = ue_channel(d, 0, 8, 28e9, np.random.default_rng(0))
    assert abs(ch.h @ steering(8, 0.0)) == pytest.approx(abs(ch.path_gain) * 8)
    assert ch.aod_at_panel == 0.0 and ch.panel == 1


@settings(max_examples=40, deadline=None)
@given(az=st.floats(-120, 120), probe=st.floats(-90, 90), pattern=st.sampled_from(["isotropic", "cosine"]))
def test_channel_gain_bounded(az, probe, pattern):
    d = _drop([az])
    ch = ue_channel(d, 0, 8, 28e9, np.random.default_rng(1), element_pattern=pattern)
    bound = abs(ch.path_gain) * element_gain(ch.aod_at_panel, pattern) * 8
    assert abs(ch.h @ steering(8, probe)) <= bound * (1 + 1e-12)


def test_mirrored_ues_equal_gain():
    d = _drop([-60.0 - 25.0, -60.0 + 25.0], panels=[1, 1])
    rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
    a = ue_channel(d, 0, 8, 28e9, rng_a)
    b = ue_channel(d, 1, 8, 28e9, rng_b)
    assert abs(a.h @ steering(8, -25.0)) == pytest.approx(abs(b.h @ steering(8, 25.0)))


def test_channel_is_deterministic_and_phase_count_independent_of_array():
    d = drop_ues(Scenario(), 12, 4)
    a = ue_channels(d, 8, 28e9, np.random.default_rng(9))
    b = ue_channels(d, 8, 28e9, np.random.default_rng(9))
    c = ue_channels(d, 16, 28e9, np.random.default_rng(9))
    for x, y, z in zip(a, b, c):
        assert np.array_equal(x.h, y.h)
        assert x.path_gain == z.path_gain


def test_nlos_adds_second_path():
    d = _drop([-60.0])
    los = ue_channel(d, 0, 8, 28e9, np.random.default_rng(2))
    both = ue_channel(d, 0, 8, 28e9, np.random.default_rng(2), nlos=True)
    assert not np.allclose(los.h, both.h)
    assert np.linalg.norm(both.h - los.h) == pytest.approx(abs(los.path_gain) * 10 ** (-0.5) * np.sqrt(8))


def test_cosine_pattern_clipped():
    assert element_gain(0.0, "cosine") == 1.0
    assert element_gain(60.0, "cosine") == pytest.approx(0.5)
    assert element_gain(61.0, "cosine") == 0.0
    with pytest.raises(ValueError):
        element_gain(0.0, "dipole")


def test_beta_examples():
    b = bs_asr_beta(64, 8, 200.0, 28e9)
    alpha = path_gain(200.0, 28e9)
    assert abs(b.beta) == pytest.approx(512 * abs(alpha))
    assert b.g_sq * abs(b.beta) ** 2 == pytest.approx(1.0, rel=1e-15)
    assert bs_asr_beta(1, 1, 200.0, 28e9).beta == pytest.approx(alpha)


def test_signal_term_reduces_to_tx_power():
    b = link_budget_for(Scenario())
    assert b.g_sq * abs(b.beta) ** 2 * b.sigma_s_sq == pytest.approx(b.sigma_s_sq, rel=1e-15)
    assert b.sigma_s_sq == pytest.approx(1.0)
    assert b.sigma_n_sq == pytest.approx(dbm_to_watt(-85.0))


def test_link_budget_validation():
    with pytest.raises(ValueError):
        LinkBudget(1.0, 1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        bs_asr_beta(0, 8, 200.0, 28e9)


def test_wavelength():
    assert wavelength(28e9) == pytest.approx(0.010707, rel=1e-4)


def test_channel_csv(tmp_path):
    d = drop_ues(Scenario(), 5, 1)
    chans = ue_channels(d, 8, 28e9, np.random.default_rng(0))
    path = tmp_path / "ch.csv"
    export_channels_csv(path, d, chans)
    rows = path.read_text().splitlines()
    assert rows[0] == "ue,range_m,azimuth_deg,alpha_db,phase_rad"
    assert len(rows) == 6
    first = rows[1].split(",")
    assert float(first[1]) == d.ranges[0]
    assert float(first[3]) == pytest.approx(20 * np.log10(abs(chans[0].path_gain)))
