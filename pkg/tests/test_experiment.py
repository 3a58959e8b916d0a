import numpy as np
import pytest

from asrsim.channel import link_budget_for
from asrsim.experiment import (
    ASR,
    CSV_FIELDS,
    SR,
    RunConfig,
    config_hash,
    config_to_mapping,
    emit_plotdata,
    gain_ratio,
    load_plan,
    parse_sweep,
    plan_from_mapping,
    read_plotdata,
    run_sweep,
    run_trial,
    run_trials,
    trial_streams,
)
from asrsim.geometry import ConfigError, Scenario, drop_ues
from asrsim.linkmetrics import rate_of

CEILING_RATE = float(rate_of(link_budget_for(Scenario()).snr_ceiling))
SWEEP = (1.0, 6.0, 12.0, 14.0, CEILING_RATE + 0.01)


def _cfg(**kw):
    base = dict(eta_bar_sweep=SWEEP, monte_carlo_trials=6, k_max=10)
    base.update(kw)
    return RunConfig(**base)


@pytest.mark.parametrize("mode", [ASR, SR])
def test_trial_basic_invariants(mode):
    cfg = _cfg(mode=mode)
    for t in range(4):
        r = run_trial(cfg, t)
        assert np.all(r.cumulative_se >= r.served * np.array(SWEEP) - 1e-9)
        assert np.all(r.served <= cfg.k_max)
        assert r.served[-1] == 0 and r.cumulative_se[-1] == 0
        assert np.all(np.diff(r.served) <= 0)  # lambda = -1 keeps the coverage optimum


def test_empty_drop():
    r = run_trial(_cfg(k_max=0), 0)
    assert not r.served.any() and not r.cumulative_se.any()


def test_paired_drops_across_modes_and_lambda():
    a = run_trial(_cfg(mode=ASR), 3)
    b = run_trial(_cfg(mode=SR, lam=2.0, q_slots=1), 3)
    assert a.drop_digest == b.drop_digest
    assert run_trial(_cfg(mode=ASR), 4).drop_digest != a.drop_digest


def test_sr_serves_only_first_sector():
    cfg = _cfg(mode=SR)
    for t in range(5):
        seed, _ = trial_streams(cfg, t)
        drop = drop_ues(cfg.scenario, cfg.k_max, seed)
        r = run_trial(cfg, t)
        assert r.served[0] <= np.count_nonzero(drop.panel_of == 1)


def test_hardware_parity():
    assert sum(_cfg(mode=ASR).serving_panels().values()) == sum(_cfg(mode=SR).serving_panels().values()) == 16
    assert _cfg(mode=SR).serving_panels() == {1: 16}


@pytest.mark.parametrize("kw", [{"mode": "XR"}, {"monte_carlo_trials": 0}, {"eta_bar_sweep": ()},
                                {"solver": "magic"}, {"k_max": -1}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        _cfg(**kw)


def test_lambda_two_uses_fewer_slots():
    lo = run_sweep(_cfg(lam=-1.0, monte_carlo_trials=10))
    hi = run_sweep(_cfg(lam=2.0, monte_carlo_trials=10))
    for a, b in zip(hi, lo):
        assert a.mean_active_slots <= b.mean_active_slots


def test_record_invariants():
    for rec in run_sweep(_cfg(monte_carlo_trials=8)):
        assert 0 <= rec.mean_served <= rec.k_max
        assert rec.mean_cumulative_se >= rec.mean_served * rec.eta_bar - 1e-9
        assert rec.confidence_halfwidth >= 0 and rec.served_halfwidth >= 0


def test_halfwidth_shrinks_with_trials():
    small = run_sweep(_cfg(eta_bar_sweep=(6.0,), monte_carlo_trials=50))[0]
    large = run_sweep(_cfg(eta_bar_sweep=(6.0,), monte_carlo_trials=200))[0]
    assert 1.4 < small.confidence_halfwidth / large.confidence_halfwidth < 2.8


def test_workers_do_not_change_results():
    cfg = _cfg(monte_carlo_trials=6)
    serial = run_trials(cfg, workers=1)
    parallel = run_trials(cfg, workers=2)
    for a, b in zip(serial, parallel):
        assert np.array_equal(a.cumulative_se, b.cumulative_se) and a.drop_digest == b.drop_digest


def test_gain_ratio():
    asr = run_sweep(_cfg(mode=ASR))
    sr = run_sweep(_cfg(mode=SR))
    ratios = gain_ratio(asr, sr, "mean_cumulative_se")
    assert len(ratios) == len(SWEEP)
    assert np.isnan(ratios[-1])
    assert ratios[0] == pytest.approx(asr[0].mean_cumulative_se / sr[0].mean_cumulative_se)


def test_plotdata_round_trip_and_determinism(tmp_path):
    records = run_sweep(_cfg(), tmp_path / "a")
    run_sweep(_cfg(), tmp_path / "b")
    assert read_plotdata(tmp_path / "a" / "plotdata.csv") == records
    for name in ("plotdata.csv", "manifest.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_empty_records_header_only(tmp_path):
    emit_plotdata([], tmp_path)
    assert (tmp_path / "plotdata.csv").read_text() == ",".join(CSV_FIELDS) + "\n"


def test_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit_plotdata([], blocker / "sub")


def test_manifest_reproduces_config(tmp_path):
    cfg = _cfg(lam=2.0, q_slots=1, mode=SR, seed=5)
    records = run_sweep(cfg, tmp_path)
    configs, values = load_plan(tmp_path / "manifest.txt")
    assert len(configs) == 1
    again = configs[0]
    assert (again.lam, again.q_slots, again.mode, again.seed, again.eta_bar_sweep) == \
        (cfg.lam, cfg.q_slots, cfg.mode, cfg.seed, cfg.eta_bar_sweep)
    assert run_sweep(again) == records
    assert config_hash(values) == config_hash(config_to_mapping(cfg))


def test_parse_sweep():
    assert parse_sweep("0.5:2:0.5") == (0.5, 1.0, 1.5, 2.0)
    assert parse_sweep("1, 2.5,4") == (1.0, 2.5, 4.0)
    with pytest.raises(ConfigError):
        parse_sweep("1:2:0")
    with pytest.raises(ConfigError):
        parse_sweep("a, b")


def test_plan_expansion():
    plan = plan_from_mapping({"num_ues": "10, 40", "num_slots": "1, 6", "lambda": "-1, 2", "trials": "3"})
    assert len(plan) == 2 * 2 * 2 * 2
    assert {(c.k_max, c.q_slots, c.lam, c.mode) for c in plan} == {
        (k, q, l, m) for k in (10, 40) for q in (1, 6) for l in (-1.0, 2.0) for m in (ASR, SR)}
    assert all(c.monte_carlo_trials == 3 for c in plan)
    with pytest.raises(ConfigError):
        plan_from_mapping({"colour": "red"})
    with pytest.raises(ConfigError):
        plan_from_mapping({"modes": "ASR, XR"})
    with pytest.raises(ConfigError):
        plan_from_mapping({"nlos": "maybe"})
