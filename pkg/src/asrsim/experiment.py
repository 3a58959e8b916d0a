"""Monte Carlo comparison of the tri-sectoral repeater (ASR) against a conventional SR.

Each trial drops UEs, draws LoS channels, builds the SNR table once and then
solves the schedule for every QoS threshold of the sweep. ASR and SR trials
with the same index see identical drops and channel phases.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .channel import link_budget_for, ue_channels
from .codebook import build_dft_codebook, default_codebook
from .geometry import ConfigError, Scenario, drop_ues, read_keyvalue, scenario_from_mapping, scenario_to_mapping
from .linkmetrics import build_feasibility
from .scheduler import GLOBAL_N, SOLVERS, ProblemInstance

ASR, SR = "ASR", "SR"
DEFAULT_SWEEP = tuple(float(x) for x in np.arange(1, 37) * 0.5)
CSV_FIELDS = [
    "mode", "eta_bar", "lambda", "q_slots", "k_max", "trials",
    "mean_cumulative_se", "mean_served", "mean_active_slots",
    "confidence_halfwidth", "served_halfwidth",
]
Z_95 = 1.959963984540054


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario = field(default_factory=Scenario)
    eta_bar_sweep: tuple[float, ...] = DEFAULT_SWEEP
    lam: float = -1.0
    k_max: int = 10
    q_slots: int = 6
    n_subchannels: int = 8
    mode: str = ASR
    monte_carlo_trials: int = 500
    seed: int = 0
    capacity_mode: str = GLOBAL_N
    levels: int = 8
    grid_points: int = 120
    element_pattern: str = "isotropic"
    nlos: bool = False
    solver: str = "exact"

    def __post_init__(self):
        if self.mode not in (ASR, SR):
            raise ValueError(f"mode must be ASR or SR, got {self.mode!r}")
        if self.monte_carlo_trials < 1:
            raise ValueError("monte_carlo_trials must be >= 1")
        if not self.eta_bar_sweep:
            raise ValueError("eta_bar_sweep is empty")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        # same number of UE-facing antennas in both modes
        assert sum(self.serving_panels().values()) == 2 * self.scenario.asr_antennas

    def serving_panels(self) -> dict[int, int]:
        """Antenna count of each UE-facing panel."""
        m = self.scenario.asr_antennas
        return {1: m, 2: m} if self.mode == ASR else {1: 2 * m}


@dataclass(frozen=True)
class MetricsRecord:
    mode: str
    eta_bar: float
    lam: float
    q_slots: int
    k_max: int
    trials: int
    mean_cumulative_se: float
    mean_served: float
    mean_active_slots: float
    confidence_halfwidth: float
    served_halfwidth: float = 0.0

    def as_row(self) -> dict:
        row = asdict(self)
        row["lambda"] = row.pop("lam")
        return row


@dataclass
class TrialResult:
    served: np.ndarray
    cumulative_se: np.ndarray
    active: np.ndarray
    drop_digest: str


def trial_streams(config: RunConfig, trial_seed: int):
    """Drop seed and channel generator of one trial (independent of mode, lambda, Q)."""
    seq = np.random.SeedSequence([config.seed, config.k_max, trial_seed])
    drop_seq, channel_seq = seq.spawn(2)
    return int(drop_seq.generate_state(1)[0]), np.random.default_rng(channel_seq)


@lru_cache(maxsize=8)
def _codebooks(mode: str, grid_points: int, levels: int, m_r: int):
    if mode == ASR:
        base = default_codebook(grid_points, levels, m_r)
        return {1: base.for_panel(1), 2: base.for_panel(2)}
    return {1: build_dft_codebook(2 * m_r, panel=1)}


def run_trial(config: RunConfig, trial_seed: int) -> TrialResult:
    scen = config.scenario
    drop_seed, rng = trial_streams(config, trial_seed)
    drop = drop_ues(scen, config.k_max, drop_seed)
    antennas = config.serving_panels()[1]
    channels = ue_channels(drop, antennas, scen.frequency, rng,
                           element_pattern=config.element_pattern, nlos=config.nlos)
    codebooks = _codebooks(config.mode, config.grid_points, config.levels, scen.asr_antennas)
    budget = link_budget_for(scen)
    table = build_feasibility(drop, channels, codebooks, budget, config.eta_bar_sweep[0])
    solver = SOLVERS[config.solver]
    n = len(config.eta_bar_sweep)
    served, se, active = np.zeros(n), np.zeros(n), np.zeros(n)
    for i, eta in enumerate(config.eta_bar_sweep):
        t = table.with_threshold(eta)
        sol = solver(ProblemInstance(t, config.n_subchannels, config.q_slots, config.lam, config.capacity_mode))
        served[i] = sol.served_count
        se[i] = sol.cumulative_se(t)
        active[i] = len(sol.active_beams)
    return TrialResult(served, se, active, drop.digest())


def _run_trials(config: RunConfig, trials) -> list[TrialResult]:
    return [run_trial(config, t) for t in trials]


def run_trials(config: RunConfig, workers: int = 1) -> list[TrialResult]:
    """All trials in index order; with ``workers > 1`` they run in processes."""
    indices = list(range(config.monte_carlo_trials))
    if workers <= 1:
        return _run_trials(config, indices)
    chunks = [indices[i::workers] for i in range(workers)]
    results: dict[int, TrialResult] = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk, out in zip(chunks, pool.map(_run_trials, [config] * workers, chunks)):
            results.update(zip(chunk, out))
    return [results[i] for i in indices]


def _halfwidth(samples: np.ndarray) -> float:
    if len(samples) < 2:
        return 0.0
    return float(Z_95 * samples.std(ddof=1) / math.sqrt(len(samples)))


def summarize(config: RunConfig, results: list[TrialResult]) -> list[MetricsRecord]:
    served = np.array([r.served for r in results])
    se = np.array([r.cumulative_se for r in results])
    active = np.array([r.active for r in results])
    records = []
    for i, eta in enumerate(config.eta_bar_sweep):
        records.append(MetricsRecord(
            mode=config.mode,
            eta_bar=float(eta),
            lam=float(config.lam),
            q_slots=config.q_slots,
            k_max=config.k_max,
            trials=len(results),
            mean_cumulative_se=float(se[:, i].mean()),
            mean_served=float(served[:, i].mean()),
            mean_active_slots=float(active[:, i].mean()),
            confidence_halfwidth=_halfwidth(se[:, i]),
            served_halfwidth=_halfwidth(served[:, i]),
        ))
    return records


def run_sweep(config: RunConfig, out_dir: str | Path | None = None, workers: int = 1) -> list[MetricsRecord]:
    """Trial-averaged metrics per QoS threshold; optionally written to ``out_dir``."""
    records = summarize(config, run_trials(config, workers))
    if out_dir is not None:
        emit_plotdata(records, out_dir, config_to_mapping(config))
    return records


def emit_plotdata(records, out_dir: str | Path, manifest: dict[str, str] | None = None) -> dict[str, Path]:
    """Write ``plotdata.csv`` and, if given, ``manifest.txt`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "plotdata.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
            writer.writeheader()
            for rec in records:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.as_row().items()})
        paths = {"csv": csv_path}
        if manifest is not None:
            paths["manifest"] = write_manifest(out / "manifest.txt", manifest)
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return paths


def read_plotdata(path: str | Path) -> list[MetricsRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(MetricsRecord(
                mode=row["mode"], eta_bar=float(row["eta_bar"]), lam=float(row["lambda"]),
                q_slots=int(row["q_slots"]), k_max=int(row["k_max"]), trials=int(row["trials"]),
                mean_cumulative_se=float(row["mean_cumulative_se"]), mean_served=float(row["mean_served"]),
                mean_active_slots=float(row["mean_active_slots"]),
                confidence_halfwidth=float(row["confidence_halfwidth"]),
                served_halfwidth=float(row["served_halfwidth"]),
            ))
    return out


# ---------------------------------------------------------------- config files

RUN_KEYS = {
    "eta_bar_sweep", "lambda", "modes", "trials", "capacity_mode", "levels", "grid_points",
    "element_pattern", "nlos", "solver",
}
MANIFEST_ONLY = {"config_hash", "code_version"}


def parse_sweep(text: str) -> tuple[float, ...]:
    """``"0.5, 1, 2"`` or ``"start:stop:step"`` (stop inclusive)."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + i * step, 12) for i in range(n))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad sweep specification {text!r}: {exc}") from exc


def _list(text: str, conv):
    try:
        return [conv(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}") from exc


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


def plan_from_mapping(values: dict[str, str]) -> list[RunConfig]:
    """Expand a key/value mapping into one RunConfig per (mode, K, Q, lambda)."""
    known = set(RUN_KEYS) | MANIFEST_ONLY | {
        "frequency", "tx_power_dbm", "bs_antennas", "asr_antennas", "radius", "bs_asr_distance",
        "noise_asr_dbm", "noise_ue_dbm", "num_ues", "num_subchannels", "num_slots",
        "min_ue_radius", "seed",
    }
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    scenario = scenario_from_mapping(values)
    base = {}
    if "eta_bar_sweep" in values:
        base["eta_bar_sweep"] = parse_sweep(values["eta_bar_sweep"])
    if "trials" in values:
        base["monte_carlo_trials"] = _list(values["trials"], int)[0]
    for key in ("capacity_mode", "element_pattern", "solver"):
        if key in values:
            base[key] = values[key].strip()
    for key in ("levels", "grid_points"):
        if key in values:
            base[key] = _list(values[key], int)[0]
    if "nlos" in values:
        base["nlos"] = _bool(values["nlos"])
    modes = _list(values.get("modes", "ASR,SR"), str)
    ks = _list(values.get("num_ues", str(scenario.max_ue_count)), lambda x: int(float(x)))
    qs = _list(values.get("num_slots", str(scenario.num_slots)), lambda x: int(float(x)))
    lams = _list(values.get("lambda", "-1"), float)
    configs = []
    try:
        for k in ks:
            for q in qs:
                for lam in lams:
                    for mode in modes:
                        configs.append(RunConfig(
                            scenario=scenario, k_max=k, q_slots=q, lam=lam, mode=mode.upper(),
                            n_subchannels=scenario.num_subchannels, seed=scenario.rng_seed, **base,
                        ))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return configs


def load_plan(path: str | Path, overrides: dict[str, str] | None = None) -> tuple[list[RunConfig], dict[str, str]]:
    values = read_keyvalue(Path(path).read_text()) if path else {}
    values.update(overrides or {})
    return plan_from_mapping(values), values


def config_to_mapping(config: RunConfig) -> dict[str, str]:
    out = scenario_to_mapping(config.scenario)
    out.update({
        "num_ues": str(config.k_max),
        "num_slots": str(config.q_slots),
        "num_subchannels": str(config.n_subchannels),
        "seed": str(config.seed),
        "eta_bar_sweep": ", ".join(repr(x) for x in config.eta_bar_sweep),
        "lambda": repr(config.lam),
        "modes": config.mode,
        "trials": str(config.monte_carlo_trials),
        "capacity_mode": config.capacity_mode,
        "levels": str(config.levels),
        "grid_points": str(config.grid_points),
        "element_pattern": config.element_pattern,
        "nlos": str(config.nlos).lower(),
        "solver": config.solver,
    })
    return out


def config_hash(values: dict[str, str]) -> str:
    clean = {k: v for k, v in values.items() if k not in MANIFEST_ONLY}
    return hashlib.sha256(json.dumps(clean, sort_keys=True).encode()).hexdigest()[:16]


def write_manifest(path: Path, values: dict[str, str]) -> Path:
    """Key/value manifest that can be fed back to ``asrsim simulate --config``."""
    clean = {k: v for k, v in values.items() if k not in MANIFEST_ONLY}
    lines = ["# asrsim run manifest"]
    lines += [f"{k} = {clean[k]}" for k in sorted(clean)]
    lines += [f"config_hash = {config_hash(clean)}", f"code_version = {__version__}"]
    path.write_text("\n".join(lines) + "\n")
    return path


def run_plan(configs: list[RunConfig], out_dir=None, manifest: dict[str, str] | None = None,
             workers: int = 1, progress=None) -> list[MetricsRecord]:
    records = []
    for cfg in configs:
        if progress:
            progress(cfg)
        records.extend(summarize(cfg, run_trials(cfg, workers)))
    if out_dir is not None:
        emit_plotdata(records, out_dir, manifest)
    return records


def gain_ratio(asr: list[MetricsRecord], sr: list[MetricsRecord], attr: str = "mean_served") -> list[float]:
    """Pointwise ASR-to-SR ratio of a metric over matching thresholds (nan where SR is zero)."""
    sr_by_eta = {r.eta_bar: getattr(r, attr) for r in sr}
    out = []
    for r in asr:
        den = sr_by_eta.get(r.eta_bar, float("nan"))
        out.append(getattr(r, attr) / den if den else float("nan"))
    return out


def with_mode(config: RunConfig, mode: str, **changes) -> RunConfig:
    return replace(config, mode=mode, **changes)
