"""Scheduling problem instances, solutions, the constraint checker and JSON I/O."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..linkmetrics import FeasibilityTable

GLOBAL_N = "global_n"
PER_BEAM_N = "per_beam_n"
CAPACITY_MODES = (GLOBAL_N, PER_BEAM_N)
UNASSIGNED = -1


class InstanceTooLarge(ValueError):
    """The instance exceeds the brute-force oracle's size guard."""


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    feasibility: FeasibilityTable
    n_subchannels: int
    q_slots: int
    lam: float = -1.0
    capacity_mode: str = GLOBAL_N

    def __post_init__(self):
        if self.n_subchannels < 1:
            raise ValueError("n_subchannels must be >= 1")
        if self.q_slots < 0:
            raise ValueError("q_slots must be >= 0")
        if not math.isfinite(self.lam):
            raise ValueError("lambda must be finite")
        if self.capacity_mode not in CAPACITY_MODES:
            raise ValueError(f"capacity_mode must be one of {CAPACITY_MODES}")

    @property
    def n_ues(self) -> int:
        return self.feasibility.n_ues

    @property
    def n_beams(self) -> int:
        return self.feasibility.n_beams

    @property
    def panels(self) -> list[int]:
        return sorted(set(int(p) for p in self.feasibility.panel_of_beam))

    def beam_masks(self) -> list[int]:
        """Feasible-UE set of each beam as a Python-int bitmask (bit k = UE k)."""
        feas = self.feasibility.feasible
        k = feas.shape[0]
        if k == 0:
            return [0] * feas.shape[1]
        if k <= 63:
            weights = (np.uint64(1) << np.arange(k, dtype=np.uint64))
            return [int(v) for v in (feas.T.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)]
        return [sum(1 << int(i) for i in np.flatnonzero(col)) for col in feas.T]


@dataclass(eq=False)
class ScheduleSolution:
    assignment: np.ndarray
    active_beams: tuple[int, ...]
    served_count: int
    objective: float
    per_panel_slots: dict[int, int] = field(default_factory=dict)
    method: str = ""
    optimal: bool = False

    @property
    def key(self) -> tuple[float, int, int]:
        """Ranking key: objective, then more served, then fewer active beams."""
        return (round(self.objective, 9), self.served_count, -len(self.active_beams))

    def achieved_rates(self, table: FeasibilityTable) -> np.ndarray:
        out = np.zeros(len(self.assignment))
        for k, b in enumerate(self.assignment):
            if b != UNASSIGNED:
                out[k] = table.rate[k, b]
        return out

    def cumulative_se(self, table: FeasibilityTable) -> float:
        return float(self.achieved_rates(table).sum())


def make_solution(inst: ProblemInstance, assignment, method: str, optimal: bool = False) -> ScheduleSolution:
    assignment = np.asarray(assignment, dtype=np.int64)
    active = tuple(sorted(set(int(b) for b in assignment if b != UNASSIGNED)))
    served = int(np.count_nonzero(assignment != UNASSIGNED))
    per_panel = {p: 0 for p in inst.panels}
    for b in active:
        per_panel[int(inst.feasibility.panel_of_beam[b])] += 1
    objective = served - inst.lam * len(active)
    return ScheduleSolution(assignment, active, served, float(objective), per_panel, method, optimal)


def empty_solution(inst: ProblemInstance, method: str, optimal: bool = False) -> ScheduleSolution:
    return make_solution(inst, np.full(inst.n_ues, UNASSIGNED), method, optimal)


def check_solution(inst: ProblemInstance, sol: ScheduleSolution, tol: float = 1e-9) -> list[str]:
    """Return the violated constraints of the slot-penalised ILP (empty if feasible).

    Works on the explicit binary variables ``a[k, b]`` and ``delta[b]`` and
    checks every constraint row literally; it shares no code with the solvers.
    """
    table = inst.feasibility
    K, nb = table.feasible.shape
    errors = []
    a = np.zeros((K, nb), dtype=int)
    if len(sol.assignment) != K:
        return [f"assignment has length {len(sol.assignment)}, expected {K}"]
    for k, b in enumerate(sol.assignment):
        if b != UNASSIGNED:
            if not 0 <= b < nb:
                return [f"UE {k} assigned to unknown beam {b}"]
            a[k, b] = 1
    delta = np.zeros(nb, dtype=int)
    for b in sol.active_beams:
        delta[b] = 1
    z = {p: (table.panel_of_beam == p).astype(int) for p in inst.panels}

    if np.any(a.sum(axis=1) > 1):
        errors.append("a UE is assigned to more than one beam")
    if inst.capacity_mode == GLOBAL_N:
        if a.sum() > inst.n_subchannels:
            errors.append(f"{a.sum()} served UEs exceed N={inst.n_subchannels}")
    elif np.any(a.sum(axis=0) > inst.n_subchannels):
        errors.append(f"a beam serves more than N={inst.n_subchannels} UEs")
    for k, b in zip(*np.nonzero(a)):
        # log2(1 + a*gamma) >= a*eta, with the panel association folded into feasibility
        if not table.feasible[k, b]:
            errors.append(f"UE {k} on beam {b} violates the QoS/panel constraint")
    for p, zp in z.items():
        load = a.T @ np.ones(K, dtype=int) * zp
        if np.any(delta * zp > load) or np.any(load > K * delta):
            errors.append(f"panel {p}: beam activation inconsistent with assignments")
        if int(delta @ zp) > inst.q_slots:
            errors.append(f"panel {p}: {int(delta @ zp)} active beams exceed Q={inst.q_slots}")
        if np.count_nonzero((a * zp[None, :]).sum(axis=0)) > inst.q_slots:
            errors.append(f"panel {p}: L0 slot budget exceeded")
    expected = a.sum() - inst.lam * delta.sum()
    if abs(expected - sol.objective) > tol:
        errors.append(f"objective {sol.objective} != {expected}")
    if sol.served_count != a.sum():
        errors.append("served_count does not match the assignment")
    return errors


def instance_to_dict(inst: ProblemInstance) -> dict:
    table = inst.feasibility
    out = {
        "n_subchannels": inst.n_subchannels,
        "q_slots": inst.q_slots,
        "lambda": inst.lam,
        "capacity_mode": inst.capacity_mode,
        "panel_of_ue": table.panel_of_ue.tolist(),
        "panel_of_beam": table.panel_of_beam.tolist(),
        "feasible": table.feasible.astype(int).tolist(),
    }
    if np.any(table.rate):
        out["rate"] = table.rate.tolist()
    return out


def instance_from_dict(data: dict) -> ProblemInstance:
    try:
        feasible = np.asarray(data["feasible"], dtype=bool)
        if feasible.ndim != 2:
            feasible = feasible.reshape(len(data["feasible"]), -1)
        n_ues, n_beams = feasible.shape
        panel_of_beam = data.get("panel_of_beam", [1] * n_beams)
        panel_of_ue = data.get("panel_of_ue")
        if panel_of_ue is None:
            # infer from the first feasible beam; UEs with none default to panel 1
            panel_of_ue = [int(panel_of_beam[np.argmax(row)]) if row.any() else 1 for row in feasible]
        if len(panel_of_beam) != n_beams or len(panel_of_ue) != n_ues:
            raise ValueError("panel vectors do not match the feasibility matrix")
        table = FeasibilityTable.from_boolean(feasible, panel_of_beam, panel_of_ue, data.get("rate"))
        return ProblemInstance(
            table,
            int(data["n_subchannels"]),
            int(data["q_slots"]),
            float(data.get("lambda", -1.0)),
            data.get("capacity_mode", GLOBAL_N),
        )
    except KeyError as exc:
        raise ValueError(f"instance is missing key {exc}") from exc


def load_instance(path: str | Path) -> ProblemInstance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def save_instance(inst: ProblemInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")


def solution_to_dict(sol: ScheduleSolution) -> dict:
    return {
        "method": sol.method,
        "optimal": sol.optimal,
        "objective": sol.objective,
        "served_count": sol.served_count,
        "active_beams": list(sol.active_beams),
        "per_panel_slots": {str(p): n for p, n in sol.per_panel_slots.items()},
        "assignment": [None if b == UNASSIGNED else int(b) for b in sol.assignment],
    }


def random_instance(rng: np.random.Generator, n_ues: int, beams_per_panel: int, q_slots: int,
                    lam: float = -1.0, n_subchannels: int | None = None, density: float | None = None,
                    capacity_mode: str = GLOBAL_N) -> ProblemInstance:
    """Two-panel instance with Bernoulli feasibility and uniform rates, for tests and oracles."""
    density = rng.uniform(0.15, 0.6) if density is None else density
    n_sub = int(rng.integers(1, max(n_ues, 1) + 1)) if n_subchannels is None else n_subchannels
    panel_of_ue = rng.integers(1, 3, size=n_ues)
    panel_of_beam = np.repeat([1, 2], beams_per_panel)
    feasible = rng.random((n_ues, 2 * beams_per_panel)) < density
    rate = rng.uniform(0.5, 10.0, size=feasible.shape)
    table = FeasibilityTable.from_boolean(feasible, panel_of_beam, panel_of_ue, rate)
    return ProblemInstance(table, n_sub, q_slots, lam, capacity_mode)
