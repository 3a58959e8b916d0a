"""Greedy max-coverage heuristic for the scheduling ILP."""
from __future__ import annotations

from .matching import BeamMatcher, assign_users, served_value
from .problem import GLOBAL_N, ProblemInstance, ScheduleSolution, empty_solution, make_solution


def solve_greedy(inst: ProblemInstance) -> ScheduleSolution:
    """Repeatedly activate the beam with the best marginal ``served - lambda``.

    Stops when no activatable beam has a positive marginal gain or every
    panel has used its Q slots. For lambda = 0 this is the classic
    (1 - 1/e) max-coverage greedy; no optimality is claimed.
    """
    if inst.q_slots == 0 or inst.n_ues == 0 or inst.n_beams == 0:
        return empty_solution(inst, "greedy")
    masks = inst.beam_masks()
    pob = inst.feasibility.panel_of_beam
    n_sub, K = inst.n_subchannels, inst.n_ues
    used = {p: 0 for p in inst.panels}
    active: list[int] = []
    matcher = BeamMatcher(masks)
    served = 0
    while True:
        if inst.capacity_mode == GLOBAL_N and len(active) >= n_sub:
            break
        best = None
        for b in range(inst.n_beams):
            if b in matcher.beam_ue or not masks[b] or used[int(pob[b])] >= inst.q_slots:
                continue
            trial = matcher.copy()
            if not trial.try_add(b):
                continue
            gain = served_value(active + [b], masks, inst.capacity_mode, n_sub, K) - served
            score = gain - inst.lam
            if best is None or score > best[0]:
                best = (score, b, trial, gain)
        if best is None or best[0] <= 0:
            break
        _, b, matcher, gain = best
        active.append(b)
        used[int(pob[b])] += 1
        served += gain
    assignment = assign_users(sorted(active), masks, inst.feasibility.rate, inst.capacity_mode, n_sub, K)
    return make_solution(inst, assignment, "greedy")
