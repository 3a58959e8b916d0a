"""Brute-force oracle: enumerate every beam activation, solve each assignment by max flow.

Deliberately independent of the exact solver: no bitmask tricks, no
coverage shortcuts, just a Ford-Fulkerson max flow with the "every active
beam serves at least one UE" lower bound enforced in a first phase.
"""
from __future__ import annotations

import itertools

import numpy as np

from .problem import (
    GLOBAL_N,
    UNASSIGNED,
    InstanceTooLarge,
    ProblemInstance,
    ScheduleSolution,
    empty_solution,
    make_solution,
)

MAX_BEAMS = 16
MAX_UES = 12


class _Flow:
    """Small residual graph with DFS augmenting paths."""

    def __init__(self, n):
        self.cap = [dict() for _ in range(n)]

    def add(self, u, v, c):
        self.cap[u][v] = self.cap[u].get(v, 0) + c
        self.cap[v].setdefault(u, 0)

    def _dfs(self, u, t, seen):
        if u == t:
            return True
        seen.add(u)
        for v in self.cap[u]:
            if self.cap[u][v] > 0 and v not in seen and self._dfs(v, t, seen):
                self.cap[u][v] -= 1
                self.cap[v][u] += 1
                return True
        return False

    def maxflow(self, s, t):
        flow = 0
        while self._dfs(s, t, set()):
            flow += 1
        return flow


def _evaluate(active, feasible, capacity_mode, n_sub):
    """Best assignment for a fixed activation set, or None if it is infeasible."""
    K = feasible.shape[0]
    if capacity_mode == GLOBAL_N and len(active) > n_sub:
        return None
    # nodes: 0 super-source, 1 source, beams, UEs, sink
    nb = len(active)
    sink = 2 + nb + K
    g = _Flow(sink + 1)
    g.add(0, 1, n_sub if capacity_mode == GLOBAL_N else K * nb + 1)
    for i, b in enumerate(active):
        g.add(1, 2 + i, 1)
        for k in range(K):
            if feasible[k, b]:
                g.add(2 + i, 2 + nb + k, 1)
    for k in range(K):
        g.add(2 + nb + k, sink, 1)
    if g.maxflow(0, sink) < nb:
        return None
    # lift the per-beam capacity; augmenting paths never pass back through the source
    extra = (n_sub if capacity_mode != GLOBAL_N else K) - 1
    for i in range(nb):
        g.cap[1][2 + i] += extra
    g.maxflow(0, sink)
    assignment = np.full(K, UNASSIGNED, dtype=np.int64)
    for i, b in enumerate(active):
        for k in range(K):
            node = 2 + nb + k
            if feasible[k, b] and g.cap[node].get(2 + i, 0) > 0:
                assignment[k] = b
    return assignment


def solve_bruteforce(inst: ProblemInstance) -> ScheduleSolution:
    """Global optimum by exhaustive search over activation sets.

    Ties: higher objective, then more served UEs, then fewer active beams,
    then the lexicographically smallest active-beam tuple.
    """
    if inst.n_beams > MAX_BEAMS or inst.n_ues > MAX_UES:
        raise InstanceTooLarge(
            f"brute force is limited to {MAX_BEAMS} beams and {MAX_UES} UEs "
            f"(got {inst.n_beams} beams, {inst.n_ues} UEs)"
        )
    table = inst.feasibility
    feasible = table.feasible
    per_panel = []
    for p in inst.panels:
        beams = [b for b in range(inst.n_beams) if table.panel_of_beam[b] == p]
        options = []
        for r in range(min(inst.q_slots, len(beams)) + 1):
            options.extend(itertools.combinations(beams, r))
        per_panel.append(options)

    best = empty_solution(inst, "bruteforce", optimal=True)
    best_rank = (best.key, ())
    for parts in itertools.product(*per_panel):
        active = tuple(sorted(itertools.chain.from_iterable(parts)))
        if not active:
            continue
        assignment = _evaluate(active, feasible, inst.capacity_mode, inst.n_subchannels)
        if assignment is None:
            continue
        sol = make_solution(inst, assignment, "bruteforce", optimal=True)
        if sol.active_beams != active:
            continue
        rank = (sol.key, tuple(-b for b in active))
        if rank > best_rank:
            best, best_rank = sol, rank
    return best
