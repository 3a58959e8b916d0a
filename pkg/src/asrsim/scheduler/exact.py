"""Exact solver for the slot-penalised beam/UE scheduling ILP.

Beams only reach UEs of their own panel, so the problem splits per panel
and the panels are coupled only through the global subchannel cap.

Global cap (default): a beam set is usable iff its beams have distinct
representatives, and it then serves ``min(N, |union|)`` UEs. Usable sets form
a matroid, so for every size ``s`` up to the panel rank there is a usable set
of exactly ``s`` beams reaching the best coverage of any ``s`` beams. Each
panel therefore reduces to a coverage profile ``C_p(s)`` (branch and bound
over non-dominated beams, see :mod:`.kernels`) plus its rank, and the panels
are combined by enumerating slot counts ``(s_1, s_2)``.

Per-beam cap: each panel is solved by branch and bound over usable beam
sets with exact b-matching at every node.
"""
from __future__ import annotations

import itertools
import logging
import math

import numpy as np

from . import kernels
from .matching import (
    BeamMatcher,
    assign_users,
    bmatching,
    extend_independent,
    panel_rank,
    reduce_to_independent,
)
from .problem import GLOBAL_N, ProblemInstance, ScheduleSolution, empty_solution, make_solution

log = logging.getLogger(__name__)
TOL = 1e-9


def _key(obj: float, served: int, active: int) -> tuple:
    return (round(obj, 9), served, -active)


def non_dominated(beams, masks) -> list[int]:
    """Beams with distinct non-empty masks not strictly contained in another's.

    Identical masks keep the lowest index. Ordered by mask size (descending)
    then index, which is the branching order of the coverage search.
    """
    seen = {}
    for b in beams:
        m = masks[b]
        if m and m not in seen:
            seen[m] = b
    uniq = list(seen.items())
    if not uniq:
        return []
    if all(m < (1 << 63) for m, _ in uniq):
        arr = np.array([m for m, _ in uniq], dtype=np.uint64)
        # sub[i, j]: mask i is a subset of mask j
        sub = (arr[:, None] & ~arr[None, :]) == 0
        np.fill_diagonal(sub, False)
        dominated = sub.any(axis=1)
    else:
        dominated = [any(m != o and m & ~o == 0 for o, _ in uniq) for m, _ in uniq]
    keep = [(m, b) for (m, b), d in zip(uniq, dominated) if not d]
    keep.sort(key=lambda mb: (-mb[0].bit_count(), mb[1]))
    return [b for _, b in keep]


def solve_exact(inst: ProblemInstance, backend: str | None = None) -> ScheduleSolution:
    """Provably optimal schedule (objective, then served, then fewer active beams)."""
    if inst.q_slots == 0 or inst.n_ues == 0 or inst.n_beams == 0:
        return empty_solution(inst, "exact", optimal=True)
    masks = inst.beam_masks()
    pob = inst.feasibility.panel_of_beam
    panel_beams = {p: [b for b in range(inst.n_beams) if pob[b] == p] for p in inst.panels}
    if inst.capacity_mode == GLOBAL_N:
        beams = _solve_global(inst, masks, panel_beams, backend)
    else:
        beams = _solve_per_beam(inst, masks, panel_beams)
    assignment = assign_users(sorted(beams), masks, inst.feasibility.rate, inst.capacity_mode,
                              inst.n_subchannels, inst.n_ues)
    return make_solution(inst, assignment, "exact", optimal=True)


def _solve_global(inst, masks, panel_beams, backend):
    n_sub, lam = inst.n_subchannels, inst.lam
    cap = min(inst.q_slots, n_sub)
    profiles = {}
    for p, beams in panel_beams.items():
        rank = panel_rank(beams, masks, cap)
        cand = non_dominated(beams, masks)
        best, choice = kernels.coverage_profile([masks[b] for b in cand], rank, backend=backend)
        profiles[p] = (beams, cand, rank, best, choice)

    panels = list(profiles)
    best_key, best_counts = None, None
    for counts in itertools.product(*(range(profiles[p][2] + 1) for p in panels)):
        active = sum(counts)
        if active > n_sub:
            continue
        served = min(n_sub, sum(profiles[p][3][s] for p, s in zip(panels, counts)))
        key = _key(served - lam * active, served, active)
        if best_key is None or key > best_key:
            best_key, best_counts = key, counts

    chosen = []
    for p, s in zip(panels, best_counts):
        beams, cand, _, _, choice = profiles[p]
        family = [cand[i] for i in choice[s]]
        base = reduce_to_independent(family, masks)
        full = extend_independent(base, beams, masks, s)
        if len(full) != s:
            raise AssertionError(f"panel {p}: could not extend to {s} beams")
        chosen.extend(full)
    return chosen


def _per_beam_candidates(beams, masks, n_sub, q_slots):
    """Candidate beams for the per-beam-cap search.

    A beam whose mask fits in one beam's capacity makes identical copies and
    strict subsets redundant; larger masks keep enough copies to absorb them.
    """
    copies = {}
    order = []
    for b in beams:
        m = masks[b]
        if not m:
            continue
        limit = 1 if m.bit_count() <= n_sub else min(q_slots, math.ceil(m.bit_count() / n_sub))
        if copies.get(m, 0) < limit:
            copies[m] = copies.get(m, 0) + 1
            order.append(b)
    small = [masks[b] for b in order if masks[b].bit_count() <= n_sub]
    keep = [b for b in order
            if not any(masks[b] != o and masks[b] & ~o == 0 for o in small)]
    keep.sort(key=lambda b: (-min(n_sub, masks[b].bit_count()), b))
    return keep


def _solve_per_beam(inst, masks, panel_beams):
    n_sub, q, lam, K = inst.n_subchannels, inst.q_slots, inst.lam, inst.n_ues
    chosen = []
    for beams in panel_beams.values():
        if lam < 0:
            # best served with the fewest beams, then pad to the panel rank
            base = _panel_search(beams, masks, n_sub, q, 0.0, K)
            chosen.extend(extend_independent(base, beams, masks, panel_rank(beams, masks, q)))
        else:
            chosen.extend(_panel_search(beams, masks, n_sub, q, lam, K))
    return chosen


def _panel_search(beams, masks, n_sub, q, lam, n_ues):
    cand = _per_beam_candidates(beams, masks, n_sub, q)
    caps = [min(n_sub, masks[b].bit_count()) for b in cand]
    union_all = 0
    for b in cand:
        union_all |= masks[b]
    limit = union_all.bit_count()
    best = {"key": _key(0.0, 0, 0), "set": []}
    chosen: list[int] = []

    def visit(start, matcher, served):
        depth = len(chosen)
        key = _key(served - lam * depth, served, depth)
        if key > best["key"]:
            best["key"], best["set"] = key, list(chosen)
        if depth == q or start == len(cand):
            return
        gains = sorted(caps[start:], reverse=True)[: q - depth]
        ub, acc = -math.inf, served
        for t, g in enumerate(gains, start=1):
            acc = min(limit, acc + g)
            ub = max(ub, acc - lam * (depth + t))
        if ub < best["key"][0] - TOL:
            return
        for i in range(start, len(cand)):
            b = cand[i]
            child = matcher.copy()
            if not child.try_add(b):
                continue
            chosen.append(b)
            value = len(bmatching(chosen, masks, n_sub, n_ues, child.copy()))
            visit(i + 1, child, value)
            chosen.pop()

    visit(0, BeamMatcher(masks), 0)
    return best["set"]
