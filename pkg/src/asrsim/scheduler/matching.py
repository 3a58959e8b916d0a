"""Bitmask bipartite matching between beams and UEs.

A set of beams can be activated only if every beam gets at least one UE of
its own, i.e. the beams have a system of distinct representatives. Those
sets are the independent sets of a transversal matroid, which is what lets
the exact solver extend a coverage-optimal set without losing coverage.
"""
from __future__ import annotations

import numpy as np

from .problem import GLOBAL_N, UNASSIGNED


def iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class BeamMatcher:
    """Incremental beam -> distinct-UE matching (Kuhn augmenting paths)."""

    def __init__(self, masks):
        self.masks = masks
        self.ue_beam: dict[int, int] = {}
        self.beam_ue: dict[int, int] = {}

    def copy(self) -> "BeamMatcher":
        other = BeamMatcher(self.masks)
        other.ue_beam = dict(self.ue_beam)
        other.beam_ue = dict(self.beam_ue)
        return other

    def _augment(self, beam: int, seen: set) -> bool:
        for ue in iter_bits(self.masks[beam]):
            if ue in seen:
                continue
            seen.add(ue)
            owner = self.ue_beam.get(ue)
            if owner is None or self._augment(owner, seen):
                self.ue_beam[ue] = beam
                self.beam_ue[beam] = ue
                return True
        return False

    def try_add(self, beam: int) -> bool:
        """Match ``beam`` to a UE, rerouting earlier beams if needed."""
        if beam in self.beam_ue:
            return True
        return self._augment(beam, set())

    def __len__(self):
        return len(self.beam_ue)


def is_independent(beams, masks) -> bool:
    matcher = BeamMatcher(masks)
    return all(matcher.try_add(b) for b in beams)


def panel_rank(beams, masks, cap: int) -> int:
    """Largest activatable beam count among ``beams``, capped at ``cap``."""
    matcher = BeamMatcher(masks)
    failed = set()
    for b in beams:
        if len(matcher) >= cap:
            break
        m = masks[b]
        if not m or m in failed:
            continue
        if not matcher.try_add(b):
            # a parallel copy of a dependent beam stays dependent as the matching grows
            failed.add(m)
    return min(len(matcher), cap)


def reduce_to_independent(beams, masks) -> list[int]:
    """Subset of ``beams`` with the same union whose beams each keep a UE of their own."""
    owner = {}
    for b in beams:
        for ue in iter_bits(masks[b]):
            owner.setdefault(ue, b)
    used = set(owner.values())
    return [b for b in beams if b in used]


def extend_independent(chosen, candidates, masks, size: int) -> list[int]:
    """Grow an independent set to ``size`` beams, trying candidates in order."""
    matcher = BeamMatcher(masks)
    for b in chosen:
        if not matcher.try_add(b):
            raise ValueError("chosen beams are not independent")
    out = list(chosen)
    failed = set()
    for b in candidates:
        if len(out) >= size:
            break
        m = masks[b]
        if b in matcher.beam_ue or not m or m in failed:
            continue
        if matcher.try_add(b):
            out.append(b)
        else:
            failed.add(m)
    return out


def bmatching(beams, masks, cap: int, n_ues: int, seed_matcher: BeamMatcher | None = None,
              order=None) -> dict[int, int]:
    """Maximum UE -> beam assignment with at most ``cap`` UEs per beam.

    Starts from the distinct-representative matching (so every beam keeps at
    least one UE) and only ever adds UEs through augmenting paths, which
    never empties a beam.
    """
    beams = list(beams)
    matcher = seed_matcher or BeamMatcher(masks)
    for b in beams:
        matcher.try_add(b)
    ue_beam = dict(matcher.ue_beam)
    load = {b: 0 for b in beams}
    for b in ue_beam.values():
        load[b] += 1
    adj = {}
    beamset = set(beams)
    for b in beams:
        for ue in iter_bits(masks[b]):
            adj.setdefault(ue, []).append(b)
    users_of = {b: [] for b in beams}
    for ue, b in ue_beam.items():
        users_of[b].append(ue)

    def augment(ue, seen):
        for b in adj.get(ue, ()):
            if b in seen or b not in beamset:
                continue
            seen.add(b)
            if load[b] < cap:
                return [(ue, b)]
            # beam full: try to move one of its UEs elsewhere
            for other in users_of[b]:
                path = augment(other, seen)
                if path is not None:
                    return path + [(ue, b)]
        return None

    for ue in (order if order is not None else range(n_ues)):
        if ue in ue_beam or ue not in adj:
            continue
        path = augment(ue, set())
        if path is None:
            continue
        for moved, b in path:
            old = ue_beam.get(moved)
            if old is not None:
                users_of[old].remove(moved)
                load[old] -= 1
            ue_beam[moved] = b
            users_of[b].append(moved)
            load[b] += 1
    return ue_beam


def assign_users(beams, masks, rate: np.ndarray, capacity_mode: str, n_sub: int, n_ues: int) -> np.ndarray:
    """Concrete UE assignment for an independent beam set.

    Global cap: the representatives first, then further covered UEs in index
    order up to ``n_sub``, each on its highest-rate active beam. Per-beam cap:
    a maximum b-matching.
    """
    out = np.full(n_ues, UNASSIGNED, dtype=np.int64)
    if not beams:
        return out
    matcher = BeamMatcher(masks)
    for b in beams:
        if not matcher.try_add(b):
            raise ValueError("beam set has no distinct representatives")
    if capacity_mode == GLOBAL_N:
        if len(beams) > n_sub:
            raise ValueError("more active beams than subchannels")
        for ue, b in matcher.ue_beam.items():
            out[ue] = b
        served = len(matcher.ue_beam)
        union = 0
        for b in beams:
            union |= masks[b]
        for ue in iter_bits(union):
            if served >= n_sub:
                break
            if out[ue] != UNASSIGNED:
                continue
            options = [b for b in beams if masks[b] >> ue & 1]
            out[ue] = max(options, key=lambda b: (rate[ue, b], -b))
            served += 1
        return out
    for ue, b in bmatching(beams, masks, n_sub, n_ues, matcher).items():
        out[ue] = b
    return out


def served_value(beams, masks, capacity_mode: str, n_sub: int, n_ues: int) -> int:
    """Number of UEs an independent beam set can serve."""
    if not beams:
        return 0
    if capacity_mode == GLOBAL_N:
        union = 0
        for b in beams:
            union |= masks[b]
        return min(n_sub, union.bit_count())
    return len(bmatching(beams, masks, n_sub, n_ues))
