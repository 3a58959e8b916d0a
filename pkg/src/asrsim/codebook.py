"""Multi-level phase-only beam codebook and the DFT baseline codebook.

Level ``l`` beams cover a union of ``l`` of the ``L`` equal angular subsets of
the panel's [-60, 60] deg field of view, giving ``2**L - 1`` beams overall.
Wider beams trade peak gain for coverage.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from pathlib import Path

import numpy as np

from .channel import steering_matrix

FOV_DEG = (-60.0, 60.0)
REFINE_ITERS = 100


@dataclass(frozen=True)
class AngleGrid:
    """Uniform angle grid (cell centres) split into ``L`` contiguous subsets."""

    angles: np.ndarray
    resolution: float
    subsets: tuple[np.ndarray, ...]
    edges: np.ndarray

    @property
    def levels(self) -> int:
        return len(self.subsets)

    def subset_span(self, v: int) -> tuple[float, float]:
        """Half-open angular span ``[lo, hi)`` of subset ``v`` in degrees."""
        return float(self.edges[v]), float(self.edges[v + 1])

    def subset_of(self, theta: float) -> int:
        v = int(np.searchsorted(self.edges, theta, side="right")) - 1
        return min(max(v, 0), self.levels - 1)

    def mask(self, selection) -> np.ndarray:
        out = np.zeros(len(self.angles), dtype=bool)
        for v in selection:
            out[self.subsets[v]] = True
        return out


@dataclass(frozen=True, eq=False)
class BeamEntry:
    weights: np.ndarray
    support_mask: np.ndarray
    level: int
    beam_id: int
    panel: int = 1
    selection: tuple[int, ...] = ()
    pointing: float | None = None


@dataclass(frozen=True, eq=False)
class Codebook:
    beams: tuple[BeamEntry, ...]
    levels: int

    @property
    def total(self) -> int:
        return len(self.beams)

    def __len__(self):
        return len(self.beams)

    def __iter__(self):
        return iter(self.beams)

    def per_level_counts(self) -> list[int]:
        counts = [0] * self.levels
        for beam in self.beams:
            counts[beam.level - 1] += 1
        return counts

    def weight_matrix(self) -> np.ndarray:
        """Beam weights stacked row-wise, shape ``(B, M)``."""
        return np.array([b.weights for b in self.beams])

    def for_panel(self, panel: int) -> "Codebook":
        beams = tuple(
            BeamEntry(b.weights, b.support_mask, b.level, b.beam_id, panel, b.selection, b.pointing)
            for b in self.beams
        )
        return Codebook(beams, self.levels)


def build_grid(d_points: int = 120, levels: int = 8) -> AngleGrid:
    """Grid of ``d_points`` equi-spaced angles over the field of view.

    Points sit at cell centres, so with D=120 the resolution is 1 deg and each
    of the L subsets spans an equal half-open slice of the 120 deg sector.
    """
    if levels < 1 or d_points < 1 or d_points % levels:
        raise ValueError(f"d_points={d_points} must be a positive multiple of levels={levels}")
    lo, hi = FOV_DEG
    step = (hi - lo) / d_points
    angles = lo + (np.arange(d_points) + 0.5) * step
    size = d_points // levels
    subsets = tuple(np.arange(v * size, (v + 1) * size) for v in range(levels))
    edges = np.linspace(lo, hi, levels + 1)
    return AngleGrid(angles, step, subsets, edges)


def _unit_modulus(f: np.ndarray, fill: np.ndarray | None = None) -> np.ndarray:
    """Row-wise phase projection; entries with (numerically) zero magnitude take ``fill``."""
    mag = np.abs(f)
    tiny = mag <= 1e-9 * np.maximum(mag.max(axis=-1, keepdims=True), 1e-300)
    out = np.ones_like(f) if fill is None else np.array(np.broadcast_to(fill, f.shape), dtype=complex)
    out[~tiny] = f[~tiny] / mag[~tiny]
    return out


def _degenerate_rows(f: np.ndarray) -> np.ndarray:
    mag = np.abs(f)
    return np.any(mag <= 1e-9 * np.maximum(mag.max(axis=-1, keepdims=True), 1e-300), axis=-1)


def _chirp(m: int, rate: float) -> np.ndarray:
    return np.exp(1j * np.pi * rate * np.arange(m) ** 2)


@lru_cache(maxsize=16)
def _dictionary(d_points: int, levels: int, m_r: int):
    grid = build_grid(d_points, levels)
    # rows a(theta_d)^H, so that (A f)_d is the array response toward theta_d
    a_h = steering_matrix(m_r, grid.angles).conj()
    return a_h, np.linalg.pinv(a_h)


def constant_modulus_fit(a_h: np.ndarray, a_pinv: np.ndarray, targets: np.ndarray,
                         iters: int = REFINE_ITERS, fill: np.ndarray | None = None) -> np.ndarray:
    """Unit-modulus weights whose response magnitude fits each target row.

    Starts from the least-squares fit ``pinv(A) b`` projected to unit modulus,
    then alternates between re-phasing the target to the current response and
    re-projecting the least-squares solution. Only the magnitude of the
    response is constrained; the phase is free. ``targets`` is ``(n, D)``
    or ``(D,)``; the result has the matching leading shape.
    """
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    f = _unit_modulus(t @ a_pinv.T, fill)
    norm = np.einsum("ij,ij->i", t, t)[:, None]
    for _ in range(iters):
        r = f @ a_h.T
        scale = np.einsum("ij,ij->i", np.abs(r), t)[:, None] / norm
        f = _unit_modulus((scale * t * np.exp(1j * np.angle(r))) @ a_pinv.T, fill)
    return f if np.ndim(targets) == 2 else f[0]


def fit_beams(a_h: np.ndarray, a_pinv: np.ndarray, targets: np.ndarray, iters: int = REFINE_ITERS) -> np.ndarray:
    """Constant-modulus fits, resolving undefined phases of degenerate LS solutions.

    When some least-squares weights vanish (the full-sector target, whose LS
    solution is a single element), their phases are free. They are completed
    with quadratic phases ``pi c n^2`` for ``c = k / 2M``, and the completion
    whose refined beam has the largest worst-case gain over the target is kept.
    """
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    out = constant_modulus_fit(a_h, a_pinv, t, iters)
    m = a_h.shape[1]
    chirps = np.array([_chirp(m, k / (2 * m)) for k in range(2 * m)])
    for i in np.flatnonzero(_degenerate_rows(t @ a_pinv.T)):
        cands = constant_modulus_fit(a_h, a_pinv, np.repeat(t[i:i + 1], len(chirps), axis=0), iters, chirps)
        floors = np.abs(cands @ a_h.T)[:, t[i] > 0].min(axis=1)
        # first completion within 1e-12 of the best floor
        out[i] = cands[int(np.flatnonzero(floors >= floors.max() - 1e-12)[0])]
    return out


def _check_selection(grid: AngleGrid, subset_selection) -> tuple[int, ...]:
    selection = tuple(sorted(set(int(v) for v in subset_selection)))
    if not selection or len(selection) > grid.levels:
        raise ValueError("selection must name between 1 and L subsets")
    if selection[0] < 0 or selection[-1] >= grid.levels:
        raise ValueError(f"subset index out of range for L={grid.levels}")
    return selection


def synthesize_beam(grid: AngleGrid, subset_selection, m_r: int, *, beam_id: int = 0,
                    panel: int = 1, iters: int = REFINE_ITERS) -> BeamEntry:
    """Phase-only beam covering the union of the selected subsets."""
    if m_r < 1:
        raise ValueError("m_r must be >= 1")
    selection = _check_selection(grid, subset_selection)
    a_h, a_pinv = _dictionary(len(grid.angles), grid.levels, m_r)
    mask = grid.mask(selection)
    weights = fit_beams(a_h, a_pinv, mask.astype(float)[None, :], iters)[0]
    return BeamEntry(weights, mask, len(selection), beam_id, panel, selection)


def build_codebook(grid: AngleGrid, m_r: int, panel: int = 1, iters: int = REFINE_ITERS) -> Codebook:
    """All ``2**L - 1`` subset unions, grouped by level and lexicographic within a level."""
    if m_r < 1:
        raise ValueError("m_r must be >= 1")
    selections = [sel for level in range(1, grid.levels + 1)
                  for sel in itertools.combinations(range(grid.levels), level)]
    assert len(selections) == sum(comb(grid.levels, l) for l in range(1, grid.levels + 1))
    masks = np.array([grid.mask(sel) for sel in selections])
    a_h, a_pinv = _dictionary(len(grid.angles), grid.levels, m_r)
    weights = fit_beams(a_h, a_pinv, masks.astype(float), iters)
    beams = [BeamEntry(w, mask, len(sel), i, panel, sel)
             for i, (w, mask, sel) in enumerate(zip(weights, masks, selections))]
    return Codebook(tuple(beams), grid.levels)


@lru_cache(maxsize=8)
def default_codebook(d_points: int = 120, levels: int = 8, m_r: int = 8) -> Codebook:
    """Cached panel-1 multi-level codebook (re-tag with :meth:`Codebook.for_panel`)."""
    return build_codebook(build_grid(d_points, levels), m_r)


def build_dft_codebook(m: int, panel: int = 1, fov=FOV_DEG) -> Codebook:
    """DFT beams over ``m`` antennas whose main lobe points inside ``fov``.

    Column ``k`` has phases ``pi * n * 2k/m`` and peaks where
    ``sin(theta) = 2k/m``; ``k`` runs over ``-m/2 .. m/2 - 1``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    lo, hi = np.sin(np.deg2rad(fov))
    beams = []
    for k in dft_indices(m):
        u = 2.0 * k / m
        if not lo - 1e-12 <= u <= hi + 1e-12:
            continue
        weights = np.exp(1j * np.pi * np.arange(m) * u)
        peak = float(np.rad2deg(np.arcsin(u)))
        beams.append(BeamEntry(weights, np.zeros(0, dtype=bool), 1, len(beams), panel, (k,), peak))
    return Codebook(tuple(beams), 1)


def dft_indices(m: int) -> list[int]:
    return list(range(-(m // 2), m - m // 2))


def beam_gain(beam: BeamEntry, theta: float) -> float:
    """Power gain ``|a(theta)^H w|^2``."""
    return float(beam_gains(beam.weights[None, :], [theta])[0, 0])


def beam_gains(weights: np.ndarray, thetas) -> np.ndarray:
    """Gains of each beam row in ``weights`` at each angle, shape ``(B, len(thetas))``."""
    weights = np.atleast_2d(weights)
    a_h = steering_matrix(weights.shape[1], thetas).conj()
    return np.abs(weights @ a_h.T) ** 2


def export_patterns_csv(path: str | Path, codebook: Codebook, thetas=None) -> int:
    """Write ``beam_id, level, theta_deg, gain_db`` rows; returns the row count."""
    if thetas is None:
        thetas = np.arange(-90.0, 90.5, 0.5)
    thetas = np.asarray(thetas, dtype=float)
    gains = beam_gains(codebook.weight_matrix(), thetas)
    with np.errstate(divide="ignore"):
        gains_db = 10 * np.log10(gains)
    rows = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beam_id", "panel", "level", "theta_deg", "gain_db"])
        for beam, row in zip(codebook.beams, gains_db):
            for theta, g in zip(thetas, row):
                writer.writerow([beam.beam_id, beam.panel, beam.level, repr(float(theta)), repr(float(g))])
                rows += 1
    return rows
