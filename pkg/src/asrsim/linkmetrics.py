"""Per-UE per-beam SNR through the amplify-and-forward chain, rates and QoS feasibility."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .channel import ChannelRealization, LinkBudget
from .codebook import BeamEntry, Codebook
from .geometry import UeDrop


def snr_from_gain(x, budget: LinkBudget, m_r: int | None = None):
    """SNR for beamformed channel gain ``x = |h f|^2`` (scalar or array).

    ``g^2 |beta|^2 s x / (g^2 n M_r x + z)``; the relay noise picked up by
    the BS-facing panel is forwarded together with the signal.
    """
    m_r = budget.m_r if m_r is None else m_r
    x = np.asarray(x, dtype=float)
    signal = budget.g_sq * abs(budget.beta) ** 2 * budget.sigma_s_sq * x
    noise = budget.g_sq * budget.sigma_n_sq * m_r * x + budget.sigma_z_sq
    return signal / noise


def snr_of(h: ChannelRealization, beam: BeamEntry, budget: LinkBudget, m_r: int | None = None) -> float:
    """SNR of one UE under one beam; zero when the beam belongs to another panel."""
    if beam.panel != h.panel:
        return 0.0
    x = abs(complex(h.h @ beam.weights)) ** 2
    return float(snr_from_gain(x, budget, m_r))


def rate_of(snr):
    return np.log2(1.0 + np.asarray(snr, dtype=float))


@dataclass(frozen=True, eq=False)
class FeasibilityTable:
    """Dense K x nB tables; beams are stacked panel by panel."""

    snr: np.ndarray
    rate: np.ndarray
    feasible: np.ndarray
    panel_of_beam: np.ndarray
    panel_of_ue: np.ndarray
    eta_bar: float = 0.0

    @property
    def n_ues(self) -> int:
        return self.feasible.shape[0]

    @property
    def n_beams(self) -> int:
        return self.feasible.shape[1]

    def with_threshold(self, eta_bar: float) -> "FeasibilityTable":
        """Same SNRs, QoS mask recomputed for a new rate threshold."""
        return FeasibilityTable(
            self.snr, self.rate, _qos_mask(self.rate, self.panel_of_beam, self.panel_of_ue, eta_bar),
            self.panel_of_beam, self.panel_of_ue, eta_bar,
        )

    @classmethod
    def from_boolean(cls, feasible, panel_of_beam, panel_of_ue, rate=None) -> "FeasibilityTable":
        """Table from a bare feasibility matrix (SNR/rate zero unless rates are given).

        Entries pairing a UE with a beam of another panel are forced infeasible.
        """
        feasible = np.asarray(feasible, dtype=bool)
        panel_of_beam = np.asarray(panel_of_beam, dtype=np.int64)
        panel_of_ue = np.asarray(panel_of_ue, dtype=np.int64)
        if rate is None:
            rate = np.zeros(feasible.shape)
        rate = np.asarray(rate, dtype=float)
        if rate.shape != feasible.shape:
            raise ValueError("rate and feasibility matrices differ in shape")
        snr = 2.0**rate - 1.0
        feasible = feasible & (panel_of_ue[:, None] == panel_of_beam[None, :])
        return cls(snr, rate, feasible, panel_of_beam, panel_of_ue)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["ue", "beam", "panel", "snr_db", "rate", "feasible"])
            with np.errstate(divide="ignore"):
                snr_db = 10 * np.log10(self.snr)
            for k in range(self.n_ues):
                for b in range(self.n_beams):
                    writer.writerow([k, b, int(self.panel_of_beam[b]), repr(float(snr_db[k, b])),
                                     repr(float(self.rate[k, b])), int(self.feasible[k, b])])


def _qos_mask(rate, panel_of_beam, panel_of_ue, eta_bar):
    same_panel = panel_of_ue[:, None] == panel_of_beam[None, :]
    return (rate >= eta_bar) & same_panel


def build_feasibility(
    drop: UeDrop,
    channels: Sequence[ChannelRealization],
    codebooks: Mapping[int, Codebook],
    budget: LinkBudget,
    eta_bar: float,
) -> FeasibilityTable:
    """SNR/rate/QoS table for every UE against every beam of every panel.

    ``codebooks`` maps panel index to its codebook; columns follow panel order
    (all panel-1 beams first). Entries for beams of a panel other than the
    UE's own are stored as zero SNR and are never feasible.
    """
    k = len(drop)
    if len(channels) != k:
        raise ValueError(f"{len(channels)} channels for {k} UEs")
    panels = sorted(codebooks)
    panel_of_ue = np.asarray(drop.panel_of, dtype=np.int64)
    blocks, panel_of_beam = [], []
    for p in panels:
        weights = codebooks[p].weight_matrix()
        if k:
            m = {len(ch.h) for ch in channels if ch.panel == p}
            if m and m != {weights.shape[1]}:
                raise ValueError(f"panel {p}: channel length {m} != codebook antennas {weights.shape[1]}")
        x = np.zeros((k, len(weights)))
        for i, ch in enumerate(channels):
            if ch.panel == p:
                x[i] = np.abs(weights @ ch.h) ** 2
        blocks.append(x)
        panel_of_beam.extend([p] * len(weights))
    x = np.hstack(blocks) if blocks else np.zeros((k, 0))
    panel_of_beam = np.asarray(panel_of_beam, dtype=np.int64)
    snr = snr_from_gain(x, budget)
    snr = np.where(panel_of_ue[:, None] == panel_of_beam[None, :], snr, 0.0)
    rate = rate_of(snr)
    return FeasibilityTable(snr, rate, _qos_mask(rate, panel_of_beam, panel_of_ue, eta_bar),
                            panel_of_beam, panel_of_ue, eta_bar)
