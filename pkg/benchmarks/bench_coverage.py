"""Compiled vs pure-Python max-coverage kernel.

Masks come from real ASR feasibility tables (K UEs, 255-beam panels) at a
QoS threshold where beams cover overlapping UE sets, plus random masks.

    python benchmarks/bench_coverage.py [--repeats 5] [--ues 40]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from asrsim.experiment import RunConfig, _codebooks, trial_streams
from asrsim.channel import link_budget_for, ue_channels
from asrsim.geometry import drop_ues
from asrsim.linkmetrics import build_feasibility
from asrsim.scheduler import ProblemInstance, kernels
from asrsim.scheduler.exact import non_dominated


def asr_panel_masks(k: int, eta: float, trial: int):
    cfg = RunConfig(k_max=k)
    seed, rng = trial_streams(cfg, trial)
    drop = drop_ues(cfg.scenario, k, seed)
    chans = ue_channels(drop, 8, cfg.scenario.frequency, rng)
    table = build_feasibility(drop, chans, _codebooks("ASR", 120, 8, 8), link_budget_for(cfg.scenario), eta)
    inst = ProblemInstance(table, 8, 6)
    masks = inst.beam_masks()
    beams = [b for b in range(inst.n_beams) if table.panel_of_beam[b] == 1]
    return [masks[b] for b in non_dominated(beams, masks)]


def random_masks(rng, n: int, k: int, density: float):
    bits = rng.random((n, k)) < density
    return [int(sum(1 << int(i) for i in np.flatnonzero(row))) for row in bits]


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--ues", type=int, default=40)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        print("compiled kernel not available; only the Python backend can be timed")
    rng = np.random.default_rng(0)
    cases = [(f"ASR K={args.ues} eta={eta} trial={t}", asr_panel_masks(args.ues, eta, t), 6)
             for eta in (12.0, 14.0) for t in range(2)]
    cases += [(f"random n={n} K=60 p={p}", random_masks(rng, n, 60, p), q)
              for n, p, q in ((40, 0.1, 6), (60, 0.08, 8))]
    print(f"{'case':38s} {'sets':>4s} {'Q':>2s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, masks, q in cases:
        t_py, out_py = timeit(lambda: kernels.coverage_profile(masks, q, backend="python"), args.repeats)
        if kernels.BACKEND == "cython":
            t_c, out_c = timeit(lambda: kernels.coverage_profile(masks, q, backend="cython"), args.repeats)
            assert out_c == out_py, f"backends disagree on {name}"
            print(f"{name:38s} {len(masks):4d} {q:2d} {t_py:11.5f} {t_c:11.5f} {t_py / max(t_c, 1e-9):8.1f}")
        else:
            print(f"{name:38s} {len(masks):4d} {q:2d} {t_py:11.5f} {'n/a':>11s} {'n/a':>8s}")


if __name__ == "__main__":
    main()
