"""Command-line entry point: ``asrsim simulate | codebook export | schedule solve | oracle-check``.

Exit codes: 0 success, 2 configuration/usage error, 3 numeric failure
(non-finite values, oracle mismatch, constraint violation), 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .channel import export_channels_csv, link_budget_for, ue_channels
from .codebook import build_codebook, build_dft_codebook, build_grid, export_patterns_csv
from .experiment import (
    CSV_FIELDS,
    _codebooks,
    config_to_mapping,
    load_plan,
    run_plan,
    trial_streams,
)
from .geometry import ConfigError, drop_ues
from .linkmetrics import build_feasibility
from .scheduler import (
    SOLVERS,
    InstanceTooLarge,
    check_solution,
    load_instance,
    random_instance,
    solution_to_dict,
    solve_bruteforce,
    solve_exact,
)
from .scheduler.problem import CAPACITY_MODES

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
log = logging.getLogger("asrsim")


class NumericError(RuntimeError):
    """A computation produced non-finite values or failed a correctness check."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _overrides(extra: list[str]) -> dict[str, str]:
    """Turn ``--key value`` / ``--key=value`` leftovers into config overrides."""
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        elif i + 1 < len(extra):
            i += 1
            value = extra[i]
        else:
            raise ConfigError(f"missing value for {tok}")
        out[key.replace("-", "_")] = value
        i += 1
    return out


def _export_tables(configs, out: Path) -> None:
    """Channels and feasibility table of trial 0 for each (mode, K) in the plan."""
    done = set()
    for cfg in configs:
        tag = (cfg.mode, cfg.k_max)
        if tag in done:
            continue
        done.add(tag)
        scen = cfg.scenario
        drop_seed, rng = trial_streams(cfg, 0)
        drop = drop_ues(scen, cfg.k_max, drop_seed)
        channels = ue_channels(drop, cfg.serving_panels()[1], scen.frequency, rng,
                               element_pattern=cfg.element_pattern, nlos=cfg.nlos)
        codebooks = _codebooks(cfg.mode, cfg.grid_points, cfg.levels, scen.asr_antennas)
        table = build_feasibility(drop, channels, codebooks, link_budget_for(scen), cfg.eta_bar_sweep[0])
        export_channels_csv(out / f"channels_{cfg.mode}_k{cfg.k_max}.csv", drop, channels)
        table.to_csv(out / f"feasibility_{cfg.mode}_k{cfg.k_max}.csv")


def cmd_simulate(args, extra) -> int:
    overrides = _overrides(extra)
    configs, values = load_plan(args.config, overrides)
    manifest = config_to_mapping(configs[0])
    manifest.update({k: v for k, v in values.items() if k in manifest or k == "modes"})
    manifest["modes"] = ", ".join(dict.fromkeys(c.mode for c in configs))
    manifest["num_ues"] = ", ".join(str(k) for k in dict.fromkeys(c.k_max for c in configs))
    manifest["num_slots"] = ", ".join(str(q) for q in dict.fromkeys(c.q_slots for c in configs))
    manifest["lambda"] = ", ".join(repr(c) for c in dict.fromkeys(c.lam for c in configs))
    start = time.perf_counter()
    records = run_plan(configs, args.out, manifest, workers=args.workers,
                       progress=lambda c: log.info("running %s K=%d Q=%d lambda=%g", c.mode, c.k_max,
                                                   c.q_slots, c.lam))
    if any(not np.isfinite(getattr(r, f)) for r in records for f in ("mean_cumulative_se", "mean_served")):
        raise NumericError("non-finite metric in results")
    if args.tables:
        _export_tables(configs, Path(args.out))
    log.info("%d records in %.1f s", len(records), time.perf_counter() - start)
    print(f"wrote {Path(args.out) / 'plotdata.csv'} ({len(records)} rows; columns {', '.join(CSV_FIELDS)})")
    return EXIT_OK


def cmd_codebook_export(args) -> int:
    if args.dft:
        cb = build_dft_codebook(args.dft)
    else:
        cb = build_codebook(build_grid(args.grid_points, args.levels), args.antennas)
    thetas = np.arange(-90.0, 90.0 + args.step / 2, args.step)
    rows = export_patterns_csv(args.out, cb, thetas)
    print(f"wrote {args.out} ({cb.total} beams, {rows} rows)")
    return EXIT_OK


def cmd_schedule_solve(args) -> int:
    try:
        inst = load_instance(args.instance)
    except json.JSONDecodeError as exc:
        raise OSError(f"cannot parse {args.instance}: {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid instance: {exc}") from exc
    sol = SOLVERS[args.method](inst)
    errors = check_solution(inst, sol)
    payload = solution_to_dict(sol)
    payload["constraint_errors"] = errors
    text = json.dumps(payload, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if errors:
        raise NumericError("; ".join(errors))
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    lams = [float(x) for x in args.lambdas.split(",")]
    mismatches = 0
    start = time.perf_counter()
    for i in range(args.instances):
        inst = random_instance(
            rng,
            int(rng.integers(0, args.max_ues + 1)),
            int(rng.integers(1, args.max_beams_per_panel + 1)),
            int(rng.integers(0, args.max_slots + 1)),
            lam=lams[i % len(lams)],
            capacity_mode=args.capacity_mode,
        )
        exact, oracle = solve_exact(inst), solve_bruteforce(inst)
        errors = check_solution(inst, exact)
        if abs(exact.objective - oracle.objective) > 1e-9 or errors:
            mismatches += 1
            log.error("instance %d: exact %.6f oracle %.6f %s", i, exact.objective, oracle.objective, errors)
    print(f"{args.instances} instances, {mismatches} mismatches, {time.perf_counter() - start:.2f} s")
    if mismatches:
        raise NumericError(f"{mismatches} oracle mismatches")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="asrsim", description="Tri-sectoral mmWave repeater simulator")
    p.add_argument("--version", action="version", version=f"asrsim {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo sweep from a key/value config",
                         description="Any config key can be overridden with --key value.")
    sim.add_argument("--config", help="key/value scenario file")
    sim.add_argument("--out", default="results", help="output directory")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--tables", action="store_true", help="also export trial-0 channels and feasibility")

    cb = sub.add_parser("codebook", help="codebook utilities")
    cb_sub = cb.add_subparsers(dest="action", required=True, parser_class=_Parser)
    exp = cb_sub.add_parser("export", parents=[common], help="write beam patterns as CSV")
    exp.add_argument("--out", default="patterns.csv")
    exp.add_argument("--levels", type=int, default=8)
    exp.add_argument("--grid-points", type=int, default=120)
    exp.add_argument("--antennas", type=int, default=8)
    exp.add_argument("--dft", type=int, default=0, metavar="M", help="export the M-antenna DFT codebook instead")
    exp.add_argument("--step", type=float, default=0.5, help="angle step in degrees")

    sch = sub.add_parser("schedule", help="scheduler utilities")
    sch_sub = sch.add_subparsers(dest="action", required=True, parser_class=_Parser)
    solve = sch_sub.add_parser("solve", parents=[common], help="solve a JSON instance")
    solve.add_argument("instance")
    solve.add_argument("--method", choices=sorted(SOLVERS), default="exact")
    solve.add_argument("--out")

    oc = sub.add_parser("oracle-check", parents=[common], help="compare the exact solver with brute force")
    oc.add_argument("--instances", type=int, default=200)
    oc.add_argument("--max-ues", type=int, default=10)
    oc.add_argument("--max-beams-per-panel", type=int, default=7)
    oc.add_argument("--max-slots", type=int, default=2)
    oc.add_argument("--lambdas", default="-1,0,1")
    oc.add_argument("--capacity-mode", choices=CAPACITY_MODES, default=CAPACITY_MODES[0])
    oc.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        if args.command != "simulate" and extra:
            raise ConfigError(f"unrecognized arguments: {' '.join(extra)}")
        if args.command == "simulate":
            return cmd_simulate(args, extra)
        if args.command == "codebook":
            return cmd_codebook_export(args)
        if args.command == "schedule":
            return cmd_schedule_solve(args)
        return cmd_oracle_check(args)
    except (ConfigError, InstanceTooLarge) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
