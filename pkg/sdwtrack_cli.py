#!/usr/bin/env python3
"""
SDWTRACK Command Line
Riemann, evolve, converge, entropy and validate subcommands over JSON run configurations
"""

import argparse
import asyncio
import csv
import logging
import sys
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv
from pydantic import TypeAdapter

from convergence_analysis import (
    Atom, MeasureSnapshot, Piece, check_uniform_bounds, conservation_ledger, converge, fit_slope,
    oracle_sweep, run_level, snapshot,
)
from entropy_diagnostics import INTERNAL_ENERGY, KINETIC_ENERGY, entropy_report
from fluid_states import FluidState
from front_tracker import WaveFan
from riemann_solver import solve_riemann
from sdwtrack_config import (
    RunConfig, apply_tolerance_override, dump_run_config, load_run_config, validate_config,
)
from sdwtrack_errors import InvariantError, PreconditionError, SdwTrackError
from shadow_waves import SdwTrajectory, kind_for
from wave_interactions import InteractionEvent

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
SNAPSHOT_HEADER = ["kind", "x_left", "x_right", "rho", "u", "e", "mass", "momentum", "energy"]
EVENT_ADAPTER = TypeAdapter(InteractionEvent)


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    logger.info(f"Wrote {path}")


def read_table(path: Path) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def parse_state(text: str) -> FluidState:
    """'rho,u' or 'rho,u,e'"""
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as e:
        raise PreconditionError(f"cannot parse state '{text}': {e}") from e
    if len(values) not in (2, 3):
        raise PreconditionError(f"state '{text}' needs two or three components")
    return FluidState(rho=values[0], u=values[1], e=values[2] if len(values) == 3 else None)


def parse_times(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise PreconditionError(f"cannot parse times '{text}': {e}") from e


# Snapshot files

def snapshot_rows(shot: MeasureSnapshot) -> List[list]:
    rows = []
    for p in shot.pieces:
        s = p.state
        rows.append(["piece", p.x_left, p.x_right, s.rho, s.u, s.e, p.mass, p.momentum,
                     p.energy if s.e is not None else None])
    for a in shot.atoms:
        u_s = a.momentum / a.mass if a.mass > 0.0 else None
        rows.append(["atom", a.x, a.x, None, u_s, None, a.mass, a.momentum, a.energy])
    return rows


def write_snapshot(path: Path, shot: MeasureSnapshot) -> None:
    write_table(path, SNAPSHOT_HEADER, snapshot_rows(shot))


def read_snapshot(path: Path, t: float) -> MeasureSnapshot:
    """Rebuild a snapshot from its CSV; vacuum fan geometry is not stored"""
    pieces, atoms = [], []

    def num(text: str) -> Optional[float]:
        return float(text) if text != "" else None

    for row in read_table(path):
        if row["kind"] == "piece":
            state = FluidState(rho=float(row["rho"]), u=float(row["u"]), e=num(row["e"]))
            pieces.append(Piece(x_left=float(row["x_left"]), x_right=float(row["x_right"]), state=state))
        else:
            atoms.append(Atom(x=float(row["x_left"]), mass=float(row["mass"]), momentum=float(row["momentum"]),
                              front_id=-1, energy=num(row["energy"])))
    return MeasureSnapshot(t=t, pieces=pieces, atoms=atoms)


def snapshot_name(t: float) -> str:
    return f"snapshot_t={t:.10g}.csv"


def write_events(path: Path, events: Sequence[InteractionEvent]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for event in events:
            handle.write(EVENT_ADAPTER.dump_json(event).decode("utf-8") + "\n")
    logger.info(f"Wrote {path}")


def read_events(path: Path) -> List[InteractionEvent]:
    with open(path, encoding="utf-8") as handle:
        return [EVENT_ADAPTER.validate_json(line) for line in handle if line.strip()]


# Configuration handling

def resolve_config(args: argparse.Namespace) -> RunConfig:
    if not args.config:
        raise PreconditionError("--config is required for this command")
    config = load_run_config(args.config).with_overrides(
        epsilon=args.epsilon, t_end=args.t_end, levels=args.levels, output_dir=args.out, mode=args.mode,
    )
    tolerances = apply_tolerance_override(config.tolerances)
    config = config.model_copy(update={"tolerances": tolerances})
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    if args.log_level is None:
        logging.getLogger().setLevel(config.log_level.upper())
    return config


def prepare_output(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_run_config(config, out / "config.json")
    return out


def sample_times(config: RunConfig) -> List[float]:
    return [float(t) for t in np.linspace(0.0, config.t_end, config.diagnostics.sample_count)]


def run_checks(config: RunConfig, fan: WaveFan, out: Path) -> None:
    times = sample_times(config)
    diagnostics = config.diagnostics
    if diagnostics.conservation:
        event_times = sorted({e.time for e in fan.history if e.time <= config.t_end})
        ledger_times = sorted(set(times) | set(event_times))
        rows = conservation_ledger(fan, ledger_times)
        write_table(out / "conservation.csv",
                    ["t", "mass", "momentum", "energy", "mass_error", "momentum_error", "energy_error"],
                    [[r.t, r.mass, r.momentum, r.energy, r.mass_error, r.momentum_error, r.energy_error]
                     for r in rows])
        worst = max(r.worst for r in rows)
        if worst > config.tolerances.conservation_rtol:
            logger.error(f"Conservation error {worst:.3e} exceeds {config.tolerances.conservation_rtol}")
            raise InvariantError(f"conservation violated: relative error {worst:.3e}")
    if diagnostics.bounds or diagnostics.overcompressibility:
        report = check_uniform_bounds(fan, times, config.initial_data)
        if diagnostics.overcompressibility and report.overcompressive_violations:
            logger.error(f"{report.overcompressive_violations} overcompressibility violations")
            raise InvariantError("shadow wave speed left [u_r, u_l]")
        if diagnostics.bounds and report.speed_violations:
            logger.error(f"{report.speed_violations} speed bound violations")
            raise InvariantError(f"front speeds left {report.speed_range}")


def write_entropy(config: RunConfig, fan: WaveFan, out: Path) -> None:
    pair = INTERNAL_ENERGY if config.with_energy else KINETIC_ENERGY
    report = entropy_report(fan, sample_times(config), M=config.entropy_window, pair=pair)
    write_table(out / "entropy_fronts.csv", ["front_id", "t", "D"],
                [[front_id, t, d] for front_id, curve in sorted(report.front_production.items())
                 for t, d in curve])
    write_table(out / "entropy_events.csv",
                ["time", "participants", "outcome_kind", "delta_D", "delta_E", "measured_delta_E"],
                [[e.time, ";".join(str(i) for i in e.participants), e.outcome_kind, e.delta_D, e.delta_E,
                  e.measured_delta_E] for e in report.events])
    write_table(out / "entropy_total.csv", ["t", "E"], report.total_entropy)


# Commands

def cmd_riemann(args: argparse.Namespace) -> int:
    """Print the Riemann solution and optionally tabulate a delta-initial shadow wave"""
    if args.sweep:
        seed = args.seed if args.seed is not None else 0
        worst = oracle_sweep(args.sweep, seed=seed)
        print(f"closed_form_max_relative_error={FLOAT_FORMAT % worst}")
        return 0
    if not args.left or not args.right:
        raise PreconditionError("riemann needs --left and --right states")
    left, right = parse_state(args.left), parse_state(args.right)
    solution = solve_riemann(left, right)
    if solution.is_zero_jump:
        print("no wave")
    elif solution.fan_edges is not None:
        lo, hi = solution.fan_edges
        print(f"{solution.kind.value} edges={FLOAT_FORMAT % lo},{FLOAT_FORMAT % hi}")
    else:
        print(f"{solution.kind.value} speed={FLOAT_FORMAT % solution.speed} "
              f"strength_rate={FLOAT_FORMAT % solution.strength_rate}")

    if args.gamma is None and args.c0 is None:
        return 0
    if args.gamma is None or args.c0 is None:
        raise PreconditionError("--gamma and --c0 go together")
    trajectory = SdwTrajectory(birth_time=0.0, birth_position=0.0, gamma=args.gamma, c0=args.c0,
                               left=left, right=right, kind=kind_for(left, right))
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["t", "xi", "u_s", "c"])
    for t in parse_times(args.times):
        writer.writerow([fmt(t), fmt(trajectory.strength(t)), fmt(trajectory.speed(t)),
                         fmt(trajectory.position(t))])
    return 0


def cmd_evolve(args: argparse.Namespace) -> int:
    """Run the tracker to t_end and write snapshots, the event log and the conservation ledger"""
    config = resolve_config(args)
    out = prepare_output(config)
    logger.info(f"Evolving {config.mode.value} data to t={config.t_end} with epsilon={config.epsilon}")
    fan = run_level(config)
    for t in config.snapshot_times:
        write_snapshot(out / snapshot_name(t), snapshot(fan, t))
    write_events(out / "events.jsonl", fan.history)
    run_checks(config, fan, out)
    if config.diagnostics.entropy:
        write_entropy(config, fan, out)
    logger.info(f"Evolve finished: {len(fan.history)} events, {len(fan.fronts)} fronts left")
    return 0


def cmd_converge(args: argparse.Namespace) -> int:
    """Refinement sweep table"""
    config = resolve_config(args)
    out = prepare_output(config)
    results = asyncio.run(converge(config))
    header = ["level", "epsilon", "mu", "fronts", "events", "E1", "E2", "gamma_distance",
              "velocity_l1", "mass_error", "alpha", "t_max"]
    write_table(out / "convergence.csv", header,
                [[r.level, r.epsilon, r.mu, r.fronts, r.events, r.E1, r.E2, r.gamma_distance,
                  r.velocity_l1, r.mass_error, r.alpha, r.t_max] for r in results])
    residuals = [max(abs(r.E1), abs(r.E2)) for r in results if r.E1 is not None]
    if len(residuals) >= 2:
        slope = fit_slope([r.epsilon for r in results if r.E1 is not None], residuals)
        logger.info(f"Residual scaling slope: {slope:.4f}")
    return 0


def cmd_entropy(args: argparse.Namespace) -> int:
    """Entropy production curves, event ledger and total entropy trace"""
    config = resolve_config(args)
    out = prepare_output(config)
    fan = run_level(config)
    write_entropy(config, fan, out)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    if not args.config:
        raise PreconditionError("--config is required for validate")
    return 0 if validate_config(args.config) else 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (JSON)")
    common.add_argument("--epsilon", type=float)
    common.add_argument("--t-end", dest="t_end", type=float)
    common.add_argument("--levels", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--mode", choices=["2x2", "3x3"])
    common.add_argument("--seed", type=int)
    common.add_argument("--log-level", dest="log_level",
                        choices=["debug", "info", "warning", "error"])

    parser = argparse.ArgumentParser(prog="sdwtrack", description="Shadow-wave front tracking")
    commands = parser.add_subparsers(dest="command", required=True)

    riemann = commands.add_parser("riemann", parents=[common], help="solve one Riemann problem")
    riemann.add_argument("--left", help="rho,u[,e]")
    riemann.add_argument("--right", help="rho,u[,e]")
    riemann.add_argument("--gamma", type=float)
    riemann.add_argument("--c0", type=float)
    riemann.add_argument("--times", default="0,0.5,1,2,5")
    riemann.add_argument("--sweep", type=int, default=0, help="random closed-form checks against the ODE")
    riemann.set_defaults(handler=cmd_riemann)

    for name, handler, text in (
        ("evolve", cmd_evolve, "track fronts to t_end"),
        ("converge", cmd_converge, "refinement sweep"),
        ("entropy", cmd_entropy, "entropy report"),
        ("validate", cmd_validate, "check a configuration file"),
    ):
        sub = commands.add_parser(name, parents=[common], help=text)
        sub.set_defaults(handler=handler)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    if args.log_level:
        logging.getLogger().setLevel(args.log_level.upper())
    try:
        return args.handler(args)
    except SdwTrackError as e:
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
