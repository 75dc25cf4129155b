"""Command-line front end: ``captrust <subcommand> [options]``.

Every subcommand that writes files also writes ``manifest.json`` next to
them.  The manifest holds the fully resolved configuration and the argument
list that regenerates the directory (``captrust rerun manifest.json -o DIR``).
Nothing time- or host-dependent goes into any output, so a fixed seed and
fixed inputs give byte-identical files.

Failures print a single ``error[<kind>]: <message>`` line on stderr.  Usage
errors exit 2, everything else exits 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from captrust import __version__
from captrust.artificial import DEFAULT_RESOLUTION, TIE_BREAKS, artificial_trust, surface_table
from captrust.belief import UniformBelief, format_snapshot
from captrust.core import DEFAULT_BINS, AgentId, CapabilityVector, Role, TrustParams, trust_integral
from captrust.data import DEFAULT_DIMENSIONS, DatasetError, dumps_dataset, generate_synthetic_dataset, load_dataset
from captrust.fitting import (
    MODELS,
    FitConfig,
    evaluate_models,
    fold_scores_table,
    format_table,
    learning_curve_table,
)
from captrust.sim import DEFAULT_SCHEDULE, SimConfig, SyntheticAgent, run_identification

MANIFEST = "manifest.json"
DEFAULT_OUTPUT = "captrust-out"


class CliError(Exception):
    def __init__(self, kind: str, message: str, status: int = 1):
        super().__init__(message)
        self.kind = kind
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", f"{self.prog}: {message}", 2)


# flag grammar

def _reals(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not all(np.isfinite(vals)):
        raise argparse.ArgumentTypeError(f"non-finite value in {text!r}")
    return vals


def vector_arg(text: str) -> tuple[float, ...]:
    vals = _reals(text)
    if not all(0.0 <= v <= 1.0 for v in vals):
        raise argparse.ArgumentTypeError(f"values must lie in [0, 1], got {text!r}")
    return vals


def positive_reals_arg(text: str) -> tuple[float, ...]:
    vals = _reals(text)
    if not all(v > 0 for v in vals):
        raise argparse.ArgumentTypeError(f"values must be positive, got {text!r}")
    return vals


def belief_arg(text: str) -> UniformBelief:
    """``l1:u1,l2:u2,...``"""
    try:
        pairs = [tuple(float(x) for x in part.split(":")) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lower:upper pairs, got {text!r}") from None
    if any(len(p) != 2 for p in pairs):
        raise argparse.ArgumentTypeError(f"expected lower:upper pairs, got {text!r}")
    try:
        return UniformBelief.from_intervals(pairs)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def schedule_arg(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("schedule entries must be >= 0")
    return vals


def _int_at_least(lo: int):
    def parse(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {v}")
        return v

    return parse


def _per_dim(vals: tuple[float, ...], n: int, name: str) -> tuple[float, ...]:
    if len(vals) == 1:
        return vals * n
    if len(vals) != n:
        raise CliError("usage", f"--{name} needs 1 or {n} values, got {len(vals)}", 2)
    return vals


def _csv(vals) -> str:
    return ",".join(repr(float(v)) for v in vals)


# output plumbing

def _write(outdir: Path, name: str, text: str, written: list) -> None:
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / name).write_text(text)
    except OSError as exc:
        raise CliError("io", f"cannot write {outdir / name}: {exc.strerror or exc}") from exc
    written.append(name)


def _manifest(args, config: dict, inputs: dict, outputs: list, argv: list) -> str:
    doc = {
        "tool": "captrust",
        "version": __version__,
        "subcommand": args.command,
        "seed": args.seed,
        "config": config,
        "inputs": inputs,
        "outputs": sorted(outputs),
        "argv": argv,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _finish(args, outdir: Path, config: dict, inputs: dict, written: list, argv: list) -> None:
    _write(outdir, MANIFEST, _manifest(args, config, inputs, list(written) + [MANIFEST], argv), [])


def _common_argv(args) -> list[str]:
    return ["--seed", str(args.seed), "--bins", str(args.bins)]


# subcommands

def cmd_simulate(args) -> int:
    caps = args.capabilities
    n = len(caps)
    schedule = tuple(sorted(set(s for s in args.schedule if s <= args.tasks) | {args.tasks}))
    try:
        agent = SyntheticAgent(AgentId(Role.ROBOT, "trustee"), CapabilityVector(caps), args.p_high, args.p_low)
        config = SimConfig(n, args.tasks, args.bins, args.resolution, args.seed, schedule, args.tie_break)
        snapshots = run_identification(agent, config)
    except ValueError as exc:
        raise CliError("value", str(exc)) from exc
    out = Path(args.output)
    written: list[str] = []
    lines = ["observations," + ",".join(f"l{d},u{d}" for d in range(n))]
    lines += [format_snapshot(s.observations, s.belief) for s in snapshots]
    _write(out, "beliefs.csv", "\n".join(lines) + "\n", written)
    fits = ["observations,objective,evaluations"]
    for s in snapshots:
        if s.fit is not None:
            fits.append(f"{s.observations},{s.fit.objective!r},{s.fit.evaluations}")
    _write(out, "fits.csv", "\n".join(fits) + "\n", written)
    for s in snapshots:
        _write(out, f"grid_N{s.observations:05d}.csv", s.grid.to_table(), written)
        _write(out, f"surface_N{s.observations:05d}.csv", surface_table(s.surface), written)
    cfg = asdict(config)
    cfg.update(capabilities=list(caps), p_high=args.p_high, p_low=args.p_low, schedule=list(schedule))
    argv = ["simulate", *_common_argv(args), "--capabilities", _csv(caps), "--tasks", str(args.tasks),
            "--resolution", repr(args.resolution), "--schedule", ",".join(map(str, schedule)),
            "--p-high", repr(args.p_high), "--p-low", repr(args.p_low), "--tie-break", args.tie_break]
    _finish(args, out, cfg, {}, written, argv)
    final = snapshots[-1]
    print(f"N={final.observations} " + " ".join(f"[{lo:g}, {hi:g}]" for lo, hi in final.belief.intervals()))
    return 0


def _load(path: str):
    try:
        return load_dataset(path)
    except FileNotFoundError as exc:
        raise CliError("io", f"cannot read {path}: no such file") from exc
    except OSError as exc:
        raise CliError("io", f"cannot read {path}: {exc.strerror or exc}") from exc
    except DatasetError as exc:
        raise CliError("data", f"{path}: " + " | ".join(exc.diagnostics)) from exc


def cmd_fit(args) -> int:
    ds = _load(args.data)
    if len(ds.records) < args.folds:
        raise CliError("value", f"{len(ds.records)} records cannot fill {args.folds} folds")
    config = FitConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        patience=args.patience,
        bins_per_dim=args.bins,
        seed=args.seed,
    )
    reports = evaluate_models(list(ds.records), args.folds, args.seed, config, tuple(args.models))
    table = format_table(reports)
    out = Path(args.output)
    written: list[str] = []
    _write(out, "table.txt", table, written)
    _write(out, "folds.csv", fold_scores_table(reports), written)
    _write(out, "curves.csv", learning_curve_table(reports), written)
    params = ["model,field,values"]
    for name, r in reports.items():
        for key, val in asdict(r.params).items():
            vals = val if isinstance(val, tuple) else (val,)
            params.append(f"{name},{key},{' '.join(repr(float(v)) for v in vals)}")
    _write(out, "params.csv", "\n".join(params) + "\n", written)
    cfg = asdict(config)
    cfg.update(folds=args.folds, models=list(args.models))
    argv = ["fit", *_common_argv(args), "--data", args.data, "--folds", str(args.folds), "--lr", repr(args.lr),
            "--epochs", str(args.epochs), "--patience", str(args.patience), "--models", *args.models]
    _finish(args, out, cfg, {"data": args.data}, written, argv)
    sys.stdout.write(table)
    return 0


def cmd_trust(args) -> int:
    belief = args.belief
    n = belief.n
    if len(args.task) != n:
        raise CliError("usage", f"--task has {len(args.task)} values but the belief has {n} dimensions", 2)
    params = TrustParams(_per_dim(args.beta, n, "beta"), _per_dim(args.zeta, n, "zeta"))
    natural = trust_integral(belief, args.task, params, args.bins)
    artificial = artificial_trust(belief, args.task)
    print(f"natural {natural:.6f}")
    print(f"artificial {artificial:.6f}")
    return 0


def cmd_validate_data(args) -> int:
    ds = _load(args.data)
    ratings = np.array([r.trust_rating for r in ds.records])
    print(f"ok: {len(ds.records)} records, {ds.n} dimensions ({', '.join(ds.dimensions)})")
    if len(ratings):
        print(f"ratings: mean {ratings.mean():.4f}, min {ratings.min():.4f}, max {ratings.max():.4f}")
    return 0


def cmd_generate_data(args) -> int:
    dims = tuple(args.dimensions.split(","))
    n = len(dims)
    params = TrustParams(_per_dim(args.beta, n, "beta"), _per_dim(args.zeta, n, "zeta"))
    noise = args.noise or None
    ds = generate_synthetic_dataset(params, args.records, noise, args.seed, dims, bins_per_dim=args.bins)
    out = Path(args.output)
    written: list[str] = []
    _write(out, "dataset.json", dumps_dataset(ds), written)
    cfg = {"beta": list(params.beta), "zeta": list(params.zeta), "records": args.records, "noise": args.noise,
           "dimensions": list(dims), "bins_per_dim": args.bins}
    argv = ["generate-data", *_common_argv(args), "--beta", _csv(params.beta), "--zeta", _csv(params.zeta),
            "--records", str(args.records), "--noise", repr(args.noise), "--dimensions", ",".join(dims)]
    _finish(args, out, cfg, {}, written, argv)
    print(f"wrote {len(ds.records)} records to {out / 'dataset.json'}")
    return 0


def cmd_rerun(args) -> int:
    try:
        doc = json.loads(Path(args.manifest).read_text())
        argv = list(doc["argv"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError("io", f"cannot read manifest {args.manifest}: {exc}") from exc
    return main(argv + ["-o", args.output])


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=_int_at_least(0), default=0, help="master random seed (default 0)")
    common.add_argument("--bins", type=_int_at_least(1), default=DEFAULT_BINS, help="bins per dimension (default 10)")
    common.add_argument("-o", "--output", default=DEFAULT_OUTPUT, help=f"output directory (default {DEFAULT_OUTPUT})")

    parser = _Parser(prog="captrust", description="Capability-based bi-directional trust model.")
    parser.add_argument("--version", action="version", version=f"captrust {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="capability identification from simulated outcomes")
    p.add_argument("--capabilities", type=vector_arg, required=True, help="true trustee capabilities, e.g. 0.7,0.4")
    p.add_argument("--tasks", type=_int_at_least(1), default=1000, help="number of observed tasks N")
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION, help="bound lattice spacing")
    p.add_argument("--schedule", type=schedule_arg, default=DEFAULT_SCHEDULE,
                   help="observation counts to snapshot; entries above --tasks are dropped, N is always added")
    p.add_argument("--p-high", type=float, default=0.95)
    p.add_argument("--p-low", type=float, default=0.05)
    p.add_argument("--tie-break", choices=TIE_BREAKS, default="narrowest")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", parents=[common], help="cross-validate BTM and the OPT baseline on a dataset")
    p.add_argument("--data", required=True, help="dataset JSON file")
    p.add_argument("--folds", type=_int_at_least(2), default=10)
    p.add_argument("--lr", type=float, default=FitConfig.learning_rate)
    p.add_argument("--epochs", type=_int_at_least(1), default=FitConfig.epochs)
    p.add_argument("--patience", type=_int_at_least(1), default=FitConfig.patience)
    p.add_argument("--models", nargs="+", choices=sorted(MODELS), default=["BTM", "OPT"])
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("trust", parents=[common], help="natural and artificial trust for one belief and task")
    p.add_argument("--belief", type=belief_arg, required=True, help="bounds per dimension, e.g. 0.2:0.8,0.2:0.8")
    p.add_argument("--task", type=vector_arg, required=True, help="task requirements, e.g. 0.5,0.5")
    p.add_argument("--beta", type=positive_reals_arg, default=(10.0,), help="one value or one per dimension")
    p.add_argument("--zeta", type=positive_reals_arg, default=(1.0,), help="one value or one per dimension")
    p.set_defaults(func=cmd_trust)

    p = sub.add_parser("validate-data", parents=[common], help="check a dataset file and report every problem")
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_validate_data)

    p = sub.add_parser("generate-data", parents=[common], help="write a synthetic dataset rated by the model itself")
    p.add_argument("--beta", type=positive_reals_arg, default=(8.0, 12.0))
    p.add_argument("--zeta", type=positive_reals_arg, default=(1.0,))
    p.add_argument("--records", type=_int_at_least(1), default=200)
    p.add_argument("--noise", type=float, default=0.0, help="rating noise std (truncated Gaussian)")
    p.add_argument("--dimensions", default=",".join(DEFAULT_DIMENSIONS), help="comma-separated dimension labels")
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("rerun", help="regenerate an output directory from its manifest")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error[{exc.kind}]: {exc}", file=sys.stderr)
        return exc.status
    except ValueError as exc:
        print(f"error[value]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
