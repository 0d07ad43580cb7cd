"""Command-line entry point: ``python -m vqite_noise <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import (
    RunConfig,
    load_config,
    measurement_labels,
    run_ensemble,
    run_trajectory,
    sweep_csv,
    sweep_r,
    sweep_shots,
    verify_structure,
    write_plot_recipe,
)
from .shot_model import ConfigurationError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("vqite_noise")


class NumericalFailure(RuntimeError):
    pass


def _csv_list(text: str) -> str:
    # validated later by the config converters
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqite_noise", description="Noisy variational imaginary-time evolution of TFIM chains"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "noiseless": "exact (infinite-shot) trajectory",
        "noisy": "ensemble of finite-shot trajectories",
        "sweep-r": "ensembles over the minimal-shot fraction r",
        "sweep-shots": "uniform ensembles over the average shot budget",
        "verify": "check the singular-column structure of the metric",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--n", type=int)
        p.add_argument("--eps", type=float, help="regularization strength epsilon")
        p.add_argument("--method", choices=("tikhonov", "eigencut"))
        p.add_argument("--shots", type=_csv_list, help="average shots per circuit (comma list for sweep-shots)")
        p.add_argument("--r", type=_csv_list, help="minimal-shot fraction (comma list for sweep-r)")
        p.add_argument("--runs", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--cost", choices=("theta-dot", "wavefunction", "mclachlan"))
        p.add_argument("--out", help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {
        "n": args.n, "epsilon": args.eps, "method": args.method, "runs": args.runs,
        "seed": args.seed, "cost": args.cost, "out": args.out,
    }
    if args.shots is not None:
        overrides["shot_values" if args.command == "sweep-shots" else "shots"] = args.shots
    if args.command == "verify" and args.n is not None:
        overrides["verify_sizes"] = str(args.n)
    if args.r is not None:
        overrides["r_values" if args.command == "sweep-r" else "r"] = args.r
    try:
        return config.with_overrides(**overrides)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    log.info("wrote %s", path)


def cmd_noiseless(config: RunConfig, out: Path) -> None:
    config = config.with_overrides(noise="exact")
    digest = config.config_hash()
    record = run_trajectory(config, config.seed)
    _write(out / f"noiseless_seed{config.seed}.csv", record.to_csv(digest))
    write_plot_recipe(out / "noiseless.plot.json", config, "trajectory")
    print(f"final tau={record['tau'][-1]:.4g} energy={record['energy'][-1]:.10g} "
          f"infidelity={record.final_infidelity:.4e} status={record.status}")
    if not record.ok:
        raise NumericalFailure(record.message)


def cmd_noisy(config: RunConfig, out: Path) -> None:
    config = config.with_overrides(noise="sampled")
    digest = config.config_hash()
    result = run_ensemble(config)
    labels, kinds = measurement_labels(config.ansatz())
    for rec in result.records:
        _write(out / f"run_{rec.seed}.csv", rec.to_csv(digest))
        if config.dump_allocation and rec.allocations:
            _write(out / f"allocation_{rec.seed}.csv", rec.allocation_csv(labels, kinds, digest))
    _write(out / "summary.csv", result.summary.to_csv(digest))
    write_plot_recipe(out / "summary.plot.json", config, "summary")
    mean, sem = result.summary.at(config.tau_final)
    print(f"runs={result.summary.runs} excluded={result.summary.excluded} "
          f"infidelity(tau={config.tau_final:g})={mean:.4e} +- {sem:.1e}")
    if result.summary.runs == 0:
        raise NumericalFailure("every run aborted")


def cmd_sweep_r(config: RunConfig, out: Path) -> None:
    rows, _ = sweep_r(config)
    _write(out / "sweep_r.csv", sweep_csv(rows, config))
    write_plot_recipe(out / "sweep_r.plot.json", config, "sweep-r")
    for row in rows:
        print(f"r={row.r:<5g} tau={row.tau:<4g} infidelity={row.mean:.4e} +- {row.sem:.1e}")


def cmd_sweep_shots(config: RunConfig, out: Path) -> None:
    rows, _ = sweep_shots(config)
    _write(out / "sweep_shots.csv", sweep_csv(rows, config))
    write_plot_recipe(out / "sweep_shots.plot.json", config, "sweep-shots")
    for row in rows:
        print(f"{row.label:<9} shots={row.shots:<6d} r={row.r:<4g} infidelity={row.mean:.4e} +- {row.sem:.1e}")


def cmd_verify(config: RunConfig, out: Path) -> None:
    report = verify_structure(config)
    text = f"# config_hash={config.config_hash()}\n" + report.to_text()
    _write(out / "structure.txt", text)
    print(text, end="")


COMMANDS = {
    "noiseless": cmd_noiseless,
    "noisy": cmd_noisy,
    "sweep-r": cmd_sweep_r,
    "sweep-shots": cmd_sweep_shots,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(config.to_text())
        COMMANDS[args.command](config, out)
    except (ConfigurationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
