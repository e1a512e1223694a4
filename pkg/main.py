import argparse
import sys
from pathlib import Path
from typing import List, Optional

from src.errors import LocalizationError
from src.pipeline.experiment import (
    GEODESIC_DEMO_DEFAULTS,
    ExperimentConfig,
    IngestConfig,
    SynthConfig,
    config_from_dict,
    load_config,
)
from src.pipeline.runner import (
    cmd_baseline_1nn,
    cmd_extend,
    cmd_geodesic_demo,
    cmd_ingest,
    cmd_run,
    cmd_sweep,
    cmd_synth,
)


def _experiment(args) -> ExperimentConfig:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.config:
        cfg = load_config(args.config, ExperimentConfig, overrides)
    else:
        defaults = GEODESIC_DEMO_DEFAULTS if args.command == "geodesic-demo" else {}
        cfg = config_from_dict(defaults, ExperimentConfig, Path.cwd(), overrides)
    if args.output_dir:
        cfg.output_dir = str(Path(args.output_dir).resolve())
    return cfg


def _synth(args) -> SynthConfig:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.config:
        cfg = load_config(args.config, SynthConfig, overrides)
    else:
        cfg = config_from_dict({}, SynthConfig, Path.cwd(), overrides)
    if args.output:
        cfg.output = str(Path(args.output).resolve())
    return cfg


def _ingest(args) -> IngestConfig:
    data = {"path": args.path, "output": args.output, "min_coverage": args.min_coverage}
    for key in ("floor", "building", "missing_sentinel", "floor_value"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    return config_from_dict(data, IngestConfig, Path.cwd())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manifold-localization",
        description="Indoor localization by matching the signal manifold to the floor plan",
    )
    parser.add_argument('--settings', type=str, default=None, help="Application settings YAML.")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_command(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", nargs="?", help="experiment config JSON")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field (repeatable)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output-dir", default=None)
        return p

    experiment_command("run", "full pipeline: graphs, embeddings, calibration, localization")
    experiment_command("baseline", "labeled-1NN baseline with the same kernel and anchors")
    experiment_command("sweep", "select lambda (and d) by the matching loss")
    experiment_command("geodesic-demo", "wall experiment: Euclidean vs geodesic area graph")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("config", nargs="?", help="synth config JSON")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", default=None)

    p = sub.add_parser("ingest", help="convert an RSSI fingerprint CSV into a corpus")
    p.add_argument("path")
    p.add_argument("--output", default="corpus.csv")
    p.add_argument("--floor", type=int, default=None)
    p.add_argument("--building", type=int, default=None)
    p.add_argument("--missing-sentinel", dest="missing_sentinel", type=float, default=None)
    p.add_argument("--floor-value", dest="floor_value", type=float, default=None)
    p.add_argument("--min-coverage", dest="min_coverage", type=float, default=0.0)

    p = sub.add_parser("extend", help="place new signals using a finished run")
    p.add_argument("run_dir")
    p.add_argument("corpus")
    p.add_argument("--output", default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cmd_run(_experiment(args))
        elif args.command == "baseline":
            cmd_baseline_1nn(_experiment(args))
        elif args.command == "sweep":
            cmd_sweep(_experiment(args))
        elif args.command == "geodesic-demo":
            cmd_geodesic_demo(_experiment(args))
        elif args.command == "synth":
            cmd_synth(_synth(args))
        elif args.command == "ingest":
            cmd_ingest(_ingest(args))
        elif args.command == "extend":
            cmd_extend(args.run_dir, args.corpus, args.output)
    except LocalizationError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr, flush=True)
        return e.exit_code
    except KeyboardInterrupt:
        print("\nInterrupted by the user", file=sys.stderr)
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
