"""Command-line entry point: ``coordnet <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .errors import CoordnetError
from .pipeline import (
    CONFIG_ENV,
    PipelineConfig,
    StageError,
    run_pipeline,
    run_score,
    run_stage,
    run_synth,
)
from .synth import ScenarioConfig

PIPELINE_STAGES = ("ingest", "classify", "embed", "knn", "induce", "prune", "analyze")


def _pipeline_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help=f"JSON/TOML pipeline config (default: ${CONFIG_ENV})")
    p.add_argument("--input", help="corpus file (JSONL or CSV)")
    p.add_argument("--format", choices=("jsonl", "csv"), help="corpus format (default: file extension)")
    p.add_argument("--out", help="output directory holding stage artifacts")
    p.add_argument("--classes", help="JSON/TOML user class term table")
    p.add_argument("--vectorizer", choices=("builtin", "import"))
    p.add_argument("--embeddings", help="embedding file for --vectorizer import")
    p.add_argument("--dim", type=int, help="built-in vectorizer dimension (default 256)")
    p.add_argument("--seed", type=int, help="built-in vectorizer hash seed")
    p.add_argument("--k", type=int, help="neighbours per post (default floor(log2 N))")
    p.add_argument("--std-mult", type=float, dest="std_mult",
                   help="prune edges not above mean + STD_MULT * std (default 1.0)")
    p.add_argument("--threads", type=int, help="worker threads for the kNN search")
    p.add_argument("--export", help="comma-separated subset of csv,graphml,json,dot")
    p.add_argument("--cluster-method", dest="cluster_method", choices=("components", "modularity"))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coordnet",
        description="Detect coordinated messaging via text-similarity induced user graphs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _pipeline_options()

    run = sub.add_parser("run", parents=[common], help="run every stage")
    run.add_argument("--resume", action="store_true", help="skip stages whose output exists")

    helps = {
        "ingest": "load and normalize the input corpus",
        "classify": "assign user classes by name terms",
        "embed": "embed original posts",
        "knn": "build the symmetric kNN post graph",
        "induce": "induce the user coordination graph",
        "prune": "keep edges above mean + std",
        "analyze": "clusters, degrees, engagement and top terms",
    }
    for name in PIPELINE_STAGES:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "prune":
            sp.add_argument("--graph", help="user edge list to prune (default: OUT/coordination.csv)")

    synth = sub.add_parser("synth", help="generate a synthetic scenario with planted groups")
    synth.add_argument("--config", help="JSON/TOML scenario config")
    synth.add_argument("--seed", type=int)
    synth.add_argument("--out", required=True)

    score = sub.add_parser("score", help="score a pruned graph against ground truth")
    score.add_argument("--core", required=True, help="pruned user edge list")
    score.add_argument("--truth", required=True, help="ground truth CSV (username,group_id)")
    score.add_argument("--out", help="directory for scores.json")
    return parser


def _config(args) -> PipelineConfig:
    keys = ("input", "format", "out", "classes", "vectorizer", "embeddings", "dim", "seed",
            "k", "std_mult", "threads", "export", "cluster_method")
    return PipelineConfig.from_sources(args.config, {k: getattr(args, k) for k in keys})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)
    try:
        if args.command == "synth":
            scenario = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
            if args.seed is not None:
                scenario = ScenarioConfig.from_mapping({**scenario.to_dict(), "seed": args.seed})
            corpus_path, truth_path = run_synth(scenario, args.out)
            print(f"wrote {corpus_path} and {truth_path}")
        elif args.command == "score":
            print(json.dumps(run_score(args.core, args.truth, args.out), indent=2, sort_keys=True))
        elif args.command == "run":
            report = run_pipeline(_config(args), resume=args.resume)
            print(json.dumps({k: v for k, v in report.items() if k != "stages"}, indent=2, sort_keys=True))
        else:
            cfg = _config(args)
            extra = {"graph_path": args.graph} if args.command == "prune" and args.graph else {}
            run_stage(args.command, cfg, **extra)
    except StageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except CoordnetError as exc:
        print(f"{exc.stage}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
