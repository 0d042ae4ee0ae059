"""Command line: ``python -m proxbundle {run,verify-bounds,reference-solve} ...``."""

import argparse
import json
import sys
from pathlib import Path

from . import harness


def _problem_arg(text):
    """A problem given as a JSON object, a JSON file, or a family name."""
    path = Path(text)
    if path.exists():
        return json.loads(path.read_text())
    if text.lstrip().startswith("{"):
        return json.loads(text)
    return {"family": text}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="proxbundle", description="Proximal bundle method experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment and write CSV traces plus summary.json")
    p_run.add_argument("config", help="built-in experiment name or JSON config path")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--output", default=None,
                       help=f"output root (default ${harness.OUTPUT_ENV} or ./runs)")
    p_run.add_argument("--workers", type=int, default=None, help="solvers to run concurrently")

    p_ver = sub.add_parser("verify-bounds", help="check observed step counts against the rate bounds")
    p_ver.add_argument("config", help="built-in experiment name or JSON config path")
    p_ver.add_argument("--seed", type=int, default=None)

    p_ref = sub.add_parser("reference-solve", help="print a reference optimal value")
    p_ref.add_argument("problem", help="family name, JSON object or JSON file")
    p_ref.add_argument("--seed", type=int, default=0)

    p_list = sub.add_parser("list", help="list built-in experiments")
    del p_list

    args = parser.parse_args(argv)
    try:
        if args.command == "list":
            for name in sorted(harness.BUILTIN_EXPERIMENTS):
                print(name)
            return 0
        if args.command == "run":
            spec = harness.load_experiment(args.config, seed=args.seed)
            if args.workers is not None:
                spec.workers = args.workers
            summary = harness.run_experiment(spec, args.output)
            root = harness.output_root(args.output) / spec.name
            failed = 0
            for s in summary["solvers"]:
                status = s.get("status", "")
                failed += status.startswith("error")
                gap = s.get("best_gap")
                gap_txt = "" if gap is None else f" best_gap={gap:.3e}"
                lam = "" if s.get("lam") is None else f" lam={s['lam']:g}"
                print(f"{s['solver']}{lam}: {status}{gap_txt}")
            print(f"wrote {root}")
            return 1 if failed else 0
        if args.command == "verify-bounds":
            spec = harness.load_experiment(args.config, seed=args.seed)
            _, code = harness.verify_bounds(spec)
            return code
        if args.command == "reference-solve":
            info = harness.describe_reference(_problem_arg(args.problem), seed=args.seed)
            print(json.dumps(info, sort_keys=True))
            return 0
    except (harness.ConfigError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
