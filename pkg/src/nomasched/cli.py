"""Command-line entry point.

Subcommands:
  train  - train a learning scheduler (ppo or ppo_full) over k seeds
  eval   - evaluate baseline schemes or a saved checkpoint, no training
  sweep  - full campaign over several schemes and seeds

Output is the delimited metrics schema documented in harness.py, written
under --out. Log verbosity comes from the NOMASCHED_LOG environment
variable (debug, info, warning, error).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, SimConfig, load_config
from .harness import (
    ALL_SCHEMES,
    BASELINE_NAMES,
    LEARNER_NAMES,
    evaluate_checkpoint,
    run_campaign,
    write_rows,
)

log = logging.getLogger("nomasched")


def _setup_logging() -> None:
    level = os.environ.get("NOMASCHED_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file; defaults apply when omitted")
    p.add_argument("--seeds", type=int, default=1, metavar="K",
                   help="number of seeds 0..K-1 (default 1)")
    p.add_argument("--episodes", type=int, default=None, metavar="N",
                   help="training episodes per seed (default from config)")
    p.add_argument("--out", default="runs", metavar="DIR", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nomasched",
                                     description="NOMA uplink scheduling simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a learning scheduler")
    _add_common(p_train)
    p_train.add_argument("--scheme", default="ppo", choices=LEARNER_NAMES)
    p_train.add_argument("--checkpoint", help="extra path for the seed-0 checkpoint copy")

    p_eval = sub.add_parser("eval", help="evaluate schemes without training")
    _add_common(p_eval)
    p_eval.add_argument("--scheme", action="append", choices=BASELINE_NAMES,
                        help="baseline to evaluate (repeatable; default: all baselines)")
    p_eval.add_argument("--checkpoint", help="saved agent to evaluate instead of baselines")

    p_sweep = sub.add_parser("sweep", help="campaign over schemes x seeds")
    _add_common(p_sweep)
    p_sweep.add_argument("--scheme", action="append", choices=ALL_SCHEMES,
                         help="scheme to include (repeatable; default: all)")
    return parser


def _load(args) -> SimConfig:
    return load_config(args.config) if args.config else SimConfig()


def _episodes(args, cfg: SimConfig) -> int:
    return cfg.ppo.episodes if args.episodes is None else args.episodes


def cmd_train(args) -> int:
    cfg = _load(args)
    episodes = _episodes(args, cfg)
    merged = run_campaign(cfg, [args.scheme], args.seeds, episodes, args.out)
    if args.checkpoint:
        src = os.path.join(args.out, "checkpoints", f"{args.scheme}_seed0.npz")
        with open(src, "rb") as fin, open(args.checkpoint, "wb") as fout:
            fout.write(fin.read())
    print(merged)
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args)
    episodes = _episodes(args, cfg)
    os.makedirs(args.out, exist_ok=True)
    if args.checkpoint:
        rows = evaluate_checkpoint(cfg, args.checkpoint, args.seeds, episodes)
        out = os.path.join(args.out, "metrics.csv")
        write_rows(rows, out)
        print(out)
        return 0
    schemes = args.scheme or list(BASELINE_NAMES)
    print(run_campaign(cfg, schemes, args.seeds, episodes, args.out))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    episodes = _episodes(args, cfg)
    schemes = args.scheme or list(ALL_SCHEMES)
    print(run_campaign(cfg, schemes, args.seeds, episodes, args.out))
    return 0


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    handler = {"train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep}[args.command]
    try:
        return handler(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"nomasched: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
