#!/usr/bin/env python3
"""
microforge - inverse design of dual-phase steel microstructures.
Main CLI entry point.

Usage:
    python run.py gen-dataset --profile desk     # phase-field snapshot dataset
    python run.py fem-batch --resume             # FEM labels (resumable)
    python run.py train-gan                      # WGAN on the dataset
    python run.py train-cnn                      # one property regressor per mode
    python run.py search                         # random search in latent space
    python run.py verify                         # FEM check of the search winner
    python run.py compare-sampling               # random vs space-filling study
    python run.py report                         # markdown + CSV + figures
    python run.py all                            # every stage in order

Common options: --config FILE  --profile desk|paper  --seed N  --out DIR  --resume  --force
"""
import sys
import argparse
import logging
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from config.settings import LOG_FORMAT, LOG_LEVEL, MICROFORGE_THREADS, RUN_MANIFEST
from core.errors import MicroforgeError

COMMANDS = {
    "gen-dataset": "Phase-field snapshot dataset",
    "fem-batch": "CPFEM labels for a seeded subset (resumable)",
    "train-gan": "Train the Wasserstein GAN",
    "train-cnn": "Train the per-mode property regressors",
    "search": "Random search over the latent square",
    "verify": "Re-simulate the search winner with CPFEM",
    "compare-sampling": "Random vs space-filling sampling study",
    "report": "Markdown / CSV / figure report over existing outputs",
    "all": "Run every stage in order",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON config merged over the profile")
    common.add_argument("--profile", choices=["desk", "paper"], default="desk", help="Preset (default: desk)")
    common.add_argument("--seed", type=int, default=None, help="Override the master seed")
    common.add_argument("--out", type=str, default=None, help="Output root directory")
    common.add_argument("--resume", action="store_true", help="Continue an interrupted stage")
    common.add_argument("--force", action="store_true", help="Ignore cached stage outputs")

    parser = argparse.ArgumentParser(prog="microforge", description="Dual-phase steel inverse design")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def setup_logging():
    logging.basicConfig(level=getattr(logging, LOG_LEVEL, logging.INFO), format=LOG_FORMAT)


def banner(title):
    print("\n" + "=" * 50)
    print(f"  {title}")
    print("=" * 50)


def load(args):
    from config.profiles import load_config, save_config

    cfg = load_config(args.config, profile=args.profile, seed=args.seed, out=args.out)
    save_config(cfg, cfg.out_dir / "config.json")
    print(f"  profile={cfg.profile} seed={cfg.seed} out={cfg.out_dir} threads={MICROFORGE_THREADS}")
    return cfg


def report_result(result):
    from pipeline.stages import describe

    if result.cached:
        print(f"  [CACHE] {result.stage}: outputs unchanged, skipped")
    else:
        tag = "[WARN]" if result.manifest.failures else "[OK]"
        print(f"  {tag} {result.stage}: {len(result.manifest.outputs)} outputs in {result.stage_dir}")
        for failure in result.manifest.failures:
            print(f"         failed: {failure}")
    print(f"         {describe(result)}")
    print(f"         manifest: {result.stage_dir / RUN_MANIFEST}")


def cmd_stage(args):
    from pipeline.stages import STAGES

    banner(f"MICROFORGE {args.command.upper()}")
    cfg = load(args)
    start = time.time()
    result = STAGES[args.command](cfg, resume=args.resume, force=args.force)
    report_result(result)
    print(f"  done in {time.time() - start:.1f}s")


def cmd_all(args):
    from pipeline.stages import STAGES

    banner("MICROFORGE FULL PIPELINE")
    cfg = load(args)
    for i, (name, fn) in enumerate(STAGES.items(), 1):
        print(f"\n[{i}/{len(STAGES)}] {name}")
        report_result(fn(cfg, resume=args.resume, force=args.force))


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging()
    try:
        if args.command == "all":
            cmd_all(args)
        else:
            cmd_stage(args)
    except MicroforgeError as exc:
        print(f"\n[ERROR] {type(exc).__name__}: {exc}")
        return exc.exit_code
    except KeyboardInterrupt:
        print("\n[WARN] interrupted; rerun with --resume to continue")
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
