"""Command-line interface.

Subcommands: `run` trains once and writes a CSV log, `compare` runs the
optimizers side by side and writes per-optimizer CSVs plus a summary
JSON, `verify` executes the oracle suites and reports pass/fail. The
environment variable MUONKIT_SEED, when set, overrides --seed.
"""

from __future__ import annotations

import argparse
import os
import sys

from ._version import VERSION
from .harness import (DESK_LR_PRESETS, CompareError, TrainConfig, TrainingDiverged,
                      compare, run_experiment)
from .models import TaskSpec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="muonkit",
        description="Desk-scale AdamW / Muon / MuonAll optimizer experiments.")
    parser.add_argument("--version", action="version", version=f"muonkit {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write a CSV log")
    run.add_argument("--optimizer", required=True, choices=["adamw", "muon", "muonall"])
    run.add_argument("--lr", required=True, type=float, help="initial learning rate")
    run.add_argument("--lr-aux", type=float,
                     help="initial rate for non-matrix parameters (muon only)")
    _add_shared(run)
    run.add_argument("--out", required=True, help="CSV output path")
    run.add_argument("--json-out", help="also write the full log (with wall times) as JSON")

    cmp_ = sub.add_parser("compare", help="run several optimizers on the same task")
    cmp_.add_argument("--optimizers", default="adamw,muon,muonall",
                      help="comma-separated subset of adamw,muon,muonall")
    cmp_.add_argument("--lr-adamw", type=float, help="override the adamw preset rate")
    cmp_.add_argument("--lr-muon", type=float, help="override the muon matrix rate")
    cmp_.add_argument("--lr-muon-aux", type=float, help="override the muon non-matrix rate")
    cmp_.add_argument("--lr-muonall", type=float, help="override the muonall preset rate")
    _add_shared(cmp_)
    cmp_.add_argument("--out", required=True, help="summary JSON path (CSVs written alongside)")

    sub.add_parser("verify", help="run the oracle verification suites")
    return parser


def _add_shared(p: argparse.ArgumentParser):
    p.add_argument("--momentum", type=float, default=0.95)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--weight-decay", type=float, default=None)
    p.add_argument("--ns-steps", type=int, default=5)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--grad-accum", type=int, default=1)
    p.add_argument("--task", default="gaussian_clusters",
                   choices=["gaussian_clusters", "char_bigram"])
    p.add_argument("--data-file", help="UTF-8 text file for the char_bigram task")
    p.add_argument("--seed", type=int, default=0)


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_verify()
    except ValueError as err:
        print(f"muonkit: error: {err}", file=sys.stderr)
        return 2
    except (TrainingDiverged, CompareError) as err:
        print(f"muonkit: {err}", file=sys.stderr)
        return 1


def _resolve_seed(seed: int) -> int:
    env = os.environ.get("MUONKIT_SEED")
    if env is None:
        return seed
    try:
        override = int(env)
    except ValueError:
        raise ValueError(f"MUONKIT_SEED must be an integer, got {env!r}") from None
    print(f"muonkit: MUONKIT_SEED={override} overrides --seed", file=sys.stderr)
    return override


def _task_from(args) -> TaskSpec:
    seed = _resolve_seed(args.seed)
    return TaskSpec(kind=args.task, seed=seed, text_path=args.data_file)


def _shared_config_kwargs(args) -> dict:
    return dict(momentum=args.momentum, beta1=args.beta1, beta2=args.beta2,
                weight_decay=args.weight_decay, ns_steps=args.ns_steps,
                epochs=args.epochs, batch_size=args.batch_size,
                grad_accum=args.grad_accum, task=_task_from(args),
                seed=_resolve_seed(args.seed))


def _cmd_run(args) -> int:
    cfg = TrainConfig(optimizer=args.optimizer, lr0=args.lr, lr_aux0=args.lr_aux,
                      out_path=args.out, **_shared_config_kwargs(args))
    log = run_experiment(cfg)
    if args.json_out:
        log.write_json(args.json_out)
    print(f"{cfg.optimizer}: final train loss {log.final_train_loss():.5f}, "
          f"final val loss {log.final_val_loss():.5f} -> {args.out}")
    return 0


def _cmd_compare(args) -> int:
    names = [s.strip() for s in args.optimizers.split(",") if s.strip()]
    overrides = {
        "adamw": {"lr0": args.lr_adamw},
        "muon": {"lr0": args.lr_muon, "lr_aux0": args.lr_muon_aux},
        "muonall": {"lr0": args.lr_muonall},
    }
    shared = _shared_config_kwargs(args)
    cfgs = []
    for name in names:
        if name not in DESK_LR_PRESETS:
            raise ValueError(f"unknown optimizer {name!r}")
        lrs = dict(DESK_LR_PRESETS[name])
        lrs.update({k: v for k, v in overrides[name].items() if v is not None})
        cfgs.append(TrainConfig(optimizer=name, **lrs, **shared))
    summary = compare(cfgs, args.out)
    print(f"{'optimizer':<9} {'train':>9} {'val':>9} {'ms/step':>9}")
    for name, row in summary["results"].items():
        print(f"{name:<9} {row['final_train_loss']:>9.5f} "
              f"{row['final_val_loss']:>9.5f} {row['mean_step_wall_ms']:>9.3f}")
    print(f"summary -> {args.out}")
    return 0


def _cmd_verify() -> int:
    from .verify import run_all  # oracle code stays out of the training path

    results = run_all()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail} [{r.seconds:.2f}s]")
    return 0 if all(r.passed for r in results) else 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
