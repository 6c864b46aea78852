"""``parnet`` command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 runtime error.
"""

import argparse
import os
import sys
import traceback
from pathlib import Path

from . import experiments, metrics
from .config import load_config
from .data import load_mnist
from .exceptions import ConfigError, DataError, ValidationError
from .network import save_checkpoint

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common_options():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration (default: config.yaml if present)")
    common.add_argument("--data-dir", help="directory holding the MNIST IDX files")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--seed", type=int)
    common.add_argument("--children", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--epochs", type=int)
    common.add_argument("--lr", type=float, help="learning rate")
    common.add_argument("--batch-size", type=int)
    common.add_argument("--backend", choices=("process", "thread"))
    common.add_argument("--eval-every", type=int)
    return common


def build_parser():
    parser = _Parser(prog="parnet", description="Sequential and parallel neural networks on MNIST")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common_options()
    sub.add_parser("train", parents=[common], help="train one sequential or parallel network")
    sub.add_parser(
        "sweep-activations", parents=[common],
        help="hidden activations x {sequential, parallel} at the baseline settings",
    )
    sweep = sub.add_parser(
        "sweep-children", parents=[common], help="parallel networks of several child counts"
    )
    sweep.add_argument("--children-set", help="comma-separated child counts, e.g. 2,10,20")
    bench = sub.add_parser(
        "bench-workers", parents=[common], help="training time versus worker-pool size"
    )
    bench.add_argument("--repeats", type=int)
    bench.add_argument("--subset", type=int, help="train on the first N instances only")
    return parser


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def resolve_config(args):
    cfg = load_config(args.config)
    bench = args.command == "bench-workers"
    overrides = {}
    if args.data_dir is not None:
        overrides["data.dir"] = args.data_dir
    if args.out is not None:
        overrides["run.output_csv"] = args.out
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.lr is not None:
        overrides["network.learning_rate"] = args.lr
    if args.batch_size is not None:
        overrides["network.batch_size"] = args.batch_size
    if args.backend is not None:
        overrides["parallel.backend"] = args.backend
    if args.eval_every is not None:
        overrides["run.eval_every"] = args.eval_every
    if args.epochs is not None:
        overrides["bench.epochs" if bench else "run.epochs"] = args.epochs
    if args.children is not None:
        overrides["bench.children" if bench else "parallel.children"] = args.children
    if args.workers is not None:
        if bench:
            overrides["bench.workers_set"] = [
                w for w in cfg.bench.workers_set if w <= args.workers
            ] or [1]
        else:
            overrides["parallel.workers"] = args.workers
    if getattr(args, "children_set", None):
        overrides["sweep.children_set"] = _int_list(args.children_set)
    if getattr(args, "repeats", None) is not None:
        overrides["bench.repeats"] = args.repeats
    if getattr(args, "subset", None) is not None:
        overrides["bench.subset"] = args.subset
    return cfg.with_values(overrides).validate()


def data_dir(cfg):
    return cfg.data.dir or os.environ.get("PARNET_DATA_DIR")


def _checkpoint_dir(cfg):
    if cfg.run.checkpoint_dir:
        return Path(cfg.run.checkpoint_dir)
    out = Path(cfg.run.output_csv)
    return out.parent / f"{out.stem}-checkpoints"


def cmd_train(cfg, train, test, log=print):
    model = experiments.build_model(cfg)
    label = "snn" if cfg.sequential else f"pnn{cfg.parallel.children:02d}"
    records = experiments.run_training(
        model, train, test, cfg.run.epochs, label, cfg.run.eval_every, log=log
    )
    directory = _checkpoint_dir(cfg)
    directory.mkdir(parents=True, exist_ok=True)
    if cfg.sequential:
        save_checkpoint(model, directory / "snn.bin")
    else:
        model.save_checkpoints(directory, prefix=label)
    return records


def run(args, log=print):
    cfg = resolve_config(args)
    directory = data_dir(cfg)
    if directory is None:
        raise DataError("no MNIST directory: pass --data-dir, set data.dir or PARNET_DATA_DIR")
    train, test = load_mnist(directory)
    if args.command == "train":
        records = cmd_train(cfg, train, test, log=log)
    elif args.command == "sweep-activations":
        records = experiments.sweep_activations(cfg, train, test, log=log)
    elif args.command == "sweep-children":
        records = experiments.sweep_children(cfg, train, test, log=log)
    else:
        records, _ = experiments.bench_workers(cfg, train, test, log=log)
    metrics.emit_csv(records, cfg.run.output_csv)
    log(f"wrote {len(records)} rows to {cfg.run.output_csv}")
    return records


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        run(args)
    except (UsageError, ConfigError, ValidationError) as exc:
        print(f"parnet: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"parnet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:
        traceback.print_exc()
        print(f"parnet: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
