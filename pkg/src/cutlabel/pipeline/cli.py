"""Command-line entry point for the relabeling pipeline.

Exit codes: 0 on success, 1 for usage problems (bad flags, bad values),
2 for data problems (missing or malformed files).
"""

from __future__ import annotations

import argparse
import sys

from cutlabel.errors import DataError
from cutlabel.pipeline import commands
from cutlabel.pipeline.config import build_config, load_config_file
from cutlabel.pipeline.service import cmd_serve

_CONFIG_FLAGS = (
    ("--data-dir", "data_dir", str, "dataset root holding manifest.tsv and classes.txt"),
    ("--out-dir", "out_dir", str, "directory for run outputs"),
    ("--presets", "presets", str, "JSON file of discovery presets"),
    ("--pairs", "pairs", str, "co-occurrence pair table (TSV)"),
    ("--mode", "mode", str, "aggregation mode: hard or soft"),
    ("--tau", "tau", float, "hard-mode inclusion threshold"),
    ("--global-mode", "global_mode", str, "global merge: none, original, or pred"),
    ("--report-threshold", "report_threshold", float, "stats and soft-grounding threshold"),
    ("--hidden", "hidden", int, "head hidden width"),
    ("--activation", "activation", str, "head activation: relu or identity"),
    ("--target-conf", "target_conf", float, "target conditional confidence for resolve"),
    ("--iou-threshold", "iou_threshold", float, "match threshold for sweep recall"),
    ("--workers", "workers", int, "worker count for batch commands"),
    ("--seed", "seed", int, "run seed"),
    ("--pixels-per-patch", "pixels_per_patch", int, "pixel resolution of one patch cell"),
)

_TRAIN_FLAGS = (
    ("--epochs", "epochs", int, "training epochs"),
    ("--lr", "lr", float, "peak learning rate"),
    ("--momentum", "momentum", float, "momentum coefficient"),
    ("--weight-decay", "weight_decay", float, "L2 penalty on weight matrices"),
    ("--warmup-epochs", "warmup_epochs", int, "linear warmup epochs"),
    ("--batch-size", "batch_size", int, "minibatch size"),
    ("--patch-dropout", "patch_dropout", float, "fraction of mask patches dropped"),
    ("--tau-sel", "tau_sel", float, "proposal filter threshold"),
)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits 1 on usage errors instead of 2."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    for flag, dest, typ, help_text in _CONFIG_FLAGS:
        parser.add_argument(flag, dest=dest, type=typ, default=None, help=help_text)
    for flag, dest, typ, help_text in _TRAIN_FLAGS:
        parser.add_argument(flag, dest="train_" + dest, type=typ, default=None, help=help_text)


def _make_parser() -> _Parser:
    parser = _Parser(prog="cutlabel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    synth = sub.add_parser("synth", help="generate the synthetic fixture dataset")
    synth.add_argument("--images", type=int, default=40)
    synth.add_argument("--classes", type=int, default=8)
    synth.add_argument("--dim", type=int, default=64)
    synth.add_argument("--uniform-images", type=int, default=0)
    synth.add_argument("--previews", action="store_true")

    sub.add_parser("discover", help="run region discovery over the manifest")
    sub.add_parser("filter", help="keep proposals that score high on the original label")
    sub.add_parser("train", help="train the region classification head")
    sub.add_parser("relabel", help="predict regions and aggregate label sets")
    sub.add_parser("resolve", help="upgrade confusable class pairs")
    sub.add_parser("eval", help="score label sets against ground truth")
    sub.add_parser("sweep", help="recall table over discovery presets")

    serve = sub.add_parser("serve", help="run the annotation HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8008)

    for sp in sub.choices.values():
        _add_common(sp)
    return parser


def _config_from(args: argparse.Namespace):
    file_values = load_config_file(args.config) if args.config else None
    flag_values = {dest: getattr(args, dest) for _, dest, _, _ in _CONFIG_FLAGS}
    train_flags = {dest: getattr(args, "train_" + dest) for _, dest, _, _ in _TRAIN_FLAGS}
    return build_config(file_values, flag_values, train_flags)


def main(argv: list[str] | None = None) -> int:
    args = _make_parser().parse_args(argv)
    try:
        cfg = _config_from(args)
        if args.command == "synth":
            out = commands.cmd_synth(
                cfg,
                images=args.images,
                classes=args.classes,
                dim=args.dim,
                uniform_images=args.uniform_images,
                previews=args.previews,
            )
        elif args.command == "discover":
            out = commands.cmd_discover(cfg)
        elif args.command == "filter":
            out = commands.cmd_filter(cfg)
        elif args.command == "train":
            out = commands.cmd_train(cfg)
        elif args.command == "relabel":
            out = commands.cmd_relabel(cfg)
        elif args.command == "resolve":
            out = commands.cmd_resolve(cfg)
        elif args.command == "eval":
            out = commands.cmd_eval(cfg)
        elif args.command == "sweep":
            out = commands.cmd_sweep(cfg)
        else:
            cmd_serve(cfg, args.host, args.port)
            return 0
    except ValueError as exc:
        print(f"cutlabel: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"cutlabel: data error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
