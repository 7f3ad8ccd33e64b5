"""The r3d-train command.

    r3d-train --data DIR --config train.json --tag sparse_and_tx --out ckpt/
    r3d-train finetune --ckpt PATH --data DIR --out ckpt2/ [--epochs N]

Exit codes: 0 success, 2 bad usage or configuration, 3 runtime failure.
The config JSON holds TrainConfig fields plus an optional "generator"
block (base_width, depth, attention_gamma_init); unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields

from .data import CONFIG_TAGS, load_split
from .errors import InvalidConfig, TrainerError
from .models import GeneratorConfig
from .train import TrainConfig, finetune, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def load_train_config(path) -> tuple[TrainConfig, dict]:
    """Parse the config file into (TrainConfig, generator-block kwargs)."""
    with open(path) as f:
        doc = json.load(f)
    gen_kw = doc.pop("generator", {})
    known = {f.name for f in fields(TrainConfig)}
    unknown = set(doc) - known
    if unknown:
        raise InvalidConfig(f"unknown train-config keys: {sorted(unknown)}")
    gen_known = {"base_width", "depth", "attention_gamma_init"}
    gen_unknown = set(gen_kw) - gen_known
    if gen_unknown:
        raise InvalidConfig(f"unknown generator keys: {sorted(gen_unknown)}")
    return TrainConfig(**doc), gen_kw


def _cmd_train(args) -> int:
    train_cfg, gen_kw = load_train_config(args.config)
    gen_cfg = None
    if gen_kw:
        probe = load_split(args.data, args.tag, "train")
        gen_cfg = GeneratorConfig(in_channels=probe.in_channels, **gen_kw)
    state = train(args.data, args.out, tag=args.tag, train_cfg=train_cfg, gen_cfg=gen_cfg)
    last = state.history[-1]
    print(
        f"trained {state.epoch} epochs; "
        f"{last['eval_split']} mae {last['mae']:.4f} ssim {last['ssim']:.4f}"
    )
    return EXIT_OK


def _cmd_finetune(args) -> int:
    _, report = finetune(
        args.ckpt, args.data, args.out, epochs=args.epochs, seed=args.seed
    )
    pre, post = report["pre"]["mae"], report["post"]["mae"]
    print(f"finetuned {args.epochs} epochs; {report['eval_split']} mae {pre:.4f} -> {post:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="r3d-train", description=__doc__)
    sub = p.add_subparsers(dest="command")

    f = sub.add_parser("finetune", help="continue a checkpoint on a new dataset")
    f.add_argument("--ckpt", required=True, help="checkpoint.pt to start from")
    f.add_argument("--data", required=True, help="dataset directory")
    f.add_argument("--out", required=True, help="output directory")
    f.add_argument("--epochs", type=int, default=50)
    f.add_argument("--seed", type=int, default=None, help="override the shuffle seed")
    f.set_defaults(func=_cmd_finetune)

    t = sub.add_parser("train", help="train from scratch (the default command)")
    t.add_argument("--data", required=True, help="dataset directory")
    t.add_argument("--config", required=True, help="train config JSON")
    t.add_argument("--tag", choices=CONFIG_TAGS, default="sparse_and_tx")
    t.add_argument("--out", required=True, help="output directory")
    t.set_defaults(func=_cmd_train)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # Bare `r3d-train --data ...` means `r3d-train train --data ...`.
    if argv and argv[0] not in ("train", "finetune", "-h", "--help"):
        argv = ["train"] + argv
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (InvalidConfig, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainerError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
