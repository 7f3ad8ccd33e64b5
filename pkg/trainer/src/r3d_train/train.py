"""Training and fine-tuning loops, checkpointing, per-epoch evaluation.

Each step alternates a discriminator update (real pair, generated pair, R1
penalty on the real pair) with a generator update. While the adversarial
weight is zero the generator step never touches the discriminator. Runs are
deterministic per seed on CPU; GPU backends may introduce nondeterministic
kernels, which is outside this package's control.

Checkpoints are written atomically (temp file, then rename) and contain both
models, both optimizer states, the epoch counter, a config hash, and the
metric history. metrics.jsonl in the output directory gets one line per
epoch with the evaluation-split metrics.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import metrics as metrics_mod
from .data import SplitTensors, load_split
from .errors import ArchMismatch, DivergenceDetected, InvalidConfig
from .losses import adv_weight_schedule, discriminator_loss, generator_loss, r1_penalty
from .models import (
    DiscriminatorConfig,
    Generator,
    GeneratorConfig,
    PatchDiscriminator,
    build_discriminator,
    build_generator,
)

CHECKPOINT_NAME = "checkpoint.pt"
METRICS_NAME = "metrics.jsonl"


@dataclass(frozen=True)
class TrainConfig:
    lr_g: float = 2e-4
    lr_d: float = 1e-4
    batch: int = 8
    epochs: int = 100
    lambda_l1: float = 100.0
    alpha_adv_max: float = 0.1
    warmup_epochs: int = 15
    ramp_epochs: int = 10
    r1_gamma: float = 10.0
    seed: int = 0

    def __post_init__(self):
        positive = (
            "lr_g", "lr_d", "batch", "epochs", "lambda_l1",
            "alpha_adv_max", "warmup_epochs", "ramp_epochs", "r1_gamma",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"{name} must be positive, got {getattr(self, name)}")
        if self.warmup_epochs + self.ramp_epochs > self.epochs:
            raise InvalidConfig(
                f"warmup {self.warmup_epochs} + ramp {self.ramp_epochs} "
                f"exceeds epochs {self.epochs}"
            )
        if self.seed < 0:
            raise InvalidConfig(f"seed must be >= 0, got {self.seed}")


def _cfg_hash(gen_cfg: GeneratorConfig, train_cfg: TrainConfig, tag: str) -> str:
    doc = {"generator": asdict(gen_cfg), "train": asdict(train_cfg), "tag": tag}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def _batch_order(n: int, batch: int, seed: int, epoch: int) -> list[torch.Tensor]:
    # Keyed by (seed, epoch), not by call order, so a resumed run shuffles
    # exactly like an uninterrupted one.
    g = torch.Generator().manual_seed((seed << 20) ^ epoch)
    perm = torch.randperm(n, generator=g)
    return [perm[i:i + batch] for i in range(0, n, batch)]


def evaluate(gen: Generator, split: SplitTensors, batch: int = 8) -> dict:
    """Mean per-sample metrics of the generator on one split."""
    gen.eval()
    sums = {"mae": 0.0, "rmse": 0.0, "nmse": 0.0, "ssim": 0.0}
    psnrs: list[float] = []
    n = len(split)
    if n == 0:
        raise InvalidConfig("cannot evaluate on an empty split")
    with torch.no_grad():
        for lo in range(0, n, batch):
            x = split.x[lo:lo + batch]
            y = split.y[lo:lo + batch]
            pred = gen(x)
            sums["mae"] += (pred - y).abs().mean(dim=(1, 2, 3, 4)).sum().item()
            for i in range(x.shape[0]):
                p = pred[i, 0].numpy().astype(np.float64)
                t = y[i, 0].numpy().astype(np.float64)
                sums["rmse"] += metrics_mod.rmse(p, t)
                sums["nmse"] += metrics_mod.nmse(p, t)
                sums["ssim"] += metrics_mod.ssim(p, t)
                psnrs.append(metrics_mod.psnr(p, t))
    out = {k: v / n for k, v in sums.items()}
    out["psnr_db"] = (
        math.inf if any(math.isinf(v) for v in psnrs) else sum(psnrs) / n
    )
    gen.train()
    return out


@dataclass
class TrainState:
    gen: Generator
    disc: PatchDiscriminator
    opt_g: torch.optim.Adam
    opt_d: torch.optim.Adam
    gen_cfg: GeneratorConfig
    disc_cfg: DiscriminatorConfig
    train_cfg: TrainConfig
    tag: str
    epoch: int = 0
    history: list[dict] = field(default_factory=list)


def _build_state(
    in_channels: int, gen_cfg: GeneratorConfig | None, train_cfg: TrainConfig, tag: str
) -> TrainState:
    torch.manual_seed(train_cfg.seed)
    if gen_cfg is None:
        gen_cfg = GeneratorConfig(in_channels=in_channels)
    elif gen_cfg.in_channels != in_channels:
        raise ArchMismatch(
            f"generator expects {gen_cfg.in_channels} channels, "
            f"data view {tag!r} has {in_channels}"
        )
    disc_cfg = DiscriminatorConfig(in_channels=in_channels + 1)
    gen = build_generator(gen_cfg)
    disc = build_discriminator(disc_cfg)
    betas = (0.5, 0.999)
    opt_g = torch.optim.Adam(gen.parameters(), lr=train_cfg.lr_g, betas=betas)
    opt_d = torch.optim.Adam(disc.parameters(), lr=train_cfg.lr_d, betas=betas)
    return TrainState(gen, disc, opt_g, opt_d, gen_cfg, disc_cfg, train_cfg, tag)


def save_checkpoint(state: TrainState, path) -> None:
    doc = {
        "generator": state.gen.state_dict(),
        "discriminator": state.disc.state_dict(),
        "opt_g": state.opt_g.state_dict(),
        "opt_d": state.opt_d.state_dict(),
        "gen_cfg": asdict(state.gen_cfg),
        "disc_cfg": asdict(state.disc_cfg),
        "train_cfg": asdict(state.train_cfg),
        "tag": state.tag,
        "epoch": state.epoch,
        "cfg_hash": _cfg_hash(state.gen_cfg, state.train_cfg, state.tag),
        "history": state.history,
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    torch.save(doc, tmp)
    os.replace(tmp, path)


def load_checkpoint(path) -> TrainState:
    doc = torch.load(path, weights_only=False)
    gen_cfg = GeneratorConfig(**doc["gen_cfg"])
    disc_cfg = DiscriminatorConfig(**doc["disc_cfg"])
    train_cfg = TrainConfig(**doc["train_cfg"])
    state = _build_state(gen_cfg.in_channels, gen_cfg, train_cfg, doc["tag"])
    state.gen.load_state_dict(doc["generator"])
    state.disc.load_state_dict(doc["discriminator"])
    state.opt_g.load_state_dict(doc["opt_g"])
    state.opt_d.load_state_dict(doc["opt_d"])
    state.epoch = doc["epoch"]
    state.history = doc["history"]
    return state


def _train_step(state: TrainState, x: torch.Tensor, y: torch.Tensor, alpha: float):
    cfg = state.train_cfg
    pred = state.gen(x)

    # Discriminator: real pair, generated pair, R1 on the real pair.
    y_r1 = y.detach().requires_grad_(True)
    d_real = state.disc(x, y_r1)
    penalty = r1_penalty(d_real.sum(dim=(1, 2, 3, 4)), y_r1)
    d_fake = state.disc(x, pred.detach())
    loss_d = discriminator_loss(d_real, d_fake, penalty, cfg.r1_gamma)
    state.opt_d.zero_grad(set_to_none=True)
    loss_d.backward()
    state.opt_d.step()

    # Generator: during warmup the discriminator is not even evaluated.
    d_fake_for_g = state.disc(x, pred) if alpha != 0.0 else None
    loss_g = generator_loss(d_fake_for_g, pred, y, alpha, cfg.lambda_l1)
    state.opt_g.zero_grad(set_to_none=True)
    loss_g.backward()
    state.opt_g.step()

    lg, ld = loss_g.item(), loss_d.item()
    if not (math.isfinite(lg) and math.isfinite(ld)):
        raise DivergenceDetected(f"non-finite losses at epoch {state.epoch}: G={lg} D={ld}")
    mae = (pred.detach() - y).abs().mean().item()
    return lg, ld, mae


def _run_epochs(
    state: TrainState,
    train_split: SplitTensors,
    eval_split: SplitTensors,
    eval_name: str,
    epochs: int,
    out_dir,
    step_hook=None,
) -> TrainState:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = state.train_cfg
    metrics_path = out_dir / METRICS_NAME
    for _ in range(epochs):
        alpha = adv_weight_schedule(state.epoch, cfg)
        losses_g, losses_d = [], []
        for idx in _batch_order(len(train_split), cfg.batch, cfg.seed, state.epoch):
            lg, ld, mae = _train_step(state, train_split.x[idx], train_split.y[idx], alpha)
            losses_g.append(lg)
            losses_d.append(ld)
            if step_hook is not None:
                step_hook(mae)
        scores = evaluate(state.gen, eval_split)
        entry = {
            "epoch": state.epoch,
            "alpha_adv": alpha,
            "loss_g": sum(losses_g) / len(losses_g),
            "loss_d": sum(losses_d) / len(losses_d),
            "eval_split": eval_name,
            **{
                k: ("inf" if isinstance(v, float) and math.isinf(v) else v)
                for k, v in scores.items()
            },
        }
        state.history.append(entry)
        with open(metrics_path, "a") as f:
            f.write(json.dumps(entry) + "\n")
        state.epoch += 1
        save_checkpoint(state, out_dir / CHECKPOINT_NAME)
    return state


def _pick_eval_split(dataset_dir, tag: str) -> tuple[SplitTensors, str]:
    # Prefer val; tiny fixture datasets may put everything in train.
    val = load_split(dataset_dir, tag, "val")
    if len(val) > 0:
        return val, "val"
    return load_split(dataset_dir, tag, "train"), "train"


def train(
    dataset_dir,
    out_dir,
    tag: str = "sparse_and_tx",
    train_cfg: TrainConfig = TrainConfig(),
    gen_cfg: GeneratorConfig | None = None,
    step_hook=None,
) -> TrainState:
    """Train from scratch on a dataset directory; returns the final state."""
    train_split = load_split(dataset_dir, tag, "train")
    if len(train_split) == 0:
        raise InvalidConfig(f"dataset {dataset_dir} has an empty train split")
    eval_split, eval_name = _pick_eval_split(dataset_dir, tag)
    state = _build_state(train_split.in_channels, gen_cfg, train_cfg, tag)
    return _run_epochs(
        state, train_split, eval_split, eval_name, train_cfg.epochs, out_dir, step_hook
    )


def finetune(
    checkpoint_path,
    dataset_dir,
    out_dir,
    epochs: int = 50,
    seed: int | None = None,
) -> tuple[TrainState, dict]:
    """Continue a checkpointed run on a new dataset.

    The epoch counter (and with it the adversarial schedule) carries on from
    the checkpoint. Returns the final state plus a report with the frozen
    model's evaluation metrics ("pre") and the fine-tuned ones ("post").
    """
    if epochs < 0:
        raise InvalidConfig(f"epochs must be >= 0, got {epochs}")
    state = load_checkpoint(checkpoint_path)
    if seed is not None:
        state.train_cfg = TrainConfig(**{**asdict(state.train_cfg), "seed": seed})
    tag = state.tag
    train_split = load_split(dataset_dir, tag, "train")
    if len(train_split) == 0:
        raise InvalidConfig(f"dataset {dataset_dir} has an empty train split")
    if train_split.in_channels != state.gen_cfg.in_channels:
        raise ArchMismatch(
            f"checkpoint was trained on {state.gen_cfg.in_channels} channels, "
            f"dataset view {tag!r} has {train_split.in_channels}"
        )
    eval_split, eval_name = _pick_eval_split(dataset_dir, tag)
    pre = evaluate(state.gen, eval_split)
    if epochs > 0:
        state = _run_epochs(
            state, train_split, eval_split, eval_name, epochs, out_dir
        )
    else:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        save_checkpoint(state, Path(out_dir) / CHECKPOINT_NAME)
    post = evaluate(state.gen, eval_split)
    report = {"pre": pre, "post": post, "eval_split": eval_name, "epochs": epochs}
    with open(Path(out_dir) / "finetune_report.json", "w") as f:
        json.dump(
            {
                k: (
                    {kk: ("inf" if isinstance(vv, float) and math.isinf(vv) else vv)
                     for kk, vv in v.items()}
                    if isinstance(v, dict) else v
                )
                for k, v in report.items()
            },
            f, indent=2,
        )
        f.write("\n")
    return state, report
