"""End-to-end acceptance checks for the trainer.

Each test records one PASS/FAIL line (echoed in the pytest terminal
summary by conftest) and then asserts it.
"""

import time

import torch

from conftest import ACCEPTANCE_LINES

from r3d_train.losses import adv_weight_schedule, discriminator_loss, generator_loss
from r3d_train.models import Generator, GeneratorConfig
from r3d_train.train import TrainConfig, finetune, train


def _report(name: str, ok: bool, detail: str = ""):
    tail = f" ({detail})" if detail else ""
    ACCEPTANCE_LINES.append(f"{name}: {'PASS' if ok else 'FAIL'}{tail}")
    assert ok, f"{name}{tail}"


def test_generator_shape_suite():
    cfg = GeneratorConfig(in_channels=4)
    shapes_ok = True
    param_shapes = {}
    for h in (4, 8, 20):
        torch.manual_seed(0)
        gen = Generator(cfg)
        x = torch.randn(2, 4, 16, 16, h)
        with torch.no_grad():
            y = gen(x)
        shapes_ok = shapes_ok and y.shape == (2, 1, 16, 16, h)
        param_shapes[h] = {k: tuple(v.shape) for k, v in gen.state_dict().items()}
    identical = param_shapes[4] == param_shapes[8] == param_shapes[20]
    _report("shape-suite", bool(shapes_ok and identical),
            f"H in (4, 8, 20), {len(param_shapes[4])} tensors, shapes height-independent")


def test_adversarial_weight_schedule():
    cfg = TrainConfig()  # warmup 15, ramp 10, max 0.1
    got = tuple(adv_weight_schedule(e, cfg) for e in (10, 20, 25))
    ok = got == (0.0, 0.05, 0.1)
    _report("schedule", ok, f"alpha at epochs (10, 20, 25) = {got}")


def _fd_grad(fn, x: torch.Tensor, eps: float = 1e-6) -> torch.Tensor:
    """Central differences of a scalar function wrt every element of x."""
    g = torch.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + eps
        hi = fn().item()
        flat[i] = orig - eps
        lo = fn().item()
        flat[i] = orig
        gf[i] = (hi - lo) / (2 * eps)
    return g


def _rel_err(a: torch.Tensor, b: torch.Tensor) -> float:
    denom = max(a.abs().max().item(), b.abs().max().item(), 1e-12)
    return (a - b).abs().max().item() / denom


def test_loss_gradients_match_finite_differences():
    torch.manual_seed(3)
    pred = (torch.rand(1, 1, 2, 2, 1, dtype=torch.float64) + 0.5).requires_grad_()
    label = torch.rand(1, 1, 2, 2, 1, dtype=torch.float64) - 0.5
    d_fake = torch.randn(1, 1, 2, 2, 1, dtype=torch.float64).requires_grad_()
    loss = generator_loss(d_fake, pred, label, alpha=0.1, lambda_l1=100.0)
    g_pred, g_dfake = torch.autograd.grad(loss, [pred, d_fake])
    with torch.no_grad():
        fn = lambda: generator_loss(d_fake, pred, label, alpha=0.1, lambda_l1=100.0)
        errs = [_rel_err(g_pred, _fd_grad(fn, pred)),
                _rel_err(g_dfake, _fd_grad(fn, d_fake))]

    d_real = torch.randn(1, 1, 2, 2, 1, dtype=torch.float64).requires_grad_()
    d_fake2 = torch.randn(1, 1, 2, 2, 1, dtype=torch.float64).requires_grad_()
    pen = torch.tensor(0.37, dtype=torch.float64, requires_grad=True)
    loss = discriminator_loss(d_real, d_fake2, pen, r1_gamma=10.0)
    g_real, g_fake2, g_pen = torch.autograd.grad(loss, [d_real, d_fake2, pen])
    with torch.no_grad():
        fn = lambda: discriminator_loss(d_real, d_fake2, pen, r1_gamma=10.0)
        errs += [_rel_err(g_real, _fd_grad(fn, d_real)),
                 _rel_err(g_fake2, _fd_grad(fn, d_fake2)),
                 _rel_err(g_pen.reshape(()), _fd_grad(fn, pen.reshape(1)).reshape(()))]

    worst = max(errs)
    _report("gradient-checks", worst < 1e-4,
            f"both losses, max rel err {worst:.2e}")


def test_learning_signal(dataset_single, dataset_ten, tmp_path):
    t0 = time.monotonic()

    # Single-sample overfit: schedule pinned to alpha = 0 so every step is a
    # pure regression update. A deeper generator memorizes one map faster.
    over_maes = []
    over_cfg = TrainConfig(epochs=500, warmup_epochs=499, ramp_epochs=1, batch=1, seed=1)
    gen_cfg = GeneratorConfig(in_channels=4, base_width=24, depth=3)
    train(dataset_single, tmp_path / "overfit", train_cfg=over_cfg,
          gen_cfg=gen_cfg, step_hook=over_maes.append)
    first_under = next((i + 1 for i, m in enumerate(over_maes) if m < 0.01), None)

    # Ten samples, two batches per epoch, default adversarial schedule.
    desk_maes = []
    desk_cfg = TrainConfig(epochs=100, batch=8, seed=0)
    train(dataset_ten, tmp_path / "desk", train_cfg=desk_cfg,
          step_hook=desk_maes.append)
    head = sum(desk_maes[:10]) / 10
    tail = sum(desk_maes[-10:]) / 10

    elapsed = time.monotonic() - t0
    ok = (len(over_maes) == 500 and first_under is not None
          and len(desk_maes) == 200 and tail <= 0.5 * head
          and elapsed < 900.0)
    _report("learning-signal", bool(ok),
            f"overfit MAE < 0.01 at step {first_under}; "
            f"200-step MAE {head:.3f} -> {tail:.3f}; {elapsed:.0f} s total")


def test_finetune_transfer(dataset_a, dataset_b, tmp_path):
    # Five independent init seeds: pre-train on set A, then ten epochs on the
    # shifted set B, comparing frozen vs fine-tuned MAE on B's val split.
    wins = 0
    details = []
    for seed in range(5):
        cfg = TrainConfig(epochs=15, warmup_epochs=10, ramp_epochs=5, batch=4, seed=seed)
        train(dataset_a, tmp_path / f"pre{seed}", train_cfg=cfg)
        _, report = finetune(
            tmp_path / f"pre{seed}" / "checkpoint.pt", dataset_b,
            tmp_path / f"ft{seed}", epochs=10, seed=seed,
        )
        frozen, tuned = report["pre"]["mae"], report["post"]["mae"]
        wins += tuned < frozen
        details.append(f"{frozen:.3f}->{tuned:.3f}")
    _report("finetune-transfer", wins >= 4,
            f"{wins}/5 seeds improved: " + ", ".join(details))
