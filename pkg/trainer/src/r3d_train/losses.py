"""Least-squares GAN losses, the R1 penalty, and the phased adversarial weight.

Generator:      L_G = alpha * 1/2 E[(D(X, P_gen) - 1)^2] + lambda * E[|P - P_gen|]
Discriminator:  L_D = 1/2 E[(D(X, P) - 1)^2] + 1/2 E[D(X, P_gen)^2]
                      + r1_gamma/2 * E[|grad_P D(X, P)|^2]

The adversarial weight alpha is 0 during warmup, ramps linearly to its
maximum, then stays there. While alpha is 0 the generator objective is pure
L1, so generator updates do not depend on the discriminator at all.
"""

from __future__ import annotations

import torch

from .errors import NonFiniteGradient, ShapeError


def adv_weight_schedule(epoch: int, cfg) -> float:
    """Adversarial weight for a 0-based epoch index."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    if epoch < cfg.warmup_epochs:
        return 0.0
    ramped = epoch - cfg.warmup_epochs
    if ramped < cfg.ramp_epochs:
        return cfg.alpha_adv_max * ramped / cfg.ramp_epochs
    return cfg.alpha_adv_max


def generator_loss(
    d_fake: torch.Tensor | None,
    pred: torch.Tensor,
    label: torch.Tensor,
    alpha: float,
    lambda_l1: float,
) -> torch.Tensor:
    """Weighted adversarial + voxel-wise L1 objective for the generator.

    ``d_fake`` is the discriminator's patch output on the generated sample;
    it may be None only while alpha == 0 (warmup), where the adversarial
    term vanishes and is skipped entirely.
    """
    if pred.shape != label.shape:
        raise ShapeError(f"pred shape {tuple(pred.shape)} != label {tuple(label.shape)}")
    l1 = (pred - label).abs().mean()
    if alpha == 0.0:
        return lambda_l1 * l1
    if d_fake is None:
        raise ShapeError("adversarial phase (alpha != 0) needs the discriminator output")
    adv = 0.5 * (d_fake - 1.0).pow(2).mean()
    return alpha * adv + lambda_l1 * l1


def discriminator_loss(
    d_real: torch.Tensor,
    d_fake: torch.Tensor,
    grad_penalty_sq_norm: torch.Tensor,
    r1_gamma: float,
) -> torch.Tensor:
    """LSGAN discriminator objective plus the gradient regularizer.

    ``grad_penalty_sq_norm`` is E[|grad_P D(X, P)|^2] on real inputs, as
    produced by :func:`r1_penalty`.
    """
    if d_real.shape != d_fake.shape:
        raise ShapeError(
            f"d_real shape {tuple(d_real.shape)} != d_fake {tuple(d_fake.shape)}"
        )
    if not torch.isfinite(grad_penalty_sq_norm).all():
        raise NonFiniteGradient("gradient penalty is not finite")
    real_term = 0.5 * (d_real - 1.0).pow(2).mean()
    fake_term = 0.5 * d_fake.pow(2).mean()
    return real_term + fake_term + 0.5 * r1_gamma * grad_penalty_sq_norm


def r1_penalty(d_out_per_sample: torch.Tensor, real_input: torch.Tensor) -> torch.Tensor:
    """E over the batch of |grad of D wrt the real label input|^2.

    ``d_out_per_sample`` must be a (B,) reduction of the patch outputs (the
    gradient of a patch map is taken through its sum). Kept differentiable so
    the penalty can train the discriminator.
    """
    (grad,) = torch.autograd.grad(
        d_out_per_sample.sum(), real_input, create_graph=True
    )
    if not torch.isfinite(grad).all():
        raise NonFiniteGradient("R1 gradient is not finite")
    return grad.pow(2).flatten(1).sum(dim=1).mean()
