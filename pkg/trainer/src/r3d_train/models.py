"""3D U-Net generator and patch discriminator.

The generator downsamples x and y by 2 per stage and never reduces z, so the
learned parameter set is independent of the input height: the same weights
run on volumes of any z extent. Every conv block is LeakyReLU(GN(Conv3D(x))).
The bottleneck carries a self-attention module fused residually with a
learnable scale that starts at zero, making the block an exact identity at
initialization.

The discriminator scores overlapping patches (receptive field 16 x 16 x 4
voxels with the default three layers) rather than whole volumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .errors import InvalidConfig, ShapeError

_SLOPE = 0.2  # LeakyReLU negative slope, shared by every block
_GN_GROUPS = 8


@dataclass(frozen=True)
class GeneratorConfig:
    in_channels: int
    base_width: int = 16
    depth: int = 2
    attention_gamma_init: float = 0.0

    def __post_init__(self):
        if self.in_channels < 1:
            raise InvalidConfig(f"in_channels must be >= 1, got {self.in_channels}")
        if self.base_width < _GN_GROUPS or self.base_width % _GN_GROUPS:
            raise InvalidConfig(
                f"base_width must be a positive multiple of {_GN_GROUPS}, "
                f"got {self.base_width}"
            )
        if self.depth < 1:
            raise InvalidConfig(f"depth must be >= 1, got {self.depth}")


@dataclass(frozen=True)
class DiscriminatorConfig:
    in_channels: int  # condition channels + 1 label channel
    base_width: int = 16
    n_layers: int = 3  # 3 gives a 16 x 16 x 4 receptive field

    def __post_init__(self):
        if self.in_channels < 1:
            raise InvalidConfig(f"in_channels must be >= 1, got {self.in_channels}")
        if self.base_width < _GN_GROUPS or self.base_width % _GN_GROUPS:
            raise InvalidConfig(
                f"base_width must be a positive multiple of {_GN_GROUPS}, "
                f"got {self.base_width}"
            )
        if self.n_layers < 2:
            raise InvalidConfig(f"n_layers must be >= 2, got {self.n_layers}")


def _block(conv: nn.Module, channels: int) -> nn.Sequential:
    return nn.Sequential(
        conv,
        nn.GroupNorm(_GN_GROUPS, channels),
        nn.LeakyReLU(_SLOPE, inplace=True),
    )


def _down(c_in: int, c_out: int) -> nn.Sequential:
    # kernel 4/stride 2 in x,y halves them; kernel 3/stride 1 keeps z intact.
    return _block(
        nn.Conv3d(c_in, c_out, kernel_size=(4, 4, 3), stride=(2, 2, 1), padding=(1, 1, 1)),
        c_out,
    )


def _up(c_in: int, c_out: int) -> nn.Sequential:
    return _block(
        nn.ConvTranspose3d(
            c_in, c_out, kernel_size=(4, 4, 3), stride=(2, 2, 1), padding=(1, 1, 1)
        ),
        c_out,
    )


def _fuse(c_in: int, c_out: int) -> nn.Sequential:
    return _block(nn.Conv3d(c_in, c_out, kernel_size=3, padding=1), c_out)


class SelfAttention3d(nn.Module):
    """Dot-product self-attention over all voxel positions of a feature map.

    Projections are pointwise convs; the attention matrix is row-stochastic
    (softmax over keys). Output is gamma * attended + input; gamma starts at
    ``gamma_init`` (zero by default, i.e. identity at initialization).
    """

    def __init__(self, channels: int, gamma_init: float = 0.0):
        super().__init__()
        inner = max(channels // 8, 1)
        self.query = nn.Conv3d(channels, inner, kernel_size=1)
        self.key = nn.Conv3d(channels, inner, kernel_size=1)
        self.value = nn.Conv3d(channels, channels, kernel_size=1)
        self.gamma = nn.Parameter(torch.full((), float(gamma_init)))

    def attention_matrix(self, x: torch.Tensor) -> torch.Tensor:
        """(B, N, N) row-stochastic weights for N = W*D*H voxel positions."""
        b, _, w, d, h = x.shape
        n = w * d * h
        q = self.query(x).reshape(b, -1, n)
        k = self.key(x).reshape(b, -1, n)
        return torch.softmax(q.transpose(1, 2) @ k, dim=-1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c, w, d, h = x.shape
        attn = self.attention_matrix(x)
        v = self.value(x).reshape(b, c, -1)
        out = (v @ attn.transpose(1, 2)).reshape(b, c, w, d, h)
        return self.gamma * out + x


class Generator(nn.Module):
    """Encoder/decoder U-Net over (B, C, W, D, H) volumes, 1 output channel."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        widths = [cfg.base_width * (1 << i) for i in range(cfg.depth)]
        self.encoder = nn.ModuleList()
        c = cfg.in_channels
        for w in widths:
            self.encoder.append(_down(c, w))
            c = w
        self.attention = SelfAttention3d(widths[-1], cfg.attention_gamma_init)
        self.decoder = nn.ModuleList()
        self.fusers = nn.ModuleList()
        for i in reversed(range(1, cfg.depth)):
            self.decoder.append(_up(widths[i], widths[i - 1]))
            self.fusers.append(_fuse(2 * widths[i - 1], widths[i - 1]))
        self.final_up = _up(widths[0], widths[0])
        self.head = nn.Conv3d(widths[0], 1, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 5:
            raise ShapeError(f"expected (B, C, W, D, H), got {tuple(x.shape)}")
        _, c, w, d, _ = x.shape
        if c != self.cfg.in_channels:
            raise ShapeError(f"expected {self.cfg.in_channels} channels, got {c}")
        step = 1 << self.cfg.depth
        if w % step or d % step:
            raise ShapeError(
                f"x,y extents must be divisible by 2^depth = {step}, got {w} x {d}"
            )
        skips = []
        for stage in self.encoder:
            x = stage(x)
            skips.append(x)
        x = self.attention(x)
        for stage, fuse, skip in zip(self.decoder, self.fusers, reversed(skips[:-1])):
            x = stage(x)
            x = fuse(torch.cat([x, skip], dim=1))
        x = self.final_up(x)
        return self.head(x)


class PatchDiscriminator(nn.Module):
    """Conv stack mapping (B, C, W, D, H) to a grid of patch scores.

    x,y shrink by stride-2 stages; z shrinks by 1 per layer (no z padding),
    so inputs need z >= n_layers + 1.
    """

    def __init__(self, cfg: DiscriminatorConfig):
        super().__init__()
        self.cfg = cfg
        layers: list[nn.Module] = [
            nn.Conv3d(cfg.in_channels, cfg.base_width,
                      kernel_size=(4, 4, 2), stride=(2, 2, 1), padding=(1, 1, 0)),
            nn.LeakyReLU(_SLOPE, inplace=True),
        ]
        c = cfg.base_width
        for _ in range(cfg.n_layers - 2):
            layers.append(_block(
                nn.Conv3d(c, 2 * c, kernel_size=(3, 3, 2),
                          stride=(2, 2, 1), padding=(1, 1, 0)),
                2 * c,
            ))
            c *= 2
        layers.append(nn.Conv3d(c, 1, kernel_size=(3, 3, 2), stride=1, padding=(1, 1, 0)))
        self.net = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor, p: torch.Tensor) -> torch.Tensor:
        """Score condition x paired with label-or-prediction p."""
        if x.ndim != 5 or p.ndim != 5:
            raise ShapeError("discriminator inputs must be (B, C, W, D, H)")
        if x.shape[0] != p.shape[0] or x.shape[2:] != p.shape[2:]:
            raise ShapeError(
                f"condition {tuple(x.shape)} and sample {tuple(p.shape)} disagree"
            )
        if x.shape[1] + p.shape[1] != self.cfg.in_channels:
            raise ShapeError(
                f"expected {self.cfg.in_channels} stacked channels, "
                f"got {x.shape[1]} + {p.shape[1]}"
            )
        if x.shape[4] < self.cfg.n_layers + 1:
            raise ShapeError(
                f"z extent {x.shape[4]} too small for {self.cfg.n_layers} layers"
            )
        return self.net(torch.cat([x, p], dim=1))


def build_generator(cfg: GeneratorConfig) -> Generator:
    return Generator(cfg)


def build_discriminator(cfg: DiscriminatorConfig) -> PatchDiscriminator:
    return PatchDiscriminator(cfg)
