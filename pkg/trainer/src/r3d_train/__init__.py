"""Desk-scale conditional-GAN training on R3DM radio-map datasets."""

from .data import CONFIG_TAGS, SplitTensors, load_split
from .errors import (
    ArchMismatch,
    DataFormatError,
    DivergenceDetected,
    InvalidConfig,
    NonFiniteGradient,
    ShapeError,
    TrainerError,
)
from .losses import adv_weight_schedule, discriminator_loss, generator_loss, r1_penalty
from .models import (
    DiscriminatorConfig,
    Generator,
    GeneratorConfig,
    PatchDiscriminator,
    SelfAttention3d,
    build_discriminator,
    build_generator,
)
from .train import TrainConfig, evaluate, finetune, load_checkpoint, save_checkpoint, train

__all__ = [
    "ArchMismatch",
    "CONFIG_TAGS",
    "DataFormatError",
    "DiscriminatorConfig",
    "DivergenceDetected",
    "Generator",
    "GeneratorConfig",
    "InvalidConfig",
    "NonFiniteGradient",
    "PatchDiscriminator",
    "SelfAttention3d",
    "ShapeError",
    "SplitTensors",
    "TrainConfig",
    "TrainerError",
    "adv_weight_schedule",
    "build_discriminator",
    "build_generator",
    "discriminator_loss",
    "evaluate",
    "finetune",
    "generator_loss",
    "load_checkpoint",
    "load_split",
    "r1_penalty",
    "save_checkpoint",
    "train",
]

__version__ = "0.1.0"
