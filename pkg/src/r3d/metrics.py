"""Volume comparison metrics: RMSE, NMSE, PSNR, windowed SSIM.

SSIM slides a cubic window (stride 1, valid positions only, uniform weights,
population variance) and averages the per-window scores. Window sums come
from zero-padded cumulative-sum volumes, so cost is linear in voxels and
independent of window size; a window larger than an axis is clipped to that
axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimsMismatch,
    DomainMismatch,
    InvalidParams,
    VolumeTooSmall,
    ZeroEnergyTruth,
)
from .synthesis import RadioMap3D


@dataclass(frozen=True)
class SsimConfig:
    window: int = 7
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise InvalidParams(f"window must be odd and >= 3, got {self.window}")
        if not (self.k1 > 0 and self.k2 > 0 and self.data_range > 0):
            raise InvalidParams("k1, k2 and data_range must be positive")


def _check_pair(pred: RadioMap3D, truth: RadioMap3D):
    if pred.dims != truth.dims:
        raise DimsMismatch(f"pred grid {pred.dims.shape} != truth grid {truth.dims.shape}")
    if pred.domain != truth.domain:
        raise DomainMismatch(f"domains differ: {pred.domain!r} vs {truth.domain!r}")


def rmse(pred: RadioMap3D, truth: RadioMap3D) -> float:
    _check_pair(pred, truth)
    diff = pred.data - truth.data
    return float(np.sqrt(np.mean(diff * diff)))


def nmse(pred: RadioMap3D, truth: RadioMap3D) -> float:
    """Squared error normalized by the truth's energy."""
    _check_pair(pred, truth)
    energy = float(np.sum(truth.data * truth.data))
    if energy == 0.0:
        raise ZeroEnergyTruth("truth volume has zero energy")
    diff = pred.data - truth.data
    return float(np.sum(diff * diff) / energy)


def psnr(pred: RadioMap3D, truth: RadioMap3D, data_range: float = 1.0) -> float:
    """10*log10(R^2 / MSE); +inf for identical volumes."""
    _check_pair(pred, truth)
    if not (data_range > 0):
        raise InvalidParams(f"data_range must be positive, got {data_range}")
    diff = pred.data - truth.data
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return float(10.0 * np.log10(data_range * data_range / mse))


def _window_sums(data: np.ndarray, win: tuple[int, int, int]) -> np.ndarray:
    """Sum of every valid win-shaped window, via zero-padded cumsums."""
    w, d, h = data.shape
    p = np.zeros((w + 1, d + 1, h + 1), dtype=np.float64)
    p[1:, 1:, 1:] = data.cumsum(0).cumsum(1).cumsum(2)
    wx, wy, wz = win
    return (
        p[wx:, wy:, wz:]
        - p[:-wx, wy:, wz:]
        - p[wx:, :-wy, wz:]
        - p[wx:, wy:, :-wz]
        + p[:-wx, :-wy, wz:]
        + p[:-wx, wy:, :-wz]
        + p[wx:, :-wy, :-wz]
        - p[:-wx, :-wy, :-wz]
    )


def ssim(pred: RadioMap3D, truth: RadioMap3D, cfg: SsimConfig = SsimConfig()) -> float:
    """Mean structural similarity over all valid window positions.

    Equals 1 only for identical volumes. Volumes must be at least 3 voxels
    on every axis.
    """
    _check_pair(pred, truth)
    shape = pred.dims.shape
    if min(shape) < 3:
        raise VolumeTooSmall(f"every axis must be >= 3 voxels, got {shape}")
    win = tuple(min(cfg.window, s) for s in shape)
    n = win[0] * win[1] * win[2]

    x = pred.data.astype(np.float64, copy=False)
    y = truth.data.astype(np.float64, copy=False)
    mu_x = _window_sums(x, win) / n
    mu_y = _window_sums(y, win) / n
    # Population second moments over each window.
    var_x = _window_sums(x * x, win) / n - mu_x * mu_x
    var_y = _window_sums(y * y, win) / n - mu_y * mu_y
    cov = _window_sums(x * y, win) / n - mu_x * mu_y

    c1 = (cfg.k1 * cfg.data_range) ** 2
    c2 = (cfg.k2 * cfg.data_range) ** 2
    score = ((2.0 * (mu_x * mu_y) + c1) * (2.0 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )
    return float(score.mean())
