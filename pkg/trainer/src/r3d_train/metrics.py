"""Evaluation metrics: RMSE, NMSE, PSNR, windowed volumetric SSIM.

These must agree bit-for-bit with the dataset toolkit's implementations on
shared vectors, so every formula keeps the identical operation order:
float64 arithmetic, window sums via zero-padded cumulative volumes, uniform
weights, population variance, valid window positions only, per-axis window
clipping. Do not "simplify" an expression here without re-establishing
bitwise agreement.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidConfig, ShapeError


def _check_pair(pred: np.ndarray, truth: np.ndarray):
    if pred.shape != truth.shape:
        raise ShapeError(f"pred shape {pred.shape} != truth shape {truth.shape}")
    if pred.ndim != 3:
        raise ShapeError(f"expected (W, D, H) volumes, got {pred.shape}")


def rmse(pred: np.ndarray, truth: np.ndarray) -> float:
    _check_pair(pred, truth)
    diff = pred - truth
    return float(np.sqrt(np.mean(diff * diff)))


def nmse(pred: np.ndarray, truth: np.ndarray) -> float:
    _check_pair(pred, truth)
    energy = float(np.sum(truth * truth))
    if energy == 0.0:
        raise ShapeError("truth volume has zero energy")
    diff = pred - truth
    return float(np.sum(diff * diff) / energy)


def psnr(pred: np.ndarray, truth: np.ndarray, data_range: float = 1.0) -> float:
    _check_pair(pred, truth)
    if not (data_range > 0):
        raise InvalidConfig(f"data_range must be positive, got {data_range}")
    diff = pred - truth
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return float(10.0 * np.log10(data_range * data_range / mse))


def _window_sums(data: np.ndarray, win: tuple[int, int, int]) -> np.ndarray:
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


def ssim(
    pred: np.ndarray,
    truth: np.ndarray,
    window: int = 7,
    k1: float = 0.01,
    k2: float = 0.03,
    data_range: float = 1.0,
) -> float:
    _check_pair(pred, truth)
    if window < 3 or window % 2 == 0:
        raise InvalidConfig(f"window must be odd and >= 3, got {window}")
    if not (k1 > 0 and k2 > 0 and data_range > 0):
        raise InvalidConfig("k1, k2 and data_range must be positive")
    if min(pred.shape) < 3:
        raise ShapeError(f"every axis must be >= 3 voxels, got {pred.shape}")
    win = tuple(min(window, s) for s in pred.shape)
    n = win[0] * win[1] * win[2]

    x = pred.astype(np.float64, copy=False)
    y = truth.astype(np.float64, copy=False)
    mu_x = _window_sums(x, win) / n
    mu_y = _window_sums(y, win) / n
    var_x = _window_sums(x * x, win) / n - mu_x * mu_x
    var_y = _window_sums(y * y, win) / n - mu_y * mu_y
    cov = _window_sums(x * y, win) / n - mu_x * mu_y

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    score = ((2.0 * (mu_x * mu_y) + c1) * (2.0 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )
    return float(score.mean())
