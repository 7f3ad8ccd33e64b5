"""Coefficient fitting and the coefficient-space sampler.

Measurements at known voxels are regressed onto the target model's design
rows [1, log10(d3), log10(d2), p_base] by least squares via SVD (orthogonal
decomposition; the normal equations are never formed). Fits from several
measurement campaigns aggregate into per-coefficient bounds, and new target
models are drawn uniformly and independently inside those bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel_model import TargetCoefficients
from .errors import (
    DegenerateGeometry,
    EmptyInput,
    InvalidParams,
    NonFiniteValue,
    SingularDesign,
    TooFewSamples,
)
from .grid import Point3
from .propagate2d import BaseMap3D

# Above this condition number the design is treated as numerically singular.
COND_LIMIT = 1e10


@dataclass
class MaskedMeasurements:
    """RSS readings at scattered points, all from one transmitter at ``tx``."""

    points: np.ndarray  # (N, 3) meters
    rss_db: np.ndarray  # (N,)
    tx: Point3

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.rss_db = np.asarray(self.rss_db, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise InvalidParams(f"points must be (N, 3), got {self.points.shape}")
        if self.rss_db.shape != (self.points.shape[0],):
            raise InvalidParams(
                f"rss_db shape {self.rss_db.shape} != ({self.points.shape[0]},)"
            )

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class FitResult:
    phi: TargetCoefficients
    residual_rmse_db: float


@dataclass
class CoefficientSpace:
    """Axis-aligned box over (a, b, c, e) plus the fits that produced it."""

    lo: np.ndarray  # (4,)
    hi: np.ndarray  # (4,)
    fitted: list[TargetCoefficients] = field(default_factory=list)

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.hi = np.asarray(self.hi, dtype=np.float64)
        if self.lo.shape != (4,) or self.hi.shape != (4,):
            raise InvalidParams("bounds must have shape (4,)")
        if not (np.isfinite(self.lo).all() and np.isfinite(self.hi).all()):
            raise InvalidParams("bounds must be finite")
        if (self.lo > self.hi).any():
            raise InvalidParams(f"lower bounds {self.lo} exceed upper {self.hi}")


def design_matrix(meas: MaskedMeasurements, base: BaseMap3D) -> np.ndarray:
    """Rows [1, log10(d3), log10(d2), p_base] for every measurement point."""
    delta = meas.points - np.array(meas.tx, dtype=np.float64)
    d2 = np.hypot(delta[:, 0], delta[:, 1])
    d3 = np.sqrt((delta * delta).sum(axis=1))
    if (d2 <= 0.0).any():
        raise DegenerateGeometry("a measurement point lies on the tx vertical axis")
    p_base = np.array(
        [base.data[base.dims.voxel_of(Point3(*p))] for p in meas.points],
        dtype=np.float64,
    )
    return np.column_stack([np.ones(len(meas)), np.log10(d3), np.log10(d2), p_base])


def fit_coefficients(meas: MaskedMeasurements, base: BaseMap3D) -> FitResult:
    """Least-squares fit of (a, b, c, e); reports the residual RMSE in dB."""
    if len(meas) < 4:
        raise TooFewSamples(f"need >= 4 measurements, got {len(meas)}")
    if not np.isfinite(meas.rss_db).all() or not np.isfinite(meas.points).all():
        raise NonFiniteValue("measurements contain non-finite values")
    a_mat = design_matrix(meas, base)
    sv = np.linalg.svd(a_mat, compute_uv=False)
    if sv[-1] == 0.0 or sv[0] / sv[-1] > COND_LIMIT:
        raise SingularDesign(
            f"design condition number {np.inf if sv[-1] == 0 else sv[0] / sv[-1]:.3g} "
            f"exceeds {COND_LIMIT:.0e}"
        )
    coef, _, _, _ = np.linalg.lstsq(a_mat, meas.rss_db, rcond=None)
    resid = a_mat @ coef - meas.rss_db
    rmse = float(np.sqrt(np.mean(resid * resid)))
    return FitResult(TargetCoefficients.from_array(coef), rmse)


def aggregate(fits: list[TargetCoefficients]) -> CoefficientSpace:
    """Per-coefficient min/max bounds over a set of fitted models."""
    if not fits:
        raise EmptyInput("no fits to aggregate")
    arr = np.stack([f.as_array() for f in fits])
    return CoefficientSpace(arr.min(axis=0), arr.max(axis=0), list(fits))


def oversample(space: CoefficientSpace, count: int, seed: int) -> list[TargetCoefficients]:
    """Draw ``count`` coefficient vectors uniformly inside the space's box.

    Coefficients are drawn independently; a degenerate axis (lo == hi) yields
    that constant. Deterministic per seed.
    """
    if count < 1:
        raise InvalidParams(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    draws = rng.uniform(space.lo, space.hi, size=(count, 4))
    return [TargetCoefficients.from_array(row) for row in draws]
