"""Log-distance target channel model.

Received power at voxel u from a source at q:

    rho(u, q) = a + b*log10(d3) + c*log10(d2) + e*p_base(u)

with d3 the 3-D distance, d2 its horizontal projection, and p_base the
per-floor base prediction at u. Splitting the distance term between d3 and d2
lets one coefficient pair absorb vertical-polarization loss: with
coefficients (0, k, -k, 0) the model reduces to k*log10(d3/d2), and the
analytic dipole gain is the k = -5 case (see polarization_gain_db).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, InvalidParams
from .grid import Point3
from .propagate2d import BaseMap3D


@dataclass(frozen=True)
class TargetCoefficients:
    """Coefficients (a, b, c, e) of the log-distance target model."""

    a: float
    b: float
    c: float
    e: float

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.e)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParams(f"non-finite coefficient in {vals}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.e], dtype=np.float64)

    @classmethod
    def from_array(cls, arr) -> "TargetCoefficients":
        a, b, c, e = (float(v) for v in arr)
        return cls(a, b, c, e)


def distances(u: Point3, q: Point3) -> tuple[float, float]:
    """(d2, d3): horizontal and full 3-D distance between two points."""
    dx = u.x - q.x
    dy = u.y - q.y
    dz = u.z - q.z
    d2 = math.hypot(dx, dy)
    return d2, math.hypot(dx, dy, dz)


def polarization_gain_db(d2: float, d3: float) -> float:
    """Vertical-dipole polarization gain, 5*(log10(d2) - log10(d3)).

    Always <= 0: the projection d2 never exceeds d3. Degenerate directly
    above/below the source (d2 = 0), where the dipole has a null.
    """
    if d2 <= 0.0:
        raise DegenerateGeometry(f"d2 must be positive, got {d2}")
    if d3 < d2:
        raise InvalidParams(f"d3 ({d3}) cannot be smaller than d2 ({d2})")
    return 5.0 * (math.log10(d2) - math.log10(d3))


def eval_target(u: Point3, q: Point3, phi: TargetCoefficients, base: BaseMap3D) -> float:
    """Model power in dB at point u for a source at q.

    u must lie inside the base map's grid; the base prediction is looked up
    at u's voxel.
    """
    d2, d3 = distances(u, q)
    if d2 <= 0.0:
        raise DegenerateGeometry(f"d2 = {d2}: point lies on the source's vertical axis")
    p_base = float(base.data[base.dims.voxel_of(u)])
    return phi.a + phi.b * math.log10(d3) + phi.c * math.log10(d2) + phi.e * p_base
