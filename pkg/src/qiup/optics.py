"""Geometric optics of the camera lens and the idler 4-f arm.

Diffraction is neglected: a camera pixel sees exactly one signal plane
wave, and one point of the object acts as a beamsplitter on exactly one
idler plane wave. All trigonometry is exact; the small-angle forms are
kept in :mod:`qiup.magnification` as the comparison target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import OpticalConfig
from .errors import EvanescentMode, TotalInternalReflection, UnitarityViolation

UNITARITY_TOL = 1e-9

BOUNDARY_VALUES = {"transparent": 1.0 + 0.0j, "opaque": 0.0 + 0.0j}


def pixel_to_signal_angle(rho_S, cfg: OpticalConfig) -> tuple[float, float]:
    """Projected signal angles (arctan(x/f_0), arctan(y/f_0)) for a camera point."""
    x, y = rho_S
    return math.atan2(x, cfg.f_0), math.atan2(y, cfg.f_0)


def refract_out(theta_internal: float, n_medium: float, cfg: OpticalConfig) -> float:
    """Snell's law from a crystal of index ``n_medium`` into the ambient medium."""
    s = n_medium * math.sin(theta_internal) / cfg.n_0
    if abs(s) > 1.0:
        raise TotalInternalReflection(
            f"n*sin(theta) = {n_medium * math.sin(theta_internal):.6g} exceeds n_0 = {cfg.n_0}"
        )
    return math.asin(s)


def refract_in(theta_external: float, n_medium: float, cfg: OpticalConfig) -> float:
    return math.asin(cfg.n_0 * math.sin(theta_external) / n_medium)


def idler_angle_for_signal(theta_S: float, cfg: OpticalConfig) -> float:
    """External idler angle phase-matched to an external signal angle.

    Uses omega_S |sin theta_S| = omega_I |sin theta_I|, with the sign of
    ``theta_S`` carried through.
    """
    s = (cfg.omega_S / cfg.omega_I) * math.sin(theta_S)
    if abs(s) > 1.0:
        raise EvanescentMode(f"no propagating idler for theta_S = {theta_S!r} rad")
    return math.asin(s)


def object_points(X, Y, cfg: OpticalConfig) -> np.ndarray:
    """Vectorised camera-point -> object-point map.

    Returns an array of shape ``X.shape + (2,)``. The signal direction is
    the ray through the lens centre; its transverse wave vector is handed
    (sign-flipped) to the idler by phase matching and flipped back by the
    4-f mirror, so the object point keeps the camera point's sign.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    r = np.sqrt(X * X + Y * Y + cfg.f_0 * cfg.f_0)
    scale = cfg.omega_S / cfg.omega_I
    ux = scale * (X / r)
    uy = scale * (Y / r)
    uz2 = 1.0 - ux * ux - uy * uy
    if np.any(uz2 <= 0.0):
        raise EvanescentMode("camera field extends past the idler's propagating cone")
    uz = np.sqrt(uz2)
    return np.stack((cfg.f_I * ux / uz, cfg.f_I * uy / uz), axis=-1)


def object_point_for_pixel(rho_S, cfg: OpticalConfig) -> tuple[float, float]:
    """Object-plane point imaged onto the camera point ``rho_S``."""
    p = object_points(np.float64(rho_S[0]), np.float64(rho_S[1]), cfg)
    return float(p[0]), float(p[1])


@dataclass(frozen=True)
class ObjectSample:
    T: complex
    R_prime_mag: float


@dataclass(frozen=True, eq=False)
class ObjectMap:
    """Complex transmission of a thin object sampled on a regular grid.

    ``values[row, col]`` is the sample at
    ``(center[0] + (col - (width-1)/2) * pitch, center[1] + (row - (height-1)/2) * pitch)``.
    Outside the sampled rectangle the boundary policy applies, with arg T = 0.
    """

    values: np.ndarray
    pitch: float
    boundary_policy: str = "transparent"
    center: tuple[float, float] = (0.0, 0.0)
    _boundary: complex = field(init=False, repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        if values.ndim != 2 or values.size == 0:
            raise ValueError("object values must be a non-empty 2-D array")
        if not self.pitch > 0:
            raise ValueError("object pitch must be positive")
        if self.boundary_policy not in BOUNDARY_VALUES:
            raise ValueError(f"unknown boundary policy {self.boundary_policy!r}")
        worst = float(np.max(np.abs(values)))
        if not worst <= 1.0 + UNITARITY_TOL:
            raise UnitarityViolation(f"|T| reaches {worst:.12g} > 1")
        # snap round-off excursions (within tolerance) back onto the unit circle
        mag = np.abs(values)
        over = mag > 1.0
        if np.any(over):
            values[over] /= mag[over]
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "_boundary", BOUNDARY_VALUES[self.boundary_policy])

    @classmethod
    def uniform(cls, T: complex, shape=(2, 2), pitch: float = 1e-3, **kw) -> "ObjectMap":
        return cls(np.full(shape, T, dtype=complex), pitch, **kw)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def extent(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max) of the sample centres."""
        hx = (self.width - 1) / 2 * self.pitch
        hy = (self.height - 1) / 2 * self.pitch
        cx, cy = self.center
        return cx - hx, cx + hx, cy - hy, cy + hy

    def transmission(self, x, y) -> np.ndarray:
        """Bilinearly interpolated complex T at object-plane points (vectorised)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fx = (x - self.center[0]) / self.pitch + (self.width - 1) / 2
        fy = (y - self.center[1]) / self.pitch + (self.height - 1) / 2
        inside = (fx >= 0) & (fx <= self.width - 1) & (fy >= 0) & (fy <= self.height - 1)
        fx = np.where(inside, fx, 0.0)
        fy = np.where(inside, fy, 0.0)
        i0 = np.minimum(np.floor(fx).astype(np.intp), max(self.width - 2, 0))
        j0 = np.minimum(np.floor(fy).astype(np.intp), max(self.height - 2, 0))
        i1 = np.minimum(i0 + 1, self.width - 1)
        j1 = np.minimum(j0 + 1, self.height - 1)
        tx = fx - i0
        ty = fy - j0
        v = self.values
        top = v[j0, i0] * (1 - tx) + v[j0, i1] * tx
        bottom = v[j1, i0] * (1 - tx) + v[j1, i1] * tx
        out = top * (1 - ty) + bottom * ty
        return np.where(inside, out, self._boundary)


def reflection_magnitude(T) -> np.ndarray:
    """|R'| = sqrt(1 - |T|^2), the amplitude sent into the environment mode."""
    return np.sqrt(np.maximum(0.0, 1.0 - np.abs(T) ** 2))


def sample_object(obj: ObjectMap, rho) -> ObjectSample:
    T = complex(obj.transmission(rho[0], rho[1]))
    return ObjectSample(T=T, R_prime_mag=float(reflection_magnitude(T)))
