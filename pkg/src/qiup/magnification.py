"""Image magnification: small-angle prediction versus simulated measurement.

The prediction is M = (f_0 / f_I) (lambda_S / lambda_I). The measurement
renders a difference image of two absorbing dots, locates their images by
windowed centroids, and divides the image separation by the object
separation. Exact trigonometry in the renderer makes the measured value
drift from the prediction quadratically in the field angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Camera, OpticalConfig
from .engine import PhaseCalibration, calibrate, difference_image
from .errors import DotsUnresolved
from .optics import ObjectMap, idler_angle_for_signal

WINDOW_RADIUS_PX = 3.0


@dataclass(frozen=True)
class MagnificationReport:
    M_theory: float
    M_measured: float
    relative_error: float
    max_angle_used: float
    # cosine between image and object displacement; +1 means not inverted
    orientation: float = 1.0

    def as_dict(self) -> dict:
        return {
            "M_theory": self.M_theory,
            "M_measured": self.M_measured,
            "relative_error": self.relative_error,
            "max_angle_used": self.max_angle_used,
            "orientation": self.orientation,
        }


@dataclass(frozen=True, eq=False)
class DotTarget:
    """Object map holding two absorbing dots plus their true centres."""

    obj: ObjectMap
    points: tuple[tuple[float, float], tuple[float, float]]


def magnification_theory(cfg: OpticalConfig) -> float:
    return (cfg.f_0 / cfg.f_I) * (cfg.lambda_S / cfg.lambda_I)


def angle_relation_residual(theta_S: float, cfg: OpticalConfig) -> float:
    """Relative failure of omega_S theta_S = omega_I theta_I under the exact sine relation."""
    if theta_S == 0:
        return 0.0
    theta_I = idler_angle_for_signal(theta_S, cfg)
    lhs = cfg.omega_S * theta_S
    return abs(lhs - cfg.omega_I * theta_I) / abs(lhs)


def two_dot_object(
    cfg: OpticalConfig,
    camera: Camera,
    *,
    dot: tuple[float, float] | None = None,
    fraction: float = 0.8,
    sigma_px: float = 0.75,
    oversample: int = 8,
) -> DotTarget:
    """Reference dot on axis plus a second dot, both Gaussian absorbers opaque at the centre.

    The second dot defaults to ``fraction`` of the camera half-width along
    x, mapped back through the nominal magnification. ``sigma_px`` is the
    dot width in camera pixels; the object is sampled ``oversample`` times
    finer than that width. Only a strip around the two dots is sampled,
    the rest of the plane is transparent.
    """
    M = magnification_theory(cfg)
    if dot is None:
        dot = (fraction * camera.pitch * (camera.nx - 1) / 2 / M, 0.0)
    sigma = sigma_px * camera.pitch / M
    h = sigma / oversample
    pad = 6 * sigma
    x_lo, x_hi = min(0.0, dot[0]) - pad, max(0.0, dot[0]) + pad
    y_lo, y_hi = min(0.0, dot[1]) - pad, max(0.0, dot[1]) + pad
    nx = int(math.ceil((x_hi - x_lo) / h)) + 1
    ny = int(math.ceil((y_hi - y_lo) / h)) + 1
    cx, cy = (x_lo + x_hi) / 2, (y_lo + y_hi) / 2
    xs = cx + (np.arange(nx) - (nx - 1) / 2) * h
    ys = cy + (np.arange(ny) - (ny - 1) / 2) * h
    X, Y = np.meshgrid(xs, ys)
    absorb = np.zeros_like(X)
    for px, py in ((0.0, 0.0), dot):
        absorb += np.exp(-((X - px) ** 2 + (Y - py) ** 2) / (2 * sigma * sigma))
    T = np.clip(1.0 - absorb, 0.0, 1.0)
    return DotTarget(ObjectMap(T, h, center=(cx, cy)), ((0.0, 0.0), (float(dot[0]), float(dot[1]))))


def windowed_centroid(weights, X, Y, start, radius, max_iter: int = 50) -> tuple[float, float]:
    """Weighted centroid inside a disc, re-centred on its own result until it stops moving."""
    cx, cy = start
    for _ in range(max_iter):
        inside = (X - cx) ** 2 + (Y - cy) ** 2 <= radius * radius
        w = weights[inside]
        total = w.sum()
        if not total > 0:
            raise DotsUnresolved("empty centroid window")
        nx = float((w * X[inside]).sum() / total)
        ny = float((w * Y[inside]).sum() / total)
        if abs(nx - cx) <= 1e-13 * radius and abs(ny - cy) <= 1e-13 * radius:
            return nx, ny
        cx, cy = nx, ny
    return cx, cy


def dip_centroids(dip: np.ndarray, camera: Camera, count: int = 2, radius_px: float = WINDOW_RADIUS_PX):
    """Centroids of the ``count`` deepest dips, deepest first."""
    X, Y = camera.positions()
    radius = radius_px * camera.pitch
    work = np.array(dip, dtype=float)
    starts, found = [], []
    for _ in range(count):
        idx = np.unravel_index(int(np.argmax(work)), work.shape)
        start = (float(X[idx]), float(Y[idx]))
        for other in starts:
            if math.hypot(start[0] - other[0], start[1] - other[1]) < 2 * radius:
                raise DotsUnresolved("centroid windows overlap")
        starts.append(start)
        found.append(windowed_centroid(dip, X, Y, start, radius))
        work[(X - start[0]) ** 2 + (Y - start[1]) ** 2 <= radius * radius] = -np.inf
    return found


def magnification_measured(
    target: DotTarget,
    cfg: OpticalConfig,
    camera: Camera,
    cal: PhaseCalibration | None = None,
) -> MagnificationReport:
    cal = calibrate(cfg) if cal is None else cal
    diff = difference_image(target.obj, cfg, cal, camera)
    empty = difference_image(None, cfg, cal, camera)
    c1, c2 = dip_centroids(empty - diff, camera)
    p1, p2 = target.points
    # the image nearer the axis belongs to the object point nearer the axis
    if (math.hypot(*c1) > math.hypot(*c2)) != (math.hypot(*p1) > math.hypot(*p2)):
        c1, c2 = c2, c1
    dc = (c1[0] - c2[0], c1[1] - c2[1])
    dp = (p1[0] - p2[0], p1[1] - p2[1])
    img_sep = math.hypot(*dc)
    obj_sep = math.hypot(*dp)
    M_meas = img_sep / obj_sep
    M_th = magnification_theory(cfg)
    x, y = camera.axes()
    max_angle = math.atan(max(abs(x).max(), abs(y).max()) / cfg.f_0)
    return MagnificationReport(
        M_theory=M_th,
        M_measured=M_meas,
        relative_error=(M_meas - M_th) / M_th,
        max_angle_used=max_angle,
        orientation=(dc[0] * dp[0] + dc[1] * dp[1]) / (img_sep * obj_sep),
    )


def convergence_study(
    cfg: OpticalConfig,
    half_angles=(math.radians(2.0), math.radians(0.2)),
    n: int = 1025,
    **dot_kw,
) -> list[MagnificationReport]:
    """Measured magnification for cameras with shrinking half-angles."""
    cal = calibrate(cfg)
    reports = []
    for angle in half_angles:
        camera = Camera.for_half_angle(n, angle, cfg.f_0)
        reports.append(magnification_measured(two_dot_object(cfg, camera, **dot_kw), cfg, camera, cal))
    return reports
