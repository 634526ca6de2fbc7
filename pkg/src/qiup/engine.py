"""Analytic counting-rate images and pump-phase calibration.

The rate at the pixel that receives signal mode k_S is

    |V1|^2 + |V2|^2 + 2 |V1| |V2| w |T(rho_O)| cos(D - arg T(rho_O) + phi_P)

where rho_O is the object point lit by the mirrored idler partner of k_S,
w the per-mode envelope weight and D collects the constant phases
(delta_S0 - phi_I0 + C0 + pump offset + tilt . q_S). Proportionality
constants are fixed so the background is exactly |V1|^2 + |V2|^2.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import Camera, OpticalConfig
from .errors import DegenerateFringe
from .modes import ModeEntry, ModeGrid, build_mode_grid

TWO_PI = 2 * math.pi

# fixed chunk size: results never depend on the worker count
CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class CameraImage:
    rates: np.ndarray
    pitch: float
    meta: dict = field(default_factory=dict)

    @property
    def height(self) -> int:
        return self.rates.shape[0]

    @property
    def width(self) -> int:
        return self.rates.shape[1]


@dataclass(frozen=True)
class PhaseCalibration:
    phi_PC: float
    phi_PD: float


def worker_count() -> int:
    raw = os.environ.get("IMAGER_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("IMAGER_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


@lru_cache(maxsize=16)
def cached_grid(cfg: OpticalConfig, camera: Camera) -> ModeGrid:
    return build_mode_grid(cfg, camera)


def constant_phase(cfg: OpticalConfig) -> float:
    return cfg.delta_S0 - cfg.phi_I0 + cfg.C0 + cfg.pump_phase_offset


def transmission_at(obj, rho_O: np.ndarray) -> np.ndarray:
    if obj is None:
        return np.ones(rho_O.shape[:-1], dtype=complex)
    return np.asarray(obj.transmission(rho_O[..., 0], rho_O[..., 1]), dtype=complex)


def mode_rates(q_S, rho_O, weight, phi_P: float, obj, cfg: OpticalConfig) -> np.ndarray:
    """Counting rates for a batch of modes given as arrays."""
    T = transmission_at(obj, rho_O)
    a1 = abs(cfg.V_P1)
    a2 = abs(cfg.V_P2)
    phase = constant_phase(cfg) + phi_P - np.angle(T)
    tx, ty = cfg.tilt
    if tx or ty:
        phase = phase + (tx * q_S[..., 0] + ty * q_S[..., 1])
    return a1 * a1 + a2 * a2 + 2.0 * a1 * a2 * weight * np.abs(T) * np.cos(phase)


def counting_rate(entry: ModeEntry, phi_P: float, obj, cfg: OpticalConfig) -> float:
    q = np.array([entry.signal.qx, entry.signal.qy])
    rho = np.array(entry.rho_O)
    return float(mode_rates(q, rho, entry.weight, phi_P, obj, cfg))


def grid_rates(grid: ModeGrid, phi_P: float, obj, cfg: OpticalConfig | None = None) -> np.ndarray:
    """Rates for every grid entry, evaluated in fixed-size chunks across worker threads."""
    cfg = grid.cfg if cfg is None else cfg
    n = len(grid)
    bounds = [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]
    out = np.empty(n)

    def work(span):
        a, b = span
        out[a:b] = mode_rates(grid.q_S[a:b], grid.rho_O[a:b], grid.weight[a:b], phi_P, obj, cfg)

    workers = min(worker_count(), len(bounds))
    if workers <= 1:
        for span in bounds:
            work(span)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, bounds))
    return out


def render_image(phi_P: float, obj, cfg: OpticalConfig, camera: Camera) -> CameraImage:
    grid = cached_grid(cfg, camera)
    rates = grid_rates(grid, phi_P, obj).reshape(camera.shape)
    return CameraImage(rates, camera.pitch, {"phi_P": float(phi_P), "config_hash": cfg.digest()})


def fit_cosine(phis, values) -> tuple[float, float, float]:
    """Least-squares fit of ``A + B cos(phi + phi0)``; returns (A, B, phi0) with B >= 0."""
    phis = np.asarray(phis, dtype=float)
    design = np.stack((np.ones_like(phis), np.cos(phis), np.sin(phis)), axis=1)
    (a, b, c), *_ = np.linalg.lstsq(design, np.asarray(values, dtype=float), rcond=None)
    return float(a), float(math.hypot(b, c)), float(math.atan2(-c, b))


def wrap_phase(phi: float) -> float:
    """Representative of ``phi`` in [0, 2pi)."""
    w = math.fmod(phi, TWO_PI)
    if w < 0:
        w += TWO_PI
    return 0.0 if w >= TWO_PI else w


def sweep(phi_count: int) -> np.ndarray:
    return np.arange(phi_count) * (TWO_PI / phi_count)


def calibrate(cfg: OpticalConfig, sweep_steps: int = 64, q_ref=(0.0, 0.0)) -> PhaseCalibration:
    """Pump phases of constructive and destructive no-object interference.

    Sweeps phi_P over [0, 2pi) at the reference mode (on-axis by default),
    fits a cosine to the sweep and returns its maximum and minimum.
    """
    if sweep_steps < 8:
        raise ValueError("sweep_steps must be at least 8")
    phis = sweep(sweep_steps)
    q = np.broadcast_to(np.asarray(q_ref, dtype=float), (sweep_steps, 2))
    rho = np.zeros((sweep_steps, 2))
    values = np.array([
        float(mode_rates(q[i], rho[i], 1.0, p, None, cfg)) for i, p in enumerate(phis)
    ])
    A, B, phi0 = fit_cosine(phis, values)
    if not B >= 1e-12 * A:
        raise DegenerateFringe(f"fringe amplitude {B:.3e} is negligible against mean {A:.3e}")
    coarse = phis[int(np.argmax(values))]
    phi_PC = wrap_phase(-phi0)
    # the fitted maximum must sit within one sweep step of the sampled one
    gap = abs(wrap_phase(phi_PC - coarse + math.pi) - math.pi)
    if gap > TWO_PI / sweep_steps + 1e-9:
        raise DegenerateFringe("sweep is not cosine-shaped")
    return PhaseCalibration(phi_PC, wrap_phase(phi_PC + math.pi))


def difference_image(obj, cfg: OpticalConfig, cal: PhaseCalibration, camera: Camera) -> np.ndarray:
    return render_image(cal.phi_PC, obj, cfg, camera).rates - render_image(cal.phi_PD, obj, cfg, camera).rates


def sum_image(obj, cfg: OpticalConfig, cal: PhaseCalibration, camera: Camera) -> np.ndarray:
    return render_image(cal.phi_PC, obj, cfg, camera).rates + render_image(cal.phi_PD, obj, cfg, camera).rates


def visibility(obj, cfg: OpticalConfig, camera: Camera, pixel: tuple[int, int], steps: int = 64) -> float:
    """Fringe contrast (max - min)/(max + min) of a pixel over a phi_P sweep.

    The extremes are taken from a cosine fit to the sweep, so the result
    does not depend on whether the sweep happens to hit the true maximum.
    """
    grid = cached_grid(cfg, camera)
    i = grid.index_of(*pixel)
    phis = sweep(steps)
    values = np.array([
        float(mode_rates(grid.q_S[i], grid.rho_O[i], grid.weight[i], p, obj, cfg)) for p in phis
    ])
    A, B, _ = fit_cosine(phis, values)
    return B / A if A > 0 else 0.0
