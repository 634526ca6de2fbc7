"""Discrete mode geometry: one signal plane wave per camera pixel.

Each pixel carries the signal wave vector that the camera lens focuses
onto it, the phase-matched idler partner (pump is axial, so transverse
momenta cancel), the 4-f mirror image of that partner, and the object
point that the mirrored idler illuminates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, Camera, OpticalConfig
from .errors import EvanescentMode
from .optics import object_points


@dataclass(frozen=True)
class WaveVector:
    """Plane-wave mode: transverse components (rad/m), angular frequency, medium index."""

    qx: float
    qy: float
    omega: float
    n: float = 1.0

    @property
    def k(self) -> float:
        return self.n * self.omega / SPEED_OF_LIGHT

    @property
    def kz(self) -> float:
        kz2 = self.k**2 - self.qx**2 - self.qy**2
        if kz2 <= 0:
            raise EvanescentMode(f"transverse |q| exceeds k = {self.k:.6g} rad/m")
        return math.sqrt(kz2)

    @property
    def transverse(self) -> tuple[float, float]:
        return (self.qx, self.qy)


def mirror(k: WaveVector) -> WaveVector:
    """Mirror image through the optical axis: transverse part flips, kz and omega kept."""
    return WaveVector(-k.qx, -k.qy, k.omega, k.n)


def phase_match_partner(k_S: WaveVector, cfg: OpticalConfig, medium: str = "external") -> WaveVector:
    """Idler wave vector matched to ``k_S`` with an axial pump.

    ``medium`` selects the index the idler is expressed in: ``"external"``
    uses ``n_0`` (the signal should then also be external), ``"internal"``
    uses the crystal index ``n_I``. Transverse components are conserved
    across a planar crystal face, so both choices give the same partner
    transverse momentum.
    """
    n = {"external": cfg.n_0, "internal": cfg.n_I}[medium]
    partner = WaveVector(-k_S.qx, -k_S.qy, cfg.omega_P - k_S.omega, n)
    partner.kz  # raises EvanescentMode when the idler cannot propagate
    return partner


def sinc_envelope(delta_k, cfg: OpticalConfig) -> float:
    """prod_n sinc(delta_k_n * l_n / 2) over the crystal's three side lengths."""
    dk = np.asarray(delta_k, dtype=float)
    half = dk * np.asarray(cfg.crystal_dims) / 2
    return float(np.prod(np.sinc(half / np.pi)))


def axial_mismatch(q2, cfg: OpticalConfig) -> np.ndarray:
    """Axial k_P - k_S - k_I inside the crystal for exact transverse matching.

    The crystal is taken as collinearly phase matched, so the pump wave
    number is ``n_S k_S + n_I k_I``; off-axis pairs lose axial momentum.
    """
    kS = cfg.n_S * cfg.k_vacuum("S")
    kI = cfg.n_I * cfg.k_vacuum("I")
    return (kS + kI) - np.sqrt(kS * kS - q2) - np.sqrt(kI * kI - q2)


@dataclass(frozen=True)
class ModeEntry:
    pixel: tuple[int, int]
    signal: WaveVector
    idler: WaveVector
    mirrored_idler: WaveVector
    rho_S: tuple[float, float]
    rho_O: tuple[float, float]
    weight: float


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """Per-pixel mode data stored column-wise, entries in row-major pixel order."""

    camera: Camera
    cfg: OpticalConfig
    rows: np.ndarray
    cols: np.ndarray
    rho_S: np.ndarray
    q_S: np.ndarray
    rho_O: np.ndarray
    weight: np.ndarray

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def q_I(self) -> np.ndarray:
        return -self.q_S

    @property
    def q_mirrored(self) -> np.ndarray:
        return self.q_S.copy()

    def index_of(self, row: int, col: int) -> int:
        return row * self.camera.nx + col

    def entry(self, i: int) -> ModeEntry:
        cfg = self.cfg
        qx, qy = (float(v) for v in self.q_S[i])
        signal = WaveVector(qx, qy, cfg.omega_S, cfg.n_0)
        idler = WaveVector(-qx, -qy, cfg.omega_P - cfg.omega_S, cfg.n_0)
        return ModeEntry(
            pixel=(int(self.rows[i]), int(self.cols[i])),
            signal=signal,
            idler=idler,
            mirrored_idler=mirror(idler),
            rho_S=(float(self.rho_S[i, 0]), float(self.rho_S[i, 1])),
            rho_O=(float(self.rho_O[i, 0]), float(self.rho_O[i, 1])),
            weight=float(self.weight[i]),
        )

    def __iter__(self):
        return (self.entry(i) for i in range(len(self)))

    def center_index(self) -> int:
        """Entry closest to the optical axis (ties go to the lowest index)."""
        return int(np.argmin(np.hypot(self.rho_S[:, 0], self.rho_S[:, 1])))


def signal_transverse(X, Y, cfg: OpticalConfig) -> np.ndarray:
    """Transverse signal wave vector for camera points, shape ``X.shape + (2,)``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    r = np.sqrt(X * X + Y * Y + cfg.f_0 * cfg.f_0)
    k = cfg.n_0 * cfg.k_vacuum("S")
    return np.stack((k * X / r, k * Y / r), axis=-1)


def envelope_weights(q_S: np.ndarray, cfg: OpticalConfig) -> np.ndarray:
    if cfg.envelope == "strict":
        return np.ones(q_S.shape[:-1])
    q2 = np.sum(q_S * q_S, axis=-1)
    dkz = axial_mismatch(q2, cfg)
    # only the axial mismatch survives; transverse components cancel by construction
    return np.abs(np.sinc(dkz * cfg.crystal_dims[2] / 2 / np.pi))


def build_mode_grid(cfg: OpticalConfig, camera: Camera) -> ModeGrid:
    X, Y = camera.positions()
    rows, cols = np.indices(camera.shape)
    q_S = signal_transverse(X, Y, cfg).reshape(-1, 2)
    kI = cfg.n_0 * cfg.k_vacuum("I")
    if np.any(np.sum(q_S * q_S, axis=-1) >= kI * kI):
        raise EvanescentMode("signal angle too large for a propagating idler partner")
    rho_O = object_points(X, Y, cfg).reshape(-1, 2)
    grid = ModeGrid(
        camera=camera,
        cfg=cfg,
        rows=rows.ravel(),
        cols=cols.ravel(),
        rho_S=np.stack((X.ravel(), Y.ravel()), axis=-1),
        q_S=q_S,
        rho_O=rho_O,
        weight=envelope_weights(q_S, cfg),
    )
    for arr in (grid.rows, grid.cols, grid.rho_S, grid.q_S, grid.rho_O, grid.weight):
        arr.setflags(write=False)
    return grid
