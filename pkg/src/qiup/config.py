"""Physical configuration of the interferometer and the camera."""

from __future__ import annotations

import cmath
import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

ENERGY_MATCH_RTOL = 1e-9


@dataclass(frozen=True)
class OpticalConfig:
    """All physical parameters of the setup, SI units.

    Defaults describe an illustrative non-degenerate source (810 nm signal,
    1550 nm idler) with a 200 mm camera lens and a 100 mm idler 4-f system.
    The phase constants default to zero; they are experimental offsets with
    no canonical value.

    ``lambda_P`` may be left as ``None`` and is then derived from energy
    matching. ``tilt`` is a transverse displacement (m) whose dot product
    with the signal transverse wave vector is added to the interference
    phase; it stands in for the crystal-separation term and is zero unless
    fringes are wanted.
    """

    lambda_S: float = 810e-9
    lambda_I: float = 1550e-9
    lambda_P: float | None = None
    f_I: float = 0.100
    f_0: float = 0.200
    n_S: float = 1.84
    n_I: float = 1.82
    n_0: float = 1.0
    crystal_dims: tuple[float, float, float] = (1e-3, 1e-3, 1e-3)
    V_P1: complex = 1.0
    V_P2: complex = 1.0
    phi_P: float = 0.0
    delta_S0: float = 0.0
    phi_I0: float = 0.0
    C0: float = 0.0
    tilt: tuple[float, float] = (0.0, 0.0)
    envelope: str = "strict"

    def __post_init__(self) -> None:
        if self.lambda_P is None:
            object.__setattr__(self, "lambda_P", 1.0 / (1.0 / self.lambda_S + 1.0 / self.lambda_I))
        object.__setattr__(self, "crystal_dims", tuple(float(v) for v in self.crystal_dims))
        object.__setattr__(self, "tilt", tuple(float(v) for v in self.tilt))
        object.__setattr__(self, "V_P1", complex(self.V_P1))
        object.__setattr__(self, "V_P2", complex(self.V_P2))
        self.validate()

    def validate(self) -> None:
        for name in ("lambda_S", "lambda_I", "lambda_P", "f_I", "f_0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive length, got {value!r}")
        if len(self.crystal_dims) != 3 or any(not (v > 0) for v in self.crystal_dims):
            raise ValueError(f"crystal_dims must be three positive lengths, got {self.crystal_dims!r}")
        for name in ("n_S", "n_I", "n_0"):
            if not getattr(self, name) >= 1.0:
                raise ValueError(f"{name} must be >= 1")
        if len(self.tilt) != 2:
            raise ValueError("tilt must have two components")
        if self.envelope not in ("strict", "sinc"):
            raise ValueError(f"envelope must be 'strict' or 'sinc', got {self.envelope!r}")
        mismatch = 1.0 / self.lambda_P - 1.0 / self.lambda_S - 1.0 / self.lambda_I
        if abs(mismatch) > ENERGY_MATCH_RTOL / self.lambda_P:
            raise ValueError(
                "energy matching violated: 1/lambda_P != 1/lambda_S + 1/lambda_I "
                f"(relative mismatch {abs(mismatch) * self.lambda_P:.3e})"
            )

    # angular frequencies, rad/s
    @property
    def omega_S(self) -> float:
        return 2 * math.pi * SPEED_OF_LIGHT / self.lambda_S

    @property
    def omega_I(self) -> float:
        return 2 * math.pi * SPEED_OF_LIGHT / self.lambda_I

    @property
    def omega_P(self) -> float:
        return 2 * math.pi * SPEED_OF_LIGHT / self.lambda_P

    def k_vacuum(self, which: str) -> float:
        """Vacuum wave number omega/c of the 'S', 'I' or 'P' field."""
        return {"S": self.omega_S, "I": self.omega_I, "P": self.omega_P}[which] / SPEED_OF_LIGHT

    @property
    def pump_phase_offset(self) -> float:
        """arg(V_P2) - arg(V_P1); added to the controllable pump phase."""
        if self.V_P1 == 0 or self.V_P2 == 0:
            return 0.0
        return cmath.phase(self.V_P2) - cmath.phase(self.V_P1)

    @property
    def background(self) -> float:
        return abs(self.V_P1) ** 2 + abs(self.V_P2) ** 2

    def with_(self, **changes) -> "OpticalConfig":
        if "lambda_S" in changes or "lambda_I" in changes:
            changes.setdefault("lambda_P", None)
        return replace(self, **changes)

    def canonical(self) -> dict[str, str]:
        """Flat, exactly round-trippable string form of every field."""
        def num(x: float) -> str:
            return repr(float(x))

        def cplx(z: complex) -> str:
            return f"{num(z.real)},{num(z.imag)}"

        return {
            "lambda_S": num(self.lambda_S),
            "lambda_I": num(self.lambda_I),
            "lambda_P": num(self.lambda_P),
            "f_I": num(self.f_I),
            "f_0": num(self.f_0),
            "n_S": num(self.n_S),
            "n_I": num(self.n_I),
            "n_0": num(self.n_0),
            "crystal_dims": ",".join(num(v) for v in self.crystal_dims),
            "V_P1": cplx(self.V_P1),
            "V_P2": cplx(self.V_P2),
            "phi_P": num(self.phi_P),
            "delta_S0": num(self.delta_S0),
            "phi_I0": num(self.phi_I0),
            "C0": num(self.C0),
            "tilt": ",".join(num(v) for v in self.tilt),
            "envelope": self.envelope,
        }

    def digest(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in sorted(self.canonical().items()))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class Camera:
    """Rectangular pixel grid centred on the optical axis.

    Pixel ``(row, col)`` sits at ``x = (col - (nx-1)/2) * pitch``,
    ``y = (row - (ny-1)/2) * pitch`` in the camera plane.
    """

    nx: int
    ny: int
    pitch: float

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise ValueError("camera pixel counts must be positive")
        if not self.pitch > 0:
            raise ValueError("camera pitch must be positive")

    @classmethod
    def square(cls, n: int, pitch: float) -> "Camera":
        return cls(n, n, pitch)

    @classmethod
    def for_half_angle(cls, n: int, half_angle: float, f_0: float, ny: int | None = None) -> "Camera":
        """Camera whose outermost pixel centre along x sits at ``half_angle`` behind a lens of focal length ``f_0``."""
        if n < 2:
            raise ValueError("need at least two pixels to define a half angle")
        pitch = f_0 * math.tan(half_angle) / ((n - 1) / 2)
        return cls(n, n if ny is None else ny, pitch)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        x = (np.arange(self.nx) - (self.nx - 1) / 2) * self.pitch
        y = (np.arange(self.ny) - (self.ny - 1) / 2) * self.pitch
        return x, y

    def positions(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-centre coordinates, each of shape ``(ny, nx)``."""
        x, y = self.axes()
        return np.meshgrid(x, y)

    def pixel_position(self, row: int, col: int) -> tuple[float, float]:
        return ((col - (self.nx - 1) / 2) * self.pitch, (row - (self.ny - 1) / 2) * self.pitch)


DEFAULT_CONFIG = OpticalConfig()

__all__ = ["Camera", "OpticalConfig", "DEFAULT_CONFIG", "SPEED_OF_LIGHT"]
