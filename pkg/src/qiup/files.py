"""File formats: key=value run configs, PGM/CSV objects, PGM/CSV images."""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import Camera, OpticalConfig
from .errors import ConfigError, IoError, ParseError, UnitarityViolation
from .optics import UNITARITY_TOL, ObjectMap

MAX_PIXELS_PER_AXIS = 4096


# ---------------------------------------------------------------- objects


def _pgm_tokens(data: bytes, count: int, pos: int) -> tuple[list[int], int]:
    """Read ``count`` whitespace-separated integers, skipping # comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            raise ParseError("unexpected end of PGM header", offset=pos)
        start = pos
        while pos < n and data[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise ParseError(f"expected an integer, found {data[pos:pos + 1]!r}", offset=pos)
        out.append(int(data[start:pos]))
    return out, pos


def read_pgm(data: bytes) -> tuple[np.ndarray, int]:
    """Decode an 8-bit P2 or P5 image into (values[row, col], maxval)."""
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"not a PGM file (magic {magic!r})", offset=0)
    (width, height, maxval), pos = _pgm_tokens(data, 3, 2)
    if width < 1 or height < 1:
        raise ParseError("PGM dimensions must be positive", offset=pos)
    if not 0 < maxval <= 255:
        raise ParseError(f"only 8-bit PGM is supported (maxval {maxval})", offset=pos)
    count = width * height
    if magic == b"P5":
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise ParseError("missing whitespace before raster", offset=pos)
        pos += 1
        raster = data[pos : pos + count]
        if len(raster) < count:
            raise ParseError(f"raster truncated: {len(raster)} of {count} bytes", offset=pos + len(raster))
        values = np.frombuffer(raster, dtype=np.uint8).astype(int)
    else:
        values, pos = _pgm_tokens(data, count, pos)
        values = np.array(values)
    if np.any(values > maxval):
        raise ParseError(f"sample exceeds maxval {maxval}")
    return values.reshape(height, width), maxval


def load_object(
    path,
    fmt: str | None = None,
    *,
    pitch: float = 10e-6,
    boundary_policy: str = "transparent",
    center=(0.0, 0.0),
) -> ObjectMap:
    """Load a transmission map.

    PGM: |T| = value / maxval (255 for 8-bit files), arg T = 0.
    CSV: header ``x,y,mag,phase_rad`` where x, y are integer sample indices
    (column, row); every sample of the bounding grid must appear once.
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "pgm":
        values, maxval = read_pgm(path.read_bytes())
        T = values / float(maxval)
    elif fmt == "csv":
        T = _read_object_csv(path.read_text())
    else:
        raise ParseError(f"unknown object format {fmt!r}")
    return ObjectMap(T.astype(complex), pitch, boundary_policy=boundary_policy, center=center)


def _read_object_csv(text: str) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["x", "y", "mag", "phase_rad"]:
        raise ParseError("CSV header must be x,y,mag,phase_rad", line=1)
    samples = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", line=lineno)
        try:
            x, y = int(row[0]), int(row[1])
            mag, phase = float(row[2]), float(row[3])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if x < 0 or y < 0:
            raise ParseError("sample indices must be non-negative", line=lineno)
        if not (math.isfinite(mag) and math.isfinite(phase)) or mag < 0:
            raise ParseError("magnitude must be finite and >= 0", line=lineno)
        if mag > 1.0 + UNITARITY_TOL:
            raise UnitarityViolation(f"|T| = {mag!r} > 1 at line {lineno}")
        if (x, y) in samples:
            raise ParseError(f"duplicate sample ({x}, {y})", line=lineno)
        samples[(x, y)] = mag * complex(math.cos(phase), math.sin(phase))
    if not samples:
        raise ParseError("CSV object has no samples", line=len(rows))
    width = max(x for x, _ in samples) + 1
    height = max(y for _, y in samples) + 1
    if len(samples) != width * height:
        raise ParseError(f"CSV covers {len(samples)} of {width * height} grid samples")
    T = np.empty((height, width), dtype=complex)
    for (x, y), v in samples.items():
        T[y, x] = v
    return T


# ----------------------------------------------------------------- images


def _as_rates(img) -> np.ndarray:
    return np.asarray(getattr(img, "rates", img), dtype=float)


def csv_bytes(img) -> bytes:
    """Row-major rates, one image row per line, repr floats (exact round trip)."""
    rates = _as_rates(img)
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in rates).encode()


def pgm_bytes(img, kind: str = "P5") -> tuple[bytes, bytes]:
    """8-bit PGM of the rates affinely mapped onto 0..255, plus the ``min max`` sidecar text.

    A flat image maps to 255 everywhere and records min == max.
    """
    rates = _as_rates(img)
    lo, hi = float(rates.min()), float(rates.max())
    if hi > lo:
        pixels = np.rint((rates - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        pixels = np.full(rates.shape, 255, dtype=np.uint8)
    h, w = rates.shape
    if kind == "P5":
        payload = f"P5\n{w} {h}\n255\n".encode() + pixels.tobytes()
    elif kind == "P2":
        lines = [" ".join(str(int(v)) for v in row) for row in pixels]
        payload = (f"P2\n{w} {h}\n255\n" + "\n".join(lines) + "\n").encode()
    else:
        raise ValueError(f"unknown PGM kind {kind!r}")
    return payload, f"{lo!r} {hi!r}\n".encode()


def save_image(img, path, fmt: str | None = None, pgm_kind: str = "P5") -> None:
    """Write rates as CSV or as PGM with a ``<name>.range`` sidecar."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    try:
        if fmt == "csv":
            path.write_bytes(csv_bytes(img))
        elif fmt == "pgm":
            payload, sidecar = pgm_bytes(img, pgm_kind)
            path.write_bytes(payload)
            range_path(path).write_bytes(sidecar)
        else:
            raise ValueError(f"unknown image format {fmt!r}")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def range_path(pgm_path) -> Path:
    p = Path(pgm_path)
    return p.with_name(p.name + ".range")


def load_image_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
    if len({len(r) for r in rows}) > 1:
        raise ParseError("ragged CSV image")
    return np.array(rows, dtype=float)


# ----------------------------------------------------------------- config

OPTICAL_FLOATS = ("lambda_S", "lambda_I", "lambda_P", "f_I", "f_0", "n_S", "n_I", "n_0",
                  "phi_P", "delta_S0", "phi_I0", "C0")

KEYS = {
    **{k: "float" for k in OPTICAL_FLOATS},
    "crystal_l1": "float", "crystal_l2": "float", "crystal_l3": "float",
    "V_P1": "complex", "V_P2": "complex",
    "envelope": ("strict", "sinc"),
    "tilt": ("off", "on"),
    "tilt_x": "float", "tilt_y": "float",
    "camera_nx": "int", "camera_ny": "int", "camera_pitch": "float",
    "object": "path", "object_format": ("auto", "pgm", "csv"),
    "object_pitch": "float", "object_boundary": ("transparent", "opaque"),
    "out": "str",
    "oracle_grid": "int", "sweep_steps": "int", "dot_fraction": "float",
}

DEFAULTS = {
    "lambda_S": "8.1e-07", "lambda_I": "1.55e-06", "lambda_P": "",
    "f_I": "0.1", "f_0": "0.2", "n_S": "1.84", "n_I": "1.82", "n_0": "1.0",
    "phi_P": "0.0", "delta_S0": "0.0", "phi_I0": "0.0", "C0": "0.0",
    "crystal_l1": "0.001", "crystal_l2": "0.001", "crystal_l3": "0.001",
    "V_P1": "1", "V_P2": "1", "envelope": "strict",
    "tilt": "off", "tilt_x": "0.0", "tilt_y": "0.0",
    "camera_nx": "256", "camera_ny": "256", "camera_pitch": "1e-05",
    "object": "", "object_format": "auto", "object_pitch": "1e-05",
    "object_boundary": "transparent", "out": "out",
    "oracle_grid": "4", "sweep_steps": "64", "dot_fraction": "0.8",
}

# keys that do not change any computed number
NON_PHYSICAL = ("out",)


def _convert(key: str, raw: str, base: Path):
    kind = KEYS[key]
    raw = raw.strip()
    try:
        if isinstance(kind, tuple):
            if raw not in kind:
                raise ValueError(f"must be one of {', '.join(kind)}")
            return raw
        if kind == "float":
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError("must be finite")
            return v
        if kind == "int":
            return int(raw)
        if kind == "complex":
            return complex(raw.replace(" ", ""))
        if kind == "path":
            if not raw:
                return None
            p = Path(raw)
            p = (base / p) if not p.is_absolute() else p
            if not p.is_file():
                raise ValueError(f"file not found: {p}")
            return p.resolve()
        return raw
    except ValueError as exc:
        raise ConfigError(key, f"{exc} (got {raw!r})") from None


@dataclass(frozen=True)
class RunConfig:
    optics: OpticalConfig
    camera: Camera
    object_path: Path | None = None
    object_format: str = "auto"
    object_pitch: float = 10e-6
    object_boundary: str = "transparent"
    out_dir: Path = Path("out")
    oracle_grid: int = 4
    sweep_steps: int = 64
    dot_fraction: float = 0.8
    values: dict = field(default_factory=dict, compare=False, hash=False)

    def canonical_text(self) -> str:
        """Resolved configuration as key=value lines; parsing it gives the same digest."""
        return "".join(f"{k} = {v}\n" for k, v in sorted(self.values.items()))

    def digest(self) -> str:
        physical = {k: v for k, v in self.values.items() if k not in NON_PHYSICAL}
        text = "".join(f"{k}={v}\n" for k, v in sorted(physical.items()))
        return hashlib.sha256(text.encode()).hexdigest()

    def load_object(self) -> ObjectMap | None:
        if self.object_path is None:
            return None
        fmt = None if self.object_format == "auto" else self.object_format
        return load_object(self.object_path, fmt, pitch=self.object_pitch, boundary_policy=self.object_boundary)


def parse_config_text(text: str, base: Path | str = ".", overrides: dict | None = None) -> RunConfig:
    base = Path(base)
    raw = dict(DEFAULTS)
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"expected 'key = value', got {stripped!r}", line=lineno)
        key, value = (s.strip() for s in stripped.split("=", 1))
        if key not in KEYS:
            raise ConfigError(key, f"unknown key (line {lineno})")
        if key in seen:
            raise ConfigError(key, f"given twice (line {lineno})")
        seen.add(key)
        raw[key] = value
    for key, value in (overrides or {}).items():
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        raw[key] = str(value)
    return _build(raw, base)


def parse_config_file(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", str(exc)) from None
    return parse_config_text(text, path.parent, overrides)


def _build(raw: dict, base: Path) -> RunConfig:
    v = {}
    for key, text in raw.items():
        if key == "lambda_P" and not text.strip():
            v[key] = None
            continue
        v[key] = _convert(key, text, base)
    for key in ("camera_nx", "camera_ny"):
        if not 1 <= v[key] <= MAX_PIXELS_PER_AXIS:
            raise ConfigError(key, f"must be between 1 and {MAX_PIXELS_PER_AXIS}")
    if v["oracle_grid"] < 1 or v["oracle_grid"] > 8:
        raise ConfigError("oracle_grid", "must be between 1 and 8")
    if v["sweep_steps"] < 8:
        raise ConfigError("sweep_steps", "must be at least 8")
    for key in ("camera_pitch", "object_pitch", "crystal_l1", "crystal_l2", "crystal_l3"):
        if not v[key] > 0:
            raise ConfigError(key, "must be positive")
    tilt = (v["tilt_x"], v["tilt_y"]) if v["tilt"] == "on" else (0.0, 0.0)
    try:
        optics = OpticalConfig(
            lambda_S=v["lambda_S"], lambda_I=v["lambda_I"], lambda_P=v["lambda_P"],
            f_I=v["f_I"], f_0=v["f_0"], n_S=v["n_S"], n_I=v["n_I"], n_0=v["n_0"],
            crystal_dims=(v["crystal_l1"], v["crystal_l2"], v["crystal_l3"]),
            V_P1=v["V_P1"], V_P2=v["V_P2"], phi_P=v["phi_P"],
            delta_S0=v["delta_S0"], phi_I0=v["phi_I0"], C0=v["C0"],
            tilt=tilt, envelope=v["envelope"],
        )
    except ValueError as exc:
        message = str(exc)
        key = next((k for k in OPTICAL_FLOATS if message.startswith(k)), "optics")
        raise ConfigError(key, message) from None
    resolved = {}
    for key, val in v.items():
        if val is None:
            resolved[key] = ""
        elif isinstance(val, float):
            resolved[key] = repr(val)
        elif isinstance(val, complex):
            resolved[key] = repr(val).strip("()")
        else:
            resolved[key] = str(val)
    resolved["lambda_P"] = repr(optics.lambda_P)
    return RunConfig(
        optics=optics,
        camera=Camera(v["camera_nx"], v["camera_ny"], v["camera_pitch"]),
        object_path=v["object"],
        object_format=v["object_format"],
        object_pitch=v["object_pitch"],
        object_boundary=v["object_boundary"],
        out_dir=Path(v["out"]) if Path(v["out"]).is_absolute() else (base / v["out"]),
        oracle_grid=v["oracle_grid"],
        sweep_steps=v["sweep_steps"],
        dot_fraction=v["dot_fraction"],
        values=resolved,
    )


def write_atomically(files: dict[str, bytes], out_dir) -> list[Path]:
    """Write every file or none: stage in a temp dir inside ``out_dir``, then rename."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=out_dir, prefix=".staging-") as tmp:
        staged = []
        for name, payload in files.items():
            p = Path(tmp) / name
            p.write_bytes(payload)
            staged.append(p)
        final = []
        for p in staged:
            target = out_dir / p.name
            os.replace(p, target)
            final.append(target)
    return final
