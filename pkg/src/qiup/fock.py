"""Brute-force Fock-space ground truth for the imaging rates.

States are sparse maps from occupation patterns to complex amplitudes.
An occupation pattern is stored as a sorted tuple of ``(mode, count)``
pairs with ``count > 0``, i.e. the non-zero part of the occupation
vector; the vacuum is the empty tuple.

Per pixel k the registry holds signal modes S1/S2, the idler mode I1 of
the first crystal (the second crystal's idler is an alias of it through
the object), the environment mode ENV at the object's unused port and,
when the envelope weight w < 1 anywhere, an unaligned idler mode U. The
second crystal's idler creation operator is

    e^{-i phi_I0} [w (T* a+_I1 + R'* a+_ENV) + sqrt(1 - w^2) a+_U]

so w sets how much of its idler is indistinguishable from the first
crystal's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .config import OpticalConfig
from .errors import DegenerateFit, TruncationOverflow
from .modes import ModeGrid
from .optics import reflection_magnitude

PRUNE = 1e-15
DEFAULT_PAIR_SCALE = 1e-3
LABELS = ("S1", "S2", "I1", "ENV", "U")

Key = tuple  # tuple[tuple[int, int], ...]


class ModeRegistry:
    """Bidirectional map between ``(label, pixel)`` and mode index."""

    def __init__(self, n_pixels: int, with_unaligned: bool = False):
        labels = LABELS if with_unaligned else LABELS[:4]
        self.modes: list[tuple[str, int]] = [(lab, k) for k in range(n_pixels) for lab in labels]
        self._index = {m: i for i, m in enumerate(self.modes)}
        self.n_pixels = n_pixels
        self.with_unaligned = with_unaligned

    def __len__(self) -> int:
        return len(self.modes)

    def index(self, label: str, pixel: int) -> int:
        return self._index[(label, pixel)]

    def label(self, index: int) -> tuple[str, int]:
        return self.modes[index]


@dataclass(frozen=True, eq=False)
class FockState:
    terms: dict
    n_max: int = 2
    registry: ModeRegistry | None = None
    pair_scale: complex = 1.0
    meta: dict = field(default_factory=dict)

    @classmethod
    def vacuum(cls, **kw) -> "FockState":
        return cls({(): 1.0 + 0j}, **kw)

    def _like(self, terms: dict) -> "FockState":
        return FockState(prune(terms), self.n_max, self.registry, self.pair_scale, self.meta)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "FockState") -> "FockState":
        out = dict(self.terms)
        for key, amp in other.terms.items():
            out[key] = out.get(key, 0) + amp
        return self._like(out)

    def scaled(self, c: complex) -> "FockState":
        return self._like({k: c * a for k, a in self.terms.items()})

    def inner(self, other: "FockState") -> complex:
        """<self|other>."""
        small, large = (self.terms, other.terms) if len(self.terms) <= len(other.terms) else (other.terms, self.terms)
        total = 0j
        for key in small:
            if key in large:
                total += self.terms[key].conjugate() * other.terms[key]
        return total

    def norm2(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.terms.values())

    def amplitude(self, occupations: dict) -> complex:
        """Amplitude of the pattern given as ``{mode_index: count}``."""
        key = tuple(sorted((m, n) for m, n in occupations.items() if n))
        return self.terms.get(key, 0j)

    def occupation_vector(self, key: Key) -> np.ndarray:
        size = len(self.registry) if self.registry is not None else (max((m for m, _ in key), default=-1) + 1)
        vec = np.zeros(size, dtype=int)
        for m, n in key:
            vec[m] = n
        return vec


def prune(terms: dict) -> dict:
    return {k: a for k, a in terms.items() if abs(a) > PRUNE}


def photon_number(key: Key) -> int:
    return sum(n for _, n in key)


def _shift(key: Key, mode: int, delta: int) -> tuple[Key, int]:
    """New key with ``mode`` occupation changed by ``delta``; also returns the old count."""
    items = dict(key)
    old = items.get(mode, 0)
    new = old + delta
    if new:
        items[mode] = new
    else:
        items.pop(mode, None)
    return tuple(sorted(items.items())), old


def annihilate(state: FockState, mode: int) -> FockState:
    out: dict = {}
    for key, amp in state.terms.items():
        if dict(key).get(mode, 0) == 0:
            continue
        new, old = _shift(key, mode, -1)
        out[new] = out.get(new, 0) + amp * math.sqrt(old)
    return state._like(out)


def create(state: FockState, mode: int) -> FockState:
    out: dict = {}
    for key, amp in state.terms.items():
        new, old = _shift(key, mode, +1)
        if old + 1 > state.n_max:
            raise TruncationOverflow(f"mode {mode} would hold {old + 1} > n_max={state.n_max} photons")
        out[new] = out.get(new, 0) + amp * math.sqrt(old + 1)
    return state._like(out)


PairOperator = list  # list[tuple[complex, tuple[int, ...]]]


def apply_pairs(op: PairOperator, state: FockState) -> FockState:
    """Apply sum_j amp_j * prod(a+ over modes_j) to ``state``."""
    out: dict = {}
    for amp, modes in op:
        if amp == 0:
            continue
        s = state
        for m in modes:
            s = create(s, m)
        for key, a in s.terms.items():
            out[key] = out.get(key, 0) + amp * a
    return state._like(out)


def _object_terms(obj, grid: ModeGrid):
    if obj is None:
        T = np.ones(len(grid), dtype=complex)
    else:
        T = np.asarray(obj.transmission(grid.rho_O[:, 0], grid.rho_O[:, 1]), dtype=complex)
    return T, reflection_magnitude(T)


def crystal_operators(
    obj,
    cfg: OpticalConfig,
    grid: ModeGrid,
    registry: ModeRegistry,
    phi_P: float,
    pair_scale: complex,
    conjugate_object: bool = True,
) -> tuple[PairOperator, PairOperator]:
    """Pair-creation operators of the two crystals, first order in the pump."""
    G1 = pair_scale * cfg.V_P1
    G2 = pair_scale * cfg.V_P2 * complex(math.cos(phi_P), math.sin(phi_P))
    G2 *= complex(math.cos(cfg.phi_I0), -math.sin(cfg.phi_I0))
    T, Rp = _object_terms(obj, grid)
    T_branch = np.conj(T) if conjugate_object else T
    idx = registry.index
    X1, X2 = [], []
    for k in range(len(grid)):
        w = float(grid.weight[k])
        X1.append((G1, (idx("S1", k), idx("I1", k))))
        X2.append((G2 * w * T_branch[k], (idx("S2", k), idx("I1", k))))
        X2.append((G2 * w * Rp[k], (idx("S2", k), idx("ENV", k))))
        if w < 1.0:
            X2.append((G2 * math.sqrt(1.0 - w * w), (idx("S2", k), idx("U", k))))
    return X1, X2


def _prepare(grid: ModeGrid, n_max: int, pair_scale: complex, phi_P: float):
    registry = ModeRegistry(len(grid), with_unaligned=bool(np.any(grid.weight < 1.0)))
    vac = FockState.vacuum(n_max=n_max, registry=registry, pair_scale=pair_scale, meta={"phi_P": phi_P})
    return registry, vac


def build_superposition_state(
    obj,
    cfg: OpticalConfig,
    grid: ModeGrid,
    *,
    phi_P: float | None = None,
    pair_scale: complex = DEFAULT_PAIR_SCALE,
    n_max: int = 2,
    conjugate_object: bool = True,
) -> FockState:
    """vac + X1|vac> + X2|vac>: each crystal emits at most one pair, never both."""
    phi_P = cfg.phi_P if phi_P is None else phi_P
    registry, vac = _prepare(grid, n_max, pair_scale, phi_P)
    X1, X2 = crystal_operators(obj, cfg, grid, registry, phi_P, pair_scale, conjugate_object)
    return vac + apply_pairs(X1, vac) + apply_pairs(X2, vac)


def build_product_state(
    obj,
    cfg: OpticalConfig,
    grid: ModeGrid,
    *,
    phi_P: float | None = None,
    pair_scale: complex = DEFAULT_PAIR_SCALE,
    n_max: int = 2,
) -> FockState:
    """(1 + X2)(1 + X1)|vac>: the tensor product of the two first-order crystal states.

    The cross term X2 X1 |vac> is second order in the pair amplitude and
    doubly occupies I1 whenever both crystals feed the same idler mode.
    """
    if n_max < 2:
        raise ValueError("the product state needs n_max >= 2")
    phi_P = cfg.phi_P if phi_P is None else phi_P
    registry, vac = _prepare(grid, n_max, pair_scale, phi_P)
    X1, X2 = crystal_operators(obj, cfg, grid, registry, phi_P, pair_scale)
    first = apply_pairs(X1, vac)
    return vac + first + apply_pairs(X2, vac) + apply_pairs(X2, first)


def detector_phase(cfg: OpticalConfig, q_S) -> float:
    """Phase of the second signal path at the camera relative to the first.

    Collects path-length difference, crystal separation and the beamsplitter
    i; together with phi_I0 carried by the state they reproduce the
    analytic interference phase.
    """
    tx, ty = cfg.tilt
    return cfg.delta_S0 + cfg.C0 - math.pi / 2 + tx * q_S[0] + ty * q_S[1]


def apply_detector_field(state: FockState, pixel: int, cfg: OpticalConfig, grid: ModeGrid) -> FockState:
    """E+ at a pixel: a_S1 + i e^{i Phi} a_S2, with Phi from :func:`detector_phase`."""
    reg = state.registry
    phase = detector_phase(cfg, grid.q_S[pixel])
    c2 = 1j * complex(math.cos(phase), math.sin(phase))
    return annihilate(state, reg.index("S1", pixel)) + annihilate(state, reg.index("S2", pixel)).scaled(c2)


def oracle_rate(state: FockState, pixel: int, cfg: OpticalConfig, grid: ModeGrid) -> float:
    """<E- E+> at a pixel, rescaled so the background is |V1|^2 + |V2|^2."""
    field_state = apply_detector_field(state, pixel, cfg, grid)
    return field_state.norm2() / abs(state.pair_scale) ** 2


def oracle_rates(state: FockState, cfg: OpticalConfig, grid: ModeGrid, pixels: Iterable[int] | None = None) -> np.ndarray:
    pixels = range(len(grid)) if pixels is None else pixels
    return np.array([oracle_rate(state, p, cfg, grid) for p in pixels])


def product_differences(
    cfg: OpticalConfig,
    obj,
    grid: ModeGrid,
    g_values,
    *,
    pixel: int | None = None,
    phi_P: float | None = None,
) -> np.ndarray:
    """|R_product - R_superposition| / R_superposition at one pixel for each pair amplitude g.

    The pump amplitudes of ``cfg`` are replaced by V1 = V2 = 1 so both
    crystals carry the pair amplitude g; pass ``cfg`` with ``V_P2 = 0`` to
    switch the second crystal off instead.
    """
    pixel = grid.center_index() if pixel is None else pixel
    v2 = 0.0 if cfg.V_P2 == 0 else 1.0
    c = cfg.with_(V_P1=1.0, V_P2=v2)
    out = []
    for g in g_values:
        sup = build_superposition_state(obj, c, grid, phi_P=phi_P, pair_scale=g)
        prod = build_product_state(obj, c, grid, phi_P=phi_P, pair_scale=g)
        r_sup = oracle_rate(sup, pixel, c, grid)
        r_prod = oracle_rate(prod, pixel, c, grid)
        out.append(abs(r_prod - r_sup) / r_sup)
    return np.array(out)


def product_scaling_check(cfg: OpticalConfig, obj, grid: ModeGrid, g_values, **kw) -> float:
    """Log-log slope of the product-versus-superposition rate difference against g."""
    g = np.asarray(g_values, dtype=float)
    if len(g) < 2 or g.max() / g.min() < 100:
        raise ValueError("g_values must span at least two decades")
    diffs = product_differences(cfg, obj, grid, g, **kw)
    if np.any(~np.isfinite(diffs)) or np.any(diffs <= 0):
        raise DegenerateFit("a rate difference vanished or underflowed; the slope is undefined")
    slope, _ = np.polyfit(np.log(g), np.log(diffs), 1)
    return float(slope)
