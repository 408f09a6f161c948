"""Spin configurations on a finite window of the dual lattice.

Site ``(i, j)`` is the unit cell centred at ``(i + 1/2, j + 1/2)``. A window of
half-width ``L`` holds the sites with ``-L <= i, j < L`` plus a frozen ghost
margin of boundary-valued sites, so neighbour reads never leave the array.
Array index ``[i + L + margin, j + L + margin]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import shapely

from .geometry import PlanarShape, box_shape

BOUNDARY_RULES = ("all-plus", "mixed-corner", "frozen-mask")
DEFAULT_MARGIN = 2


@dataclass(frozen=True)
class FieldParameter:
    h: float = 0.0
    beta: float = math.inf

    def __post_init__(self):
        h, beta = float(self.h), float(self.beta)
        if not h >= 0.0:
            raise ValueError(f"field h must be >= 0, got {self.h}")
        if not beta > 0.0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "beta", beta)

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)

    @property
    def p_plus(self) -> float:
        """Probability that a 2-2 tie resolves to +1."""
        if math.isinf(self.h):
            return 1.0
        return 1.0 / (1.0 + math.exp(-2.0 * self.h))

    @property
    def p_minus(self) -> float:
        if math.isinf(self.h):
            return 0.0
        return 1.0 / (1.0 + math.exp(2.0 * self.h))


def parse_real(text) -> float:
    """Parse a real allowing ``inf``/``infinity``."""
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip().lower()
    if t in ("inf", "infinity", "+inf"):
        return math.inf
    return float(t)


def _boundary_value(rule: str, i, j, L: int):
    i = np.asarray(i)
    j = np.asarray(j)
    if rule == "mixed-corner":
        return np.where((i >= L) | (j >= L), 1, -1).astype(np.int8)
    return np.ones(np.broadcast(i, j).shape, dtype=np.int8)


@dataclass
class SpinConfiguration:
    half_width: int
    spins: np.ndarray
    boundary_rule: str = "all-plus"
    frozen: np.ndarray = field(default=None, repr=False)
    margin: int = DEFAULT_MARGIN

    def __post_init__(self):
        if self.boundary_rule not in BOUNDARY_RULES:
            raise ValueError(f"unknown boundary rule {self.boundary_rule!r}")
        if self.margin < 1:
            raise ValueError("margin must be >= 1")
        n = 2 * (self.half_width + self.margin)
        self.spins = np.ascontiguousarray(self.spins, dtype=np.int8)
        if self.spins.shape != (n, n):
            raise ValueError(f"spins must have shape {(n, n)}, got {self.spins.shape}")
        if not np.all(np.abs(self.spins) == 1):
            raise ValueError("spins must be exactly -1 or +1")
        mask = np.zeros((n, n), dtype=np.uint8)
        w = self.margin
        mask[:w, :] = mask[-w:, :] = mask[:, :w] = mask[:, -w:] = 1
        if self.frozen is not None:
            mask |= np.asarray(self.frozen, dtype=bool).astype(np.uint8)
        self.frozen = mask

    @property
    def offset(self) -> int:
        return self.half_width + self.margin

    @property
    def shape(self) -> tuple[int, int]:
        return self.spins.shape

    def copy(self) -> "SpinConfiguration":
        return SpinConfiguration(self.half_width, self.spins.copy(), self.boundary_rule,
                                 self.frozen.copy(), self.margin)

    def with_spins(self, spins: np.ndarray) -> "SpinConfiguration":
        return SpinConfiguration(self.half_width, spins, self.boundary_rule, self.frozen, self.margin)

    def spin(self, i: int, j: int) -> int:
        ix, iy = i + self.offset, j + self.offset
        n = self.spins.shape[0]
        if 0 <= ix < n and 0 <= iy < n:
            return int(self.spins[ix, iy])
        if self.boundary_rule == "frozen-mask":
            return int(self.spins[min(max(ix, 0), n - 1), min(max(iy, 0), n - 1)])
        return int(_boundary_value(self.boundary_rule, i, j, self.half_width))

    def site_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer (i, j) coordinate grids matching ``spins``."""
        r = np.arange(self.spins.shape[0]) - self.offset
        return np.meshgrid(r, r, indexing="ij")

    def interior(self) -> np.ndarray:
        w = self.margin
        return self.spins[w:-w, w:-w]

    def minus_count(self) -> int:
        return int(np.count_nonzero((self.spins < 0) & (self.frozen == 0)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpinConfiguration):
            return NotImplemented
        return (self.half_width == other.half_width and self.margin == other.margin
                and self.boundary_rule == other.boundary_rule
                and np.array_equal(self.spins, other.spins)
                and np.array_equal(self.frozen, other.frozen))

    def __ge__(self, other: "SpinConfiguration") -> bool:
        """Coordinatewise order of the spins."""
        return bool(np.all(self.spins >= other.spins))

    def __le__(self, other: "SpinConfiguration") -> bool:
        return bool(np.all(self.spins <= other.spins))


def _fill_margin(spins: np.ndarray, rule: str, L: int, margin: int) -> None:
    n = spins.shape[0]
    r = np.arange(n) - (L + margin)
    I, J = np.meshgrid(r, r, indexing="ij")
    outside = (I < -L) | (I >= L) | (J < -L) | (J >= L)
    spins[outside] = _boundary_value(rule, I[outside], J[outside], L)


def init_from_shape(shape: PlanarShape, L: int, boundary_rule: str = "all-plus",
                    margin: int = DEFAULT_MARGIN, frozen=None) -> SpinConfiguration:
    """Minus exactly on sites whose centre lies in L * shape (boundary included)."""
    if L < 1:
        raise ValueError("L must be a positive integer")
    if not shape.is_empty:
        x0, y0, x1, y1 = shape.geometry.bounds
        eps = 1e-12
        if min(x0, y0) < -1 - eps or max(x1, y1) > 1 + eps:
            raise ValueError("shape must lie inside [-1, 1]^2")
    n = 2 * (L + margin)
    spins = np.ones((n, n), dtype=np.int8)
    if not shape.is_empty:
        c = (np.arange(2 * L) - L + 0.5) / L
        X, Y = np.meshgrid(c, c, indexing="ij")
        inside = shape.contains_points(np.c_[X.ravel(), Y.ravel()]).reshape(X.shape)
        spins[margin:margin + 2 * L, margin:margin + 2 * L][inside] = -1
    if boundary_rule != "frozen-mask":
        _fill_margin(spins, boundary_rule, L, margin)
    return SpinConfiguration(L, spins, boundary_rule, frozen, margin)


def quadrant_configuration(half_width: int, corner: int = 0,
                           margin: int = DEFAULT_MARGIN) -> SpinConfiguration:
    """Minus on {i < corner, j < corner}, plus elsewhere, margin frozen to match.

    The corner-growth initial condition on a finite window; the frozen margin
    carries the infinite-volume values so the straight edges stay put.
    """
    n = 2 * (half_width + margin)
    r = np.arange(n) - (half_width + margin)
    I, J = np.meshgrid(r, r, indexing="ij")
    spins = np.where((I < corner) & (J < corner), -1, 1).astype(np.int8)
    return SpinConfiguration(half_width, spins, "frozen-mask", None, margin)


def is_increasing_set(config: SpinConfiguration) -> bool:
    """True iff the plus sites form an up-set for the coordinatewise order."""
    P = config.spins > 0
    return bool(np.all(P[:-1, :] <= P[1:, :]) and np.all(P[:, :-1] <= P[:, 1:]))


def _runs(row: np.ndarray) -> list[tuple[int, int]]:
    """(start, length) of the True runs of a boolean vector."""
    d = np.diff(np.r_[0, row.astype(np.int8), 0])
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return list(zip(starts.tolist(), (ends - starts).tolist()))


@dataclass
class DropletSet:
    """Minus sites of a configuration, as (i, j) integer coordinates."""

    minus_sites: np.ndarray
    half_width: int
    _mask: np.ndarray = field(default=None, repr=False)
    _offset: int = 0

    @property
    def is_empty(self) -> bool:
        return len(self.minus_sites) == 0

    def __len__(self) -> int:
        return len(self.minus_sites)

    @property
    def as_shape(self) -> PlanarShape:
        """Union of the closed unit squares around the minus sites (lattice units)."""
        if self.is_empty:
            return PlanarShape()
        mask = self._mask
        boxes = []
        # one rectangle per horizontal run of minus sites
        for iy in range(mask.shape[1]):
            for start, length in _runs(mask[:, iy]):
                x0 = start - self._offset
                y0 = iy - self._offset
                boxes.append(shapely.box(x0, y0, x0 + length, y0 + 1))
        geom = shapely.union_all(boxes)
        geom = shapely.simplify(geom, 0.0)
        return PlanarShape(geom)

    def rescaled_shape(self, L: int | None = None) -> PlanarShape:
        return self.as_shape.scaled(1.0 / (L or self.half_width))


def droplet_of(config: SpinConfiguration) -> DropletSet:
    """Minus sites that are free to move (frozen boundary sites excluded)."""
    mask = (config.spins < 0) & (config.frozen == 0)
    idx = np.argwhere(mask) - config.offset
    return DropletSet(idx.astype(np.int64), config.half_width, mask, config.offset)


# --- snapshot export -------------------------------------------------------

def droplet_rle(config: SpinConfiguration) -> dict:
    """Run-length encoding of the minus sites, one entry per row j."""
    mask = config.spins < 0
    rows = []
    for iy in range(mask.shape[1]):
        runs = _runs(mask[:, iy])
        if runs:
            rows.append([iy - config.offset, [[s - config.offset, n] for s, n in runs]])
    return {
        "format": "droplet-rle",
        "half_width": config.half_width,
        "margin": config.margin,
        "boundary_rule": config.boundary_rule,
        "rows": rows,
    }


def config_from_rle(data: dict) -> SpinConfiguration:
    L, w = int(data["half_width"]), int(data["margin"])
    n = 2 * (L + w)
    spins = np.ones((n, n), dtype=np.int8)
    for j, runs in data["rows"]:
        for s, length in runs:
            spins[s + L + w: s + L + w + length, j + L + w] = -1
    return SpinConfiguration(L, spins, data["boundary_rule"], None, w)


def write_rle_json(config: SpinConfiguration, path) -> None:
    Path(path).write_text(json.dumps(droplet_rle(config), separators=(",", ":")))


def droplet_pbm(config: SpinConfiguration) -> str:
    """Plain PBM (P1) raster of the interior window; 1 marks a minus site.

    The first raster row is the top row (largest j).
    """
    inner = config.interior() < 0
    img = inner.T[::-1].astype(np.uint8)
    lines = [f"P1\n{img.shape[1]} {img.shape[0]}"]
    lines.extend(" ".join(map(str, row)) for row in img.tolist())
    return "\n".join(lines) + "\n"


def read_pbm(text: str) -> np.ndarray:
    tokens = [t for line in text.splitlines() if not line.startswith("#") for t in line.split()]
    if tokens[0] != "P1":
        raise ValueError("not a plain PBM file")
    w, h = int(tokens[1]), int(tokens[2])
    return np.array(tokens[3:3 + w * h], dtype=np.uint8).reshape(h, w)


def square_shape(half: float = 1.0) -> PlanarShape:
    return box_shape(-half, -half, half, half)
