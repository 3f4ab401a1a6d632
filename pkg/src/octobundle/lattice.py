"""Periodic flat 7-torus lattice.

A field on a :class:`Grid` is a numpy array whose leading axes are the
active lattice axes (``grid.shape``) followed by the per-site component
axes, e.g. ``grid.shape + (8,)`` for an octonion field. Fields are constant
along inactive axes, so those axes are never stored.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .octonion import exp_im

log = logging.getLogger(__name__)

TORUS_VOLUME = (2 * math.pi) ** 7


@dataclass(frozen=True)
class Grid:
    """``n`` sites per active axis; axes are 0-based (0 is x^1)."""

    n: int
    active_axes: tuple[int, ...]

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 4, got {self.n}")
        axes = tuple(int(a) for a in self.active_axes)
        if len(set(axes)) != len(axes) or any(a < 0 or a > 6 for a in axes):
            raise ValueError(f"active axes must be distinct values in 0..6, got {self.active_axes}")
        object.__setattr__(self, "active_axes", tuple(sorted(axes)))

    @property
    def h(self) -> float:
        return 2 * math.pi / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * len(self.active_axes)

    @property
    def ndim(self) -> int:
        return len(self.active_axes)

    @property
    def total_sites(self) -> int:
        return self.n ** len(self.active_axes)

    def coords(self) -> list[np.ndarray]:
        """Coordinate arrays (shape ``self.shape``) for each active axis."""
        x = np.arange(self.n) * self.h
        return list(np.meshgrid(*([x] * self.ndim), indexing="ij"))

    def coord(self, axis: int) -> np.ndarray:
        """Coordinate x^{axis+1} on the grid; zeros if the axis is inactive."""
        if axis not in self.active_axes:
            return np.zeros(self.shape)
        return self.coords()[self.active_axes.index(axis)]

    def ddx(self, f, axis: int) -> np.ndarray:
        """Periodic central difference along a torus axis (zero on inactive axes)."""
        f = np.asarray(f, dtype=float)
        if axis not in self.active_axes:
            return np.zeros_like(f)
        k = self.active_axes.index(axis)
        return (np.roll(f, -1, axis=k) - np.roll(f, 1, axis=k)) / (2 * self.h)

    def grad(self, f) -> np.ndarray:
        """All seven partials stacked on a new axis right after the lattice axes."""
        f = np.asarray(f, dtype=float)
        return np.stack([self.ddx(f, a) for a in range(7)], axis=self.ndim)

    def integrate(self, f) -> np.ndarray:
        """Riemann sum over the torus, normalized so that the integral of 1 is (2 pi)^7."""
        f = np.asarray(f, dtype=float)
        axes = tuple(range(self.ndim))
        return np.mean(f, axis=axes) * TORUS_VOLUME if axes else f * TORUS_VOLUME

    def to_json(self) -> dict:
        return {"n": self.n, "active_axes": [a + 1 for a in self.active_axes]}


@dataclass(frozen=True)
class Mode:
    axis: int
    freq: int
    amp: float
    direction: np.ndarray


def parse_modes(modes: list[dict]) -> list[Mode]:
    """Modes from JSON dicts with 1-based ``axis``; non-unit directions are normalized."""
    out = []
    for m in modes:
        d = np.asarray(m["dir"], dtype=float)
        if d.shape != (7,):
            raise ValueError("mode direction must have 7 components")
        nd = np.linalg.norm(d)
        if nd == 0:
            raise ValueError("mode direction must be nonzero")
        if abs(nd - 1) > 1e-12:
            log.warning("normalizing mode direction %s (norm %.6g)", [float(x) for x in d], nd)
            d = d / nd
        out.append(Mode(int(m["axis"]) - 1, int(m.get("freq", 1)), float(m["amp"]), d))
    return out


def make_unit_field(grid: Grid, profile) -> np.ndarray:
    """``exp_im(sum amp sin(freq x_axis) dir)`` sampled on the grid.

    ``profile`` is a list of :class:`Mode` or of ``(axis, freq, amp, dir)`` tuples
    with 0-based axes.
    """
    alpha = np.zeros(grid.shape + (7,))
    for m in profile:
        if not isinstance(m, Mode):
            m = Mode(int(m[0]), int(m[1]), float(m[2]), np.asarray(m[3], dtype=float))
        alpha += m.amp * np.sin(m.freq * grid.coord(m.axis))[..., None] * m.direction
    return exp_im(alpha)


def load_field_spec(path) -> tuple[Grid, list[Mode]]:
    data = json.loads(Path(path).read_text())
    grid = Grid(int(data["n"]), tuple(int(a) - 1 for a in data["active_axes"]))
    return grid, parse_modes(data.get("modes", []))


def export_field(path, grid: Grid, data, name: str = "field") -> None:
    """Write little-endian float64, site-major, plus a ``.json`` sidecar."""
    path = Path(path)
    arr = np.ascontiguousarray(np.asarray(data, dtype="<f8"))
    arr.tofile(path)
    comp_shape = list(arr.shape[grid.ndim :])
    sidecar = {
        "name": name,
        "grid": grid.to_json(),
        "site_order": "C (last active axis fastest)",
        "component_shape": comp_shape,
        "dtype": "<f8",
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))


def import_field(path) -> tuple[Grid, np.ndarray]:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    g = meta["grid"]
    grid = Grid(g["n"], tuple(a - 1 for a in g["active_axes"]))
    arr = np.fromfile(path, dtype="<f8").reshape(grid.shape + tuple(meta["component_shape"]))
    return grid, arr
