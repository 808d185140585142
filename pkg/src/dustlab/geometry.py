"""Planar geometry core: quadrant addresses, squares, occupancy grids, isometries.

Conventions used throughout the package:

* Grids are square bitmaps of shape (2**m, 2**m) over a stated bounding
  square.  Row index 0 is the *bottom* row (mathematical orientation);
  serialization to text flips to top-row-first.
* Cells are half open: a cell owns its lower/left edge and excludes its
  upper/right edge, except the last row/column which is closed.  Every
  point of the bounding square therefore maps to exactly one cell.
* Rasterization of axis-aligned squares applies the same half-open rule
  to the square itself, so a square whose edge lands exactly on a cell
  boundary occupies cells on one side only.  This makes occupancy counts
  of exactly tiled inputs (sides equal to a cell multiple) exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError

SQRT2 = math.sqrt(2.0)


class Quadrant(IntEnum):
    """Corner selector for one subdivision step; letters follow the CAD format."""

    SW = 0
    SE = 1
    NW = 2
    NE = 3

    @property
    def x_bit(self) -> int:
        return int(self) & 1

    @property
    def y_bit(self) -> int:
        return (int(self) >> 1) & 1

    @property
    def letter(self) -> str:
        return "ABCD"[int(self)]

    @classmethod
    def from_letter(cls, letter: str) -> "Quadrant":
        idx = "ABCD".find(letter)
        if idx < 0:
            raise ParameterError(f"unknown quadrant letter {letter!r}, expected one of A B C D")
        return cls(idx)


@dataclass(frozen=True)
class Alpha:
    """Subdivision scale ratio; the construction degenerates outside (0, 1/2)."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not (0.0 < v < 0.5):
            raise ParameterError(f"scale ratio must lie strictly between 0 and 1/2, got {self.value!r}")
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return self.value


def as_alpha(alpha: "Alpha | float") -> Alpha:
    return alpha if isinstance(alpha, Alpha) else Alpha(float(alpha))


@dataclass(frozen=True)
class SquareAddress:
    """Exact symbolic address of one generation-n square: a word of corner choices."""

    word: tuple[Quadrant, ...]
    alpha: Alpha

    def __post_init__(self) -> None:
        object.__setattr__(self, "word", tuple(Quadrant(q) for q in self.word))
        object.__setattr__(self, "alpha", as_alpha(self.alpha))

    @property
    def generation(self) -> int:
        return len(self.word)

    def child(self, q: Quadrant) -> "SquareAddress":
        return SquareAddress(self.word + (Quadrant(q),), self.alpha)

    def letters(self) -> str:
        return "".join(q.letter for q in self.word)


@dataclass(frozen=True)
class Square:
    """Axis-aligned square given by its lower-left corner and side length."""

    corner: tuple[float, float]
    side: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "corner", (float(self.corner[0]), float(self.corner[1])))
        object.__setattr__(self, "side", float(self.side))
        if not self.side > 0.0:
            raise ParameterError(f"square side must be positive, got {self.side!r}")

    @property
    def max_corner(self) -> tuple[float, float]:
        return (self.corner[0] + self.side, self.corner[1] + self.side)

    @property
    def center(self) -> tuple[float, float]:
        h = 0.5 * self.side
        return (self.corner[0] + h, self.corner[1] + h)

    @property
    def diameter(self) -> float:
        return self.side * SQRT2

    def corners(self) -> np.ndarray:
        """Vertices in counterclockwise order starting at the lower-left corner."""
        x0, y0 = self.corner
        x1, y1 = self.max_corner
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)

    def contains_point(self, p: Sequence[float]) -> bool:
        x0, y0 = self.corner
        x1, y1 = self.max_corner
        return x0 <= p[0] <= x1 and y0 <= p[1] <= y1

    def intersects(self, other: "Square") -> bool:
        """Closed-rectangle overlap test (shared edges count)."""
        ax0, ay0 = self.corner
        ax1, ay1 = self.max_corner
        bx0, by0 = other.corner
        bx1, by1 = other.max_corner
        return ax0 <= bx1 and bx0 <= ax1 and ay0 <= by1 and by0 <= ay1

    @staticmethod
    def unit() -> "Square":
        return Square((0.0, 0.0), 1.0)

    @staticmethod
    def centered(center: Sequence[float], half_width: float) -> "Square":
        return Square((center[0] - half_width, center[1] - half_width), 2.0 * half_width)


def square_of_address(addr: SquareAddress) -> Square:
    """Closed-form geometry of an addressed square.

    The lower-left corner per axis is sum over steps k of
    b_k * (alpha**(k-1) - alpha**k), where b_k selects the far corner on
    that axis, and the side is alpha**n.  Recomputed from the word each
    call; nothing is mutated incrementally, so generations do not drift.
    """
    a = float(addr.alpha)
    n = addr.generation
    terms_x = []
    terms_y = []
    for k, q in enumerate(addr.word, start=1):
        step = a ** (k - 1) - a ** k
        if q.x_bit:
            terms_x.append(step)
        if q.y_bit:
            terms_y.append(step)
    return Square((math.fsum(terms_x), math.fsum(terms_y)), a ** n)


def _freeze(bits: np.ndarray) -> np.ndarray:
    arr = np.asarray(bits, dtype=bool)
    if arr.flags.writeable:
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BoxGrid:
    """Occupancy bitmap of a planar set over a stated bounding square.

    bits[iy, ix] covers the cell with lower-left corner
    (x0 + ix * w, y0 + iy * w) where w = bounds.side / 2**level.
    Immutable after construction; all operations return new grids.
    """

    bounds: Square
    level: int
    bits: np.ndarray

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ParameterError(f"grid level must be nonnegative, got {self.level}")
        n = 1 << self.level
        arr = _freeze(self.bits)
        if arr.shape != (n, n):
            raise ParameterError(f"grid bits must have shape {(n, n)}, got {arr.shape}")
        object.__setattr__(self, "bits", arr)

    @property
    def size(self) -> int:
        return 1 << self.level

    @property
    def cell_size(self) -> float:
        return self.bounds.side / self.size

    @property
    def occupied_count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def is_empty(self) -> bool:
        return not self.bits.any()

    def point_cell(self, p: Sequence[float]) -> tuple[int, int]:
        """Cell (ix, iy) owning p under the half-open convention."""
        if not self.bounds.contains_point(p):
            raise ParameterError(f"point {tuple(p)} lies outside the grid bounds")
        w = self.cell_size
        x0, y0 = self.bounds.corner
        ix = min(int((p[0] - x0) / w), self.size - 1)
        iy = min(int((p[1] - y0) / w), self.size - 1)
        return ix, iy

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        w = self.cell_size
        x0, y0 = self.bounds.corner
        return (x0 + (ix + 0.5) * w, y0 + (iy + 0.5) * w)

    def occupied_cell_centers(self) -> np.ndarray:
        iy, ix = np.nonzero(self.bits)
        w = self.cell_size
        x0, y0 = self.bounds.corner
        return np.column_stack((x0 + (ix + 0.5) * w, y0 + (iy + 0.5) * w))

    def downsampled(self, level: int) -> "BoxGrid":
        """OR-reduction to a coarser level; occupied means "meets the set"."""
        if level == self.level:
            return self
        if level > self.level:
            raise ParameterError(f"cannot downsample level {self.level} grid to finer level {level}")
        f = 1 << (self.level - level)
        n = 1 << level
        coarse = self.bits.reshape(n, f, n, f).any(axis=(1, 3))
        coarse.setflags(write=False)
        return BoxGrid(self.bounds, level, coarse)

    def same_extent(self, other: "BoxGrid") -> bool:
        return self.bounds == other.bounds and self.level == other.level

    @staticmethod
    def empty(bounds: Square, level: int) -> "BoxGrid":
        n = 1 << level
        return BoxGrid(bounds, level, np.zeros((n, n), dtype=bool))

    @staticmethod
    def full(bounds: Square, level: int) -> "BoxGrid":
        n = 1 << level
        return BoxGrid(bounds, level, np.ones((n, n), dtype=bool))


def _index_ranges(lo: np.ndarray, hi: np.ndarray, origin: float, cell: float, n: int):
    """Half-open cell index span [i_lo, i_hi] met by intervals [lo, hi).

    An interval ending exactly on a cell boundary stops short of the next
    cell; one beginning on a boundary starts in that cell.
    """
    f_lo = np.floor((lo - origin) / cell).astype(np.int64)
    f_hi = (np.ceil((hi - origin) / cell) - 1.0).astype(np.int64)
    valid = (f_hi >= 0) & (f_lo <= n - 1) & (f_hi >= f_lo)
    return np.clip(f_lo, 0, n - 1), np.clip(f_hi, 0, n - 1), valid


def rasterize(squares: Iterable[Square] | np.ndarray, bounds: Square, level: int,
              side: float | None = None) -> BoxGrid:
    """Mark every cell met by at least one input square.

    Accepts a sequence of Square objects, or a (N, 2) array of lower-left
    corners together with a shared ``side``.  Deterministic; an empty
    input yields an empty grid.
    """
    if level < 0:
        raise ParameterError(f"grid level must be nonnegative, got {level}")
    n = 1 << level
    bits = np.zeros((n, n), dtype=bool)
    if isinstance(squares, np.ndarray):
        if side is None:
            raise ParameterError("corner-array input requires an explicit side")
        corners = np.asarray(squares, dtype=float).reshape(-1, 2)
        sides = np.full(len(corners), float(side))
    else:
        sq = list(squares)
        if not sq:
            return BoxGrid(bounds, level, bits)
        corners = np.array([s.corner for s in sq], dtype=float)
        sides = np.array([s.side for s in sq], dtype=float)
    if len(corners) == 0:
        return BoxGrid(bounds, level, bits)

    w = bounds.side / n
    x0, y0 = bounds.corner
    ix_lo, ix_hi, vx = _index_ranges(corners[:, 0], corners[:, 0] + sides, x0, w, n)
    iy_lo, iy_hi, vy = _index_ranges(corners[:, 1], corners[:, 1] + sides, y0, w, n)
    ok = vx & vy
    single = ok & (ix_lo == ix_hi) & (iy_lo == iy_hi)
    bits[iy_lo[single], ix_lo[single]] = True
    for i in np.nonzero(ok & ~single)[0]:
        bits[iy_lo[i]:iy_hi[i] + 1, ix_lo[i]:ix_hi[i] + 1] = True
    return BoxGrid(bounds, level, bits)


def _common_level(a: BoxGrid, b: BoxGrid) -> tuple[BoxGrid, BoxGrid]:
    if a.level > b.level:
        a = a.downsampled(b.level)
    elif b.level > a.level:
        b = b.downsampled(a.level)
    if not a.same_extent(b):
        raise ParameterError("grids cover different bounds and cannot be combined")
    return a, b


def grid_intersection(a: BoxGrid, b: BoxGrid) -> BoxGrid:
    """Cellwise AND; when levels differ the finer grid is OR-downsampled first."""
    a, b = _common_level(a, b)
    return BoxGrid(a.bounds, a.level, a.bits & b.bits)


def grid_union(a: BoxGrid, b: BoxGrid) -> BoxGrid:
    """Cellwise OR under the same compatibility rules as grid_intersection."""
    a, b = _common_level(a, b)
    return BoxGrid(a.bounds, a.level, a.bits | b.bits)


# ---------------------------------------------------------------------------
# Isometries and rotated-square (quad) helpers


def _snap(x: float) -> float:
    for target in (-1.0, 0.0, 1.0):
        if abs(x - target) < 1e-12:
            return target
    return x


@dataclass(frozen=True)
class Isometry:
    """Plane isometry applied as x -> g(x) + z with g orthogonal.

    g rotates by theta, after first reflecting across the x-axis when
    ``reflect`` is set.  Matrix entries within 1e-12 of -1, 0, or 1 snap
    exactly, so quarter-turn isometries act exactly on dyadic data.
    """

    theta: float
    reflect: bool
    z: tuple[float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "z", (float(self.z[0]), float(self.z[1])))

    def matrix(self) -> np.ndarray:
        c = _snap(math.cos(self.theta))
        s = _snap(math.sin(self.theta))
        g = np.array([[c, -s], [s, c]])
        if self.reflect:
            g = g @ np.array([[1.0, 0.0], [0.0, -1.0]])
        return g

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix().T + np.asarray(self.z)

    @staticmethod
    def identity() -> "Isometry":
        return Isometry(0.0, False, (0.0, 0.0))

    @staticmethod
    def translation(z: Sequence[float]) -> "Isometry":
        return Isometry(0.0, False, (z[0], z[1]))


def squares_to_quads(corners: np.ndarray, side: float) -> np.ndarray:
    """(N, 2) lower-left corners of equal squares -> (N, 4, 2) ccw vertex arrays."""
    c = np.asarray(corners, dtype=float).reshape(-1, 2)
    offs = np.array([[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]])
    return c[:, None, :] + offs[None, :, :]


def transform_quads(quads: np.ndarray, iso: Isometry) -> np.ndarray:
    q = np.asarray(quads, dtype=float)
    return q @ iso.matrix().T + np.asarray(iso.z)


def quads_disjoint(p: np.ndarray, q: np.ndarray) -> bool:
    """True when two convex quads share no point (closed sets, SAT test)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    for poly in (p, q):
        edges = np.roll(poly, -1, axis=0) - poly
        for ex, ey in edges:
            axis = np.array([-ey, ex])
            norm = math.hypot(*axis)
            if norm == 0.0:
                continue
            pa = p @ axis
            qa = q @ axis
            if pa.max() < qa.min() or qa.max() < pa.min():
                return True
    return False


_QUAD_BLOCK_LIMIT = 40_000_000


def rasterize_quads(quads: np.ndarray, bounds: Square, level: int) -> BoxGrid:
    """Conservative rasterization of convex quads (images of squares).

    A cell is occupied iff it meets a quad, where the quad's axis-aligned
    extent is treated half open (like rasterize) and the rotated edge
    directions are tested closed.  Identity and quarter-turn images of
    grid-aligned squares therefore reproduce exact occupancy.
    """
    quads = np.asarray(quads, dtype=float).reshape(-1, 4, 2)
    n = 1 << level
    bits = np.zeros((n, n), dtype=bool)
    if len(quads) == 0:
        return BoxGrid(bounds, level, bits)

    w = bounds.side / n
    x0, y0 = bounds.corner

    e1 = quads[:, 1] - quads[:, 0]
    e2 = quads[:, 3] - quads[:, 0]
    congruent = (
        np.ptp(e1, axis=0).max() < 1e-12 if len(quads) > 1 else True
    ) and (np.ptp(e2, axis=0).max() < 1e-12 if len(quads) > 1 else True)

    xmin = quads[:, :, 0].min(axis=1)
    xmax = quads[:, :, 0].max(axis=1)
    ymin = quads[:, :, 1].min(axis=1)
    ymax = quads[:, :, 1].max(axis=1)
    ix_lo, ix_hi, vx = _index_ranges(xmin, xmax, x0, w, n)
    iy_lo, iy_hi, vy = _index_ranges(ymin, ymax, y0, w, n)
    ok = vx & vy
    if not ok.any():
        return BoxGrid(bounds, level, bits)

    u = e1[0] / np.linalg.norm(e1[0])
    v = e2[0] / np.linalg.norm(e2[0])
    axis_aligned = congruent and min(abs(u[0]), abs(u[1])) < 1e-12 and min(abs(v[0]), abs(v[1])) < 1e-12

    bw = int((ix_hi[ok] - ix_lo[ok]).max()) + 1
    bh = int((iy_hi[ok] - iy_lo[ok]).max()) + 1
    if congruent and int(ok.sum()) * bw * bh <= _QUAD_BLOCK_LIMIT:
        idx = np.nonzero(ok)[0]
        dxs = np.arange(bw)
        dys = np.arange(bh)
        ix = ix_lo[idx, None, None] + dxs[None, None, :]
        iy = iy_lo[idx, None, None] + dys[None, :, None]
        keep = (ix <= ix_hi[idx, None, None]) & (iy <= iy_hi[idx, None, None])
        if not axis_aligned:
            cx = x0 + ix * w
            cy = y0 + iy * w
            for axis in (u, v):
                base = cx * axis[0] + cy * axis[1]
                amin = base + w * (min(axis[0], 0.0) + min(axis[1], 0.0))
                amax = base + w * (max(axis[0], 0.0) + max(axis[1], 0.0))
                rel = quads[0] @ axis
                off = quads[idx, 0, 0] * axis[0] + quads[idx, 0, 1] * axis[1] - rel[0]
                lo = off + rel.min()
                hi = off + rel.max()
                keep &= (amax >= lo[:, None, None]) & (amin <= hi[:, None, None])
        flat = (iy * n + ix)[keep]
        bits.reshape(-1)[flat] = True
        return BoxGrid(bounds, level, bits)

    for i in np.nonzero(ok)[0]:
        _raster_one_quad(quads[i], bits, x0, y0, w, n,
                         ix_lo[i], ix_hi[i], iy_lo[i], iy_hi[i])
    return BoxGrid(bounds, level, bits)


def _raster_one_quad(quad, bits, x0, y0, w, n, ix_lo, ix_hi, iy_lo, iy_hi) -> None:
    e1 = quad[1] - quad[0]
    e2 = quad[3] - quad[0]
    ix = np.arange(ix_lo, ix_hi + 1)
    iy = np.arange(iy_lo, iy_hi + 1)
    keep = np.ones((len(iy), len(ix)), dtype=bool)
    for edge in (e1, e2):
        norm = np.linalg.norm(edge)
        if norm == 0.0:
            continue
        axis = edge / norm
        if min(abs(axis[0]), abs(axis[1])) < 1e-12:
            continue
        cx = x0 + ix * w
        cy = y0 + iy * w
        base = cy[:, None] * axis[1] + cx[None, :] * axis[0]
        amin = base + w * (min(axis[0], 0.0) + min(axis[1], 0.0))
        amax = base + w * (max(axis[0], 0.0) + max(axis[1], 0.0))
        proj = quad @ axis
        keep &= (amax >= proj.min()) & (amin <= proj.max())
    bits[iy_lo:iy_hi + 1, ix_lo:ix_hi + 1] |= keep
