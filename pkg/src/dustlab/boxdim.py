"""Box counting across scales and least-squares dimension estimation.

Counts N(delta) of occupied cells at cell size delta = side * 2**-m are
fitted as log N against log(1/delta); the slope is the box-counting
dimension estimate.  The default regression window drops the coarsest
level and the two finest: the coarsest is polluted by the bounding box,
the finest by finite construction depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cantor import CantorApproximant
from .errors import ParameterError
from .geometry import BoxGrid, Square, rasterize

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ScaleSchedule:
    """Strictly increasing grid levels; the regression needs at least three."""

    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        levels = tuple(int(m) for m in self.levels)
        if len(levels) < 3:
            raise ParameterError(f"schedule needs at least 3 levels, got {levels}")
        if any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] < 0:
            raise ParameterError(f"levels must be strictly increasing and nonnegative, got {levels}")
        object.__setattr__(self, "levels", levels)

    @staticmethod
    def span(lo: int, hi: int, step: int = 1) -> "ScaleSchedule":
        return ScaleSchedule(tuple(range(lo, hi + 1, step)))

    @staticmethod
    def default_for(grid: BoxGrid) -> "ScaleSchedule":
        lo = 2 if grid.level >= 4 else 0
        return ScaleSchedule.span(lo, grid.level)


@dataclass(frozen=True)
class DimensionEstimate:
    """Per-scale counts plus the fitted log-log slope over a level window."""

    counts: dict[int, int]
    slope: float
    intercept: float
    r2: float
    window: tuple[int, int]
    empty: bool = False

    def summary_line(self) -> str:
        return (f"{self.slope:.12g},{self.intercept:.12g},{self.r2:.12g},"
                f"{self.window[0]}:{self.window[1]}")


def box_counts(source, schedule: ScaleSchedule, bounds: Square | None = None) -> dict[int, int]:
    """Occupied-cell counts per schedule level.

    ``source`` may be a BoxGrid (schedule levels must not exceed its
    resolution), a CantorApproximant, or a sequence of Square objects.
    Square input is rasterized once at the finest level and OR-reduced;
    under the half-open convention this equals per-level rasterization.
    """
    top = max(schedule.levels)
    if isinstance(source, BoxGrid):
        if top > source.level:
            raise ParameterError(f"schedule level {top} exceeds grid resolution {source.level}")
        grid = source
    else:
        if bounds is None:
            bounds = Square.unit()
        if isinstance(source, CantorApproximant):
            grid = rasterize(source.leaf_corners(), bounds, top, side=source.side)
        else:
            grid = rasterize(source, bounds, top)
    counts: dict[int, int] = {}
    current = grid
    for m in sorted(schedule.levels, reverse=True):
        current = current.downsampled(m)
        counts[m] = current.occupied_count
    return dict(sorted(counts.items()))


def estimate_dimension(counts: Mapping[int, int], window: tuple[int, int] | None = None,
                       side: float = 1.0) -> DimensionEstimate:
    """Ordinary least squares of log N against log(1/delta).

    ``window`` restricts the fit to levels in [lo, hi]; None applies the
    default drop rule when enough levels remain and otherwise uses all of
    them.  A flat count profile reports slope 0 with r2 fixed at 1, and an
    all-zero profile is flagged empty.
    """
    levels = sorted(int(m) for m in counts)
    if len(levels) < 3:
        raise ParameterError(f"need counts at 3 or more levels, got {len(levels)}")
    if window is None:
        trimmed = levels[1:-2]
        used = trimmed if len(trimmed) >= 3 else levels
    else:
        lo, hi = window
        used = [m for m in levels if lo <= m <= hi]
        if len(used) < 3:
            raise ParameterError(f"window {window} keeps {len(used)} levels, need at least 3")
    win = (used[0], used[-1])
    values = [int(counts[m]) for m in used]

    if all(v == 0 for v in values):
        return DimensionEstimate(dict(counts), 0.0, 0.0, 1.0, win, empty=True)
    if any(v <= 0 for v in values):
        raise ParameterError("counts inside the window must all be positive or all be zero")
    if len(set(values)) == 1:
        intercept = math.log(values[0])
        return DimensionEstimate(dict(counts), 0.0, intercept, 1.0, win)

    x = np.array([m * LN2 - math.log(side) for m in used])
    y = np.log(np.array(values, dtype=float))
    xm = x.mean()
    ym = y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    sstot = float(((y - ym) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / sstot if sstot > 0 else 1.0
    return DimensionEstimate(dict(counts), slope, intercept, r2, win)


def counts_csv_lines(counts: Mapping[int, int], side: float = 1.0) -> list[str]:
    lines = ["level,delta,count"]
    for m in sorted(counts):
        lines.append(f"{m},{side * 2.0 ** -m:.12g},{counts[m]}")
    return lines


def clip_to_ball(grid: BoxGrid, p: Sequence[float], radius: float) -> BoxGrid:
    """Restrict a grid to the closed Chebyshev ball B(p, radius).

    Cells survive when their half-open extent meets the closed ball, which
    keeps the clipped set a union of whole cells of the original raster.
    """
    if radius <= 0:
        raise ParameterError(f"radius must be positive, got {radius!r}")
    w = grid.cell_size
    x0, y0 = grid.bounds.corner
    n = grid.size

    def span(c, o):
        lo = max(int(math.floor((c - radius - o) / w)), 0)
        hi = min(int(math.floor((c + radius - o) / w)), n - 1)
        return lo, hi

    ix0, ix1 = span(p[0], x0)
    iy0, iy1 = span(p[1], y0)
    bits = np.zeros_like(grid.bits)
    if ix0 <= ix1 and iy0 <= iy1:
        bits[iy0:iy1 + 1, ix0:ix1 + 1] = grid.bits[iy0:iy1 + 1, ix0:ix1 + 1]
    return BoxGrid(grid.bounds, grid.level, bits)


def _ball_schedule(grid: BoxGrid, radius: float) -> ScaleSchedule:
    # finest scales of the raster, starting where cells resolve the ball
    lo = max(0, int(math.ceil(math.log2(max(2.0 * grid.bounds.side / radius, 1.0)))))
    lo = min(lo, grid.level - 2)
    return ScaleSchedule.span(max(lo, 0), grid.level)


def local_dimension_profile(grid: BoxGrid, p: Sequence[float], radii: Sequence[float],
                            schedule: ScaleSchedule | None = None) -> list[DimensionEstimate]:
    """Dimension estimates of the set clipped to shrinking balls around p.

    Radii must decrease.  Unless given, the schedule per radius spans the
    levels that resolve the ball up to the raster resolution.  An empty
    clip yields an estimate flagged empty.
    """
    if not grid.bounds.contains_point(p):
        raise ParameterError(f"point {tuple(p)} lies outside the grid bounds")
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ParameterError(f"radii must be strictly decreasing, got {radii}")
    out = []
    for r in radii:
        clipped = clip_to_ball(grid, p, r)
        sched = schedule if schedule is not None else _ball_schedule(grid, r)
        counts = box_counts(clipped, sched)
        out.append(estimate_dimension(counts, side=grid.bounds.side))
    return out


def find_full_dimension_point(grid: BoxGrid, candidate_level: int = 4,
                              radii: Sequence[float] | None = None,
                              min_clearance: float = 0.0) -> tuple[float, float]:
    """Occupied-cell center whose neighborhood keeps the most dimension.

    Scans occupied cells of a coarse candidate grid; each candidate is
    represented by its first occupied fine cell (row-major from the bottom
    row) and scored by the minimum local slope over a fixed radius ladder.
    Ties keep the earliest candidate in row-major order.  ``min_clearance``
    optionally discards candidates closer than that to the bounds edge
    (falling back to the unfiltered scan if none survive).
    """
    if grid.is_empty():
        raise ParameterError("cannot locate a point in an empty set")
    side = grid.bounds.side
    if radii is None:
        radii = (side / 8.0, side / 16.0, side / 32.0)
    clevel = min(candidate_level, grid.level)
    coarse = grid.downsampled(clevel)
    factor = 1 << (grid.level - clevel)

    def representative(cy: int, cx: int) -> tuple[float, float]:
        block = grid.bits[cy * factor:(cy + 1) * factor, cx * factor:(cx + 1) * factor]
        ys, xs = np.nonzero(block)
        k = np.lexsort((xs, ys))[0]
        return grid.cell_center(cx * factor + int(xs[k]), cy * factor + int(ys[k]))

    x0, y0 = grid.bounds.corner
    x1, y1 = grid.bounds.max_corner

    def clearance(p) -> float:
        return min(p[0] - x0, x1 - p[0], p[1] - y0, y1 - p[1])

    for enforce in ((min_clearance,) if min_clearance > 0 else ()) + (0.0,):
        best = None
        best_score = -math.inf
        for cy, cx in zip(*np.nonzero(coarse.bits)):
            p = representative(int(cy), int(cx))
            if clearance(p) < enforce:
                continue
            score = min(est.slope if not est.empty else 0.0
                        for est in local_dimension_profile(grid, p, radii))
            if score > best_score + 1e-12:
                best_score = score
                best = p
        if best is not None:
            return best
    raise ParameterError("cannot locate a point in an empty set")
