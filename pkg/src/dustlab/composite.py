"""Composite construction: dimension-rich annuli, dust placement, assembly.

Around a point p whose neighborhoods keep the full dimension of E, a
nested chain of concentric open squares S_1 > S_2 > ... defines annuli
R_n = S_n minus S_{n+1}.  Every other annulus receives a Cantor-dust copy
whose dimension b_n satisfies 2 - d_n < b_n < 2 and b_n > 3/2, scaled
below half the width of both neighboring odd annuli so distinct copies
can never touch, and placed by a randomized isometry search that
maximizes the measured dimension of copy-with-E overlap inside the
annulus.  The union G of the placed copies plus p meets E in the subset
E' = G n E whose dimension estimate the report compares against E's.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .boxdim import (DimensionEstimate, ScaleSchedule, box_counts,
                     estimate_dimension, find_full_dimension_point)
from .cantor import (alpha_for_dimension, generate_cantor, placed_frame,
                     scale_and_place)
from .errors import AssemblyError, ConstructionError, ParameterError, PlacementError
from .geometry import (BoxGrid, Isometry, Square, grid_intersection,
                       quads_disjoint, rasterize_quads)
from .intersect import sample_isometry

#: Copies are generated no deeper than this many subdivision steps.
MAX_COPY_DEPTH = 8
#: Fraction of the admissible maximum used as the actual copy diameter,
#: keeping the strict diameter inequality robust to replay arithmetic.
DIAMETER_SAFETY = 0.999


@dataclass(frozen=True)
class AnnulusChain:
    """Concentric square shells around a center point.

    half_widths holds K+1 strictly decreasing values; annulus n (1-based)
    is the set of points with Chebyshev distance to the center in
    [half_widths[n], half_widths[n-1]).
    """

    center: tuple[float, float]
    half_widths: tuple[float, ...]

    def __post_init__(self) -> None:
        hw = tuple(float(r) for r in self.half_widths)
        if len(hw) < 2 or any(b >= a for a, b in zip(hw, hw[1:])) or hw[-1] <= 0:
            raise ParameterError("half widths must be strictly decreasing and positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "half_widths", hw)

    @property
    def count(self) -> int:
        return len(self.half_widths) - 1

    def width(self, n: int) -> float:
        return self.half_widths[n - 1] - self.half_widths[n]

    def annulus_mask(self, grid: BoxGrid, n: int) -> np.ndarray:
        d = _cheb_distances(grid, self.center)
        return (d >= self.half_widths[n]) & (d < self.half_widths[n - 1])


@dataclass(frozen=True)
class PlacementRecord:
    """One accepted dust copy: its parameters, motion, and measured slope."""

    index: int
    alpha: float
    depth: int
    diameter: float
    iso: Isometry
    estimate: DimensionEstimate

    @property
    def slope(self) -> float:
        return self.estimate.slope

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "alpha": self.alpha,
            "depth": self.depth,
            "diameter": self.diameter,
            "theta": self.iso.theta,
            "reflect": self.iso.reflect,
            "z": list(self.iso.z),
            "slope": self.slope,
        }


@dataclass(frozen=True)
class CompositePlan:
    """Everything needed to replay the construction's geometric predicates."""

    center: tuple[float, float]
    half_widths: tuple[float, ...]
    d_seq: tuple[float, ...]
    b_seq: tuple[float, ...]
    placements: tuple[PlacementRecord, ...]

    def to_json(self) -> str:
        doc = {
            "center": list(self.center),
            "half_widths": list(self.half_widths),
            "d_seq": list(self.d_seq),
            "b_seq": list(self.b_seq),
            "placements": [p.to_dict() for p in self.placements],
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "CompositePlan":
        doc = json.loads(text)
        placements = tuple(
            PlacementRecord(
                int(p["index"]), float(p["alpha"]), int(p["depth"]), float(p["diameter"]),
                Isometry(float(p["theta"]), bool(p["reflect"]), tuple(p["z"])),
                DimensionEstimate({}, float(p["slope"]), 0.0, 0.0, (0, 0)),
            )
            for p in doc["placements"]
        )
        return CompositePlan(tuple(doc["center"]), tuple(doc["half_widths"]),
                             tuple(doc["d_seq"]), tuple(doc["b_seq"]), placements)


@dataclass(frozen=True)
class ConstructionReport:
    dim_e: DimensionEstimate
    dim_eprime: DimensionEstimate
    annulus_slopes: dict[int, float]
    disjoint: bool
    containment: bool

    def csv_lines(self) -> list[str]:
        lines = ["metric,value"]
        lines.append(f"dim_e_slope,{self.dim_e.slope:.12g}")
        lines.append(f"dim_e_r2,{self.dim_e.r2:.12g}")
        lines.append(f"dim_eprime_slope,{self.dim_eprime.slope:.12g}")
        lines.append(f"dim_eprime_r2,{self.dim_eprime.r2:.12g}")
        for idx in sorted(self.annulus_slopes):
            lines.append(f"annulus_{idx}_slope,{self.annulus_slopes[idx]:.12g}")
        lines.append(f"copies_disjoint,{int(self.disjoint)}")
        lines.append(f"subset_of_e,{int(self.containment)}")
        return lines


@dataclass(frozen=True)
class PipelineResult:
    point: tuple[float, float]
    plan: CompositePlan
    chain: AnnulusChain | None
    g_grid: BoxGrid
    eprime: BoxGrid
    report: ConstructionReport


def _cheb_distances(grid: BoxGrid, center) -> np.ndarray:
    w = grid.cell_size
    x0, y0 = grid.bounds.corner
    xs = x0 + (np.arange(grid.size) + 0.5) * w
    ys = y0 + (np.arange(grid.size) + 0.5) * w
    return np.maximum(np.abs(ys[:, None] - center[1]), np.abs(xs[None, :] - center[0]))


def _masked(grid: BoxGrid, mask: np.ndarray) -> BoxGrid:
    return BoxGrid(grid.bounds, grid.level, grid.bits & mask)


def _slice_schedule(grid: BoxGrid, extent: float) -> ScaleSchedule:
    """Levels that resolve a feature of the given extent, up to the raster."""
    lo = int(math.ceil(math.log2(max(grid.bounds.side / max(extent, grid.cell_size), 1.0))))
    lo = max(2, min(lo, grid.level - 2))
    return ScaleSchedule.span(lo, grid.level)


def _slice_estimate(grid: BoxGrid, extent: float) -> DimensionEstimate:
    """Slope of a concentrated slice, fitted over all of its resolved levels.

    The default window trim is meant for full-size sets; for thin slices
    the finest raster levels carry the structure, so the fit keeps them.
    """
    schedule = _slice_schedule(grid, extent)
    counts = box_counts(grid, schedule)
    return estimate_dimension(counts, window=(schedule.levels[0], schedule.levels[-1]),
                              side=grid.bounds.side)


def _union_estimate(grid: BoxGrid, extent: float) -> DimensionEstimate:
    """Slope of a union of copies whose largest member has the given extent.

    At the level whose cells match the copy diameter each copy shows up as
    a cell or two (the placement layout, not the copies' structure), so
    the fit starts one level finer and runs to the raster resolution.
    """
    lo = int(math.ceil(math.log2(max(grid.bounds.side / max(extent, grid.cell_size), 1.0)))) + 1
    lo = max(2, min(lo, grid.level - 2))
    counts = box_counts(grid, ScaleSchedule.span(2, grid.level))
    return estimate_dimension(counts, window=(lo, grid.level), side=grid.bounds.side)


def build_annuli(E: BoxGrid, p, d_seq, min_mass: int) -> AnnulusChain:
    """Shrink radii geometrically until each annulus carries enough of E.

    Each step halves the inner radius until the annulus holds at least
    ``min_mass`` occupied cells and its slice of E fits a slope of at
    least d_n - 0.1.  Failure at any index raises ConstructionError
    naming it.
    """
    d_seq = [float(d) for d in d_seq]
    if not d_seq or any(not 0.0 < d < 2.0 for d in d_seq):
        raise ParameterError(f"d sequence must lie in (0, 2), got {d_seq}")
    if any(b <= a for a, b in zip(d_seq, d_seq[1:])):
        raise ParameterError(f"d sequence must be strictly increasing, got {d_seq}")
    if not E.bounds.contains_point(p):
        raise ParameterError(f"center {tuple(p)} lies outside the grid bounds")

    x0, y0 = E.bounds.corner
    x1, y1 = E.bounds.max_corner
    clearance = min(p[0] - x0, x1 - p[0], p[1] - y0, y1 - p[1])
    cell = E.cell_size
    r = 0.95 * clearance
    if r < 2.0 * cell:
        raise ConstructionError("annulus 1: center too close to the bounds to fit any shell")

    cheb = _cheb_distances(E, p)
    radii = [r]
    for n, d_n in enumerate(d_seq, start=1):
        r_out = radii[-1]
        chosen = None
        r_in = r_out / 2.0
        while r_in >= cell:
            mask = (cheb >= r_in) & (cheb < r_out)
            mass = int(np.count_nonzero(E.bits & mask))
            if mass >= min_mass:
                est = _slice_estimate(_masked(E, mask), r_out - r_in)
                if est.slope >= d_n - 0.1:
                    chosen = r_in
                    break
            r_in /= 2.0
        if chosen is None:
            raise ConstructionError(
                f"annulus {n}: no inner radius gives mass >= {min_mass} and slope >= {d_n - 0.1:.4g}")
        radii.append(chosen)
    return AnnulusChain((float(p[0]), float(p[1])), tuple(radii))


def choose_b_sequence(d_seq) -> tuple[float, ...]:
    """Dust dimensions for the even annuli: b_n = 2 - min(d_n, 1/2, 1/(n+1))/2.

    The shrinking correction keeps every constraint checkable:
    it stays below d_n (so b_n > 2 - d_n), below 1/4 (so b_n > 3/2),
    and it vanishes, driving b_n toward 2.
    """
    b = []
    for n, d_n in enumerate((float(d) for d in d_seq), start=1):
        if not 0.0 < d_n < 2.0:
            raise ParameterError(f"d values must lie in (0, 2), got {d_n}")
        c_n = min(d_n, 0.5, 1.0 / (n + 1)) / 2.0
        b.append(2.0 - c_n)
    return tuple(b)


def _copy_depth(alpha: float, diameter: float, cell: float) -> int:
    """Deep enough that scaled leaves shrink to cell size, within budget."""
    target = cell * math.sqrt(2.0) / diameter
    if target >= 1.0:
        return 1
    depth = int(math.ceil(math.log(target) / math.log(alpha)))
    return max(1, min(depth, MAX_COPY_DEPTH))


def placement_diameter(chain: AnnulusChain, index: int) -> float:
    """Largest admissible copy diameter for an even annulus.

    Stays strictly below half the width of both neighboring odd annuli
    (the outer one alone for the last annulus, which has no inner even
    neighbor left to protect).
    """
    if index % 2 != 0 or not 2 <= index <= chain.count:
        raise ParameterError(f"placement index must be an even annulus index, got {index}")
    limits = [chain.width(index - 1)]
    if index + 1 <= chain.count:
        limits.append(chain.width(index + 1))
    return DIAMETER_SAFETY * min(limits) / 2.0


def place_cantor_in_annulus(E: BoxGrid, chain: AnnulusChain, index: int, b: float,
                            trials: int, seed: int,
                            schedule_extent: float | None = None) -> PlacementRecord:
    """Randomized isometry search for one dust copy inside an even annulus.

    The copy gets the largest admissible diameter (just under half the
    width of the neighboring odd annuli), and the search keeps the motion
    whose copy meets the annulus slice of E with the best measured slope.
    ``schedule_extent`` fixes the feature size whose scales the slope fit
    spans (so slopes of copies in different annuli stay comparable); it
    defaults to the copy's own diameter.  Raises PlacementError when every
    trial misses.
    """
    diameter = placement_diameter(chain, index)
    if not diameter > 0.0:
        raise ParameterError(f"annulus {index} leaves no room for a copy")

    alpha = alpha_for_dimension(b)
    depth = _copy_depth(float(alpha), diameter, E.cell_size)
    copy = generate_cantor(alpha, depth)

    mask = chain.annulus_mask(E, index)
    slice_grid = _masked(E, mask)
    if slice_grid.is_empty():
        raise PlacementError(f"annulus {index} holds no cells of the target set")
    extent = schedule_extent if schedule_extent is not None else diameter
    window_half = chain.half_widths[index - 1] + 1.5 * diameter
    window = Square.centered(chain.center, window_half)

    best: tuple[float, Isometry, DimensionEstimate] | None = None
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        iso = sample_isometry(rng, window)
        quads = scale_and_place(copy, diameter, iso)
        copy_grid = rasterize_quads(quads, E.bounds, E.level)
        if not (copy_grid.bits & mask).any():
            continue
        inter = grid_intersection(slice_grid, copy_grid)
        if inter.is_empty():
            continue
        est = _slice_estimate(inter, extent)
        if best is None or est.slope > best[0] + 1e-12:
            best = (est.slope, iso, est)
    if best is None:
        raise PlacementError(f"annulus {index}: no trial intersected the annulus slice of the set")
    return PlacementRecord(index, float(alpha), depth, diameter, best[1], best[2])


def _placement_grid(placement: PlacementRecord, bounds: Square, level: int) -> BoxGrid:
    copy = generate_cantor(placement.alpha, placement.depth)
    quads = scale_and_place(copy, placement.diameter, placement.iso)
    return rasterize_quads(quads, bounds, level)


def _placements_disjoint(placements) -> bool:
    frames = [placed_frame(p.diameter, p.iso) for p in placements]
    for i in range(len(placements)):
        for j in range(i + 1, len(placements)):
            if quads_disjoint(frames[i], frames[j]):
                continue
            a = scale_and_place(generate_cantor(placements[i].alpha, placements[i].depth),
                                placements[i].diameter, placements[i].iso)
            b = scale_and_place(generate_cantor(placements[j].alpha, placements[j].depth),
                                placements[j].diameter, placements[j].iso)
            if any(not quads_disjoint(qa, qb) for qa in a for qb in b):
                return False
    return True


def assemble_composite(E: BoxGrid, chain: AnnulusChain, placements):
    """Union the placed copies (plus the center cell) and intersect with E.

    Returns (G, E', report).  Raises AssemblyError when the exact
    geometric disjointness check fails, which indicates a diameter
    constraint was violated upstream.
    """
    placements = list(placements)
    if not placements:
        raise ParameterError("need at least one placement to assemble")
    bits = np.zeros_like(E.bits)
    for placement in placements:
        bits |= _placement_grid(placement, E.bounds, E.level).bits
    ix, iy = E.point_cell(chain.center)
    bits[iy, ix] = True
    if not _placements_disjoint(placements):
        raise AssemblyError("placed copies overlap; diameter constraints were not honored")

    g_grid = BoxGrid(E.bounds, E.level, bits)
    eprime = grid_intersection(g_grid, E)

    dim_e = estimate_dimension(box_counts(E, ScaleSchedule.default_for(E)), side=E.bounds.side)
    dim_eprime = _union_estimate(eprime, max(p.diameter for p in placements))
    containment = bool(np.all(~eprime.bits | E.bits))
    report = ConstructionReport(
        dim_e=dim_e,
        dim_eprime=dim_eprime,
        annulus_slopes={p.index: p.slope for p in placements},
        disjoint=True,
        containment=containment,
    )
    return g_grid, eprime, report


def check_plan(plan: CompositePlan) -> list[str]:
    """Independent replay of every constraint a plan promises.

    Returns human-readable violation strings; an empty list means the
    b-sequence bounds, diameter bounds, and pairwise copy disjointness
    all hold.
    """
    issues = []
    K = len(plan.half_widths) - 1
    for n, (d_n, b_n) in enumerate(zip(plan.d_seq, plan.b_seq), start=1):
        if not 2.0 - d_n < b_n:
            issues.append(f"b[{n}] = {b_n:.6g} is not above 2 - d = {2.0 - d_n:.6g}")
        if not b_n < 2.0:
            issues.append(f"b[{n}] = {b_n:.6g} is not below 2")
        if not b_n > 1.5:
            issues.append(f"b[{n}] = {b_n:.6g} is not above 3/2")
    if any(b >= a for a, b in zip(plan.half_widths, plan.half_widths[1:])):
        issues.append("half widths are not strictly decreasing")
    widths = [plan.half_widths[i] - plan.half_widths[i + 1] for i in range(K)]
    for p in plan.placements:
        limits = [widths[p.index - 2]]
        if p.index < K:
            limits.append(widths[p.index])
        bound = min(limits) / 2.0
        if not p.diameter < bound:
            issues.append(f"copy {p.index} diameter {p.diameter:.6g} is not below {bound:.6g}")
    if len(plan.placements) > 1 and not _placements_disjoint(plan.placements):
        issues.append("placed copies are not pairwise disjoint")
    return issues


def _single_point_result(E: BoxGrid, dim_e: DimensionEstimate) -> PipelineResult:
    iy, ix = np.argwhere(E.bits)[0]
    bits = np.zeros_like(E.bits)
    bits[iy, ix] = True
    eprime = BoxGrid(E.bounds, E.level, bits)
    point = E.cell_center(int(ix), int(iy))
    counts = box_counts(eprime, ScaleSchedule.default_for(E))
    dim_ep = estimate_dimension(counts, side=E.bounds.side)
    plan = CompositePlan(point, (E.bounds.side / 2.0, E.bounds.side / 4.0), (), (), ())
    report = ConstructionReport(dim_e, dim_ep, {}, True, True)
    return PipelineResult(point, plan, None, eprime, eprime, report)


def run_pipeline(E: BoxGrid, annuli: int = 6, trials: int = 480, seed: int = 0,
                 min_mass: int = 24, d_shape: float = 0.7,
                 jobs: int = 1) -> PipelineResult:
    """End-to-end construction of E' = G n E for a rasterized compact set.

    Estimates dim E, targets a d sequence rising toward it, builds the
    annulus chain around a clearance-filtered full-dimension point, places
    copies in the even annuli, and assembles the result.  Sets that are
    essentially a point short-circuit to the single-cell answer.
    Per-annulus searches are independent; ``jobs`` runs them in parallel
    without changing the outcome.
    """
    if E.is_empty():
        raise ParameterError("input set has no occupied cells")
    if annuli < 2:
        raise ParameterError(f"need at least 2 annuli, got {annuli}")
    dim_e = estimate_dimension(box_counts(E, ScaleSchedule.default_for(E)), side=E.bounds.side)
    if E.occupied_count < min_mass or dim_e.slope < 0.05:
        return _single_point_result(E, dim_e)

    est = min(dim_e.slope, 1.95)
    d_seq = tuple(min(est * (1.0 - d_shape / (n + 1)), 1.95) for n in range(1, annuli + 1))
    p = find_full_dimension_point(E, min_clearance=E.bounds.side / 4.0)
    chain = build_annuli(E, p, d_seq, min_mass)
    b_seq = choose_b_sequence(d_seq)

    even_indices = list(range(2, chain.count + 1, 2))
    if not even_indices:
        raise ConstructionError("no even annulus available for placement")
    common_extent = max(placement_diameter(chain, i) for i in even_indices)

    def place(index: int) -> PlacementRecord:
        return place_cantor_in_annulus(E, chain, index, b_seq[index - 1], trials,
                                       seed + 1000 * index, schedule_extent=common_extent)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            placements = list(pool.map(place, even_indices))
    else:
        placements = [place(i) for i in even_indices]

    g_grid, eprime, report = assemble_composite(E, chain, placements)
    plan = CompositePlan(chain.center, chain.half_widths, d_seq, b_seq, tuple(placements))
    return PipelineResult(p, plan, chain, g_grid, eprime, report)
