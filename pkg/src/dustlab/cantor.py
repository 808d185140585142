"""Four-corner Cantor dust: approximant generation, dimension formulas, placement.

The dust with ratio alpha is the attractor of the four contractions that
map the unit square onto its corner subsquares of side alpha.  The depth-n
approximant is the union of the 4**n generation-n squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import BudgetError, ParameterError
from .geometry import (SQRT2, Alpha, Isometry, Square, SquareAddress, as_alpha,
                       squares_to_quads, transform_quads)

#: Generation is refused once it would materialize more than this many squares.
ADDRESS_BUDGET = 1 << 24


@dataclass(frozen=True, eq=False)
class CantorApproximant:
    """All generation-n squares of the dust, in lexicographic address order."""

    alpha: Alpha
    depth: int
    codes: np.ndarray  # (4**depth, depth) uint8 quadrant codes

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", as_alpha(self.alpha))
        codes = np.asarray(self.codes, dtype=np.uint8)
        if self.depth == 0:
            codes = codes.reshape(1, 0)
        else:
            codes = codes.reshape(-1, self.depth)
        if len(codes) != 4 ** self.depth:
            raise ParameterError(f"expected {4 ** self.depth} addresses, got {len(codes)}")
        if codes.flags.writeable:
            codes = codes.copy()
            codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)

    @property
    def count(self) -> int:
        return len(self.codes)

    @property
    def side(self) -> float:
        """Side length of one generation-depth square."""
        return float(self.alpha) ** self.depth

    @cached_property
    def addresses(self) -> tuple[SquareAddress, ...]:
        from .geometry import Quadrant

        return tuple(
            SquareAddress(tuple(Quadrant(int(c)) for c in row), self.alpha)
            for row in self.codes
        )

    def leaf_corners(self) -> np.ndarray:
        """Lower-left corners of all generation-depth squares, shape (4**n, 2)."""
        a = float(self.alpha)
        n = self.depth
        if n == 0:
            return np.zeros((1, 2))
        weights = np.array([a ** k - a ** (k + 1) for k in range(n)])
        x = ((self.codes & 1) * weights).sum(axis=1)
        y = (((self.codes >> 1) & 1) * weights).sum(axis=1)
        return np.column_stack((x, y))

    def leaf_squares(self) -> list[Square]:
        s = self.side
        return [Square((x, y), s) for x, y in self.leaf_corners()]


def generate_cantor(alpha: Alpha | float, depth: int, budget: int = ADDRESS_BUDGET) -> CantorApproximant:
    """Enumerate the depth-n approximant.

    Addresses come out in lexicographic order (SW < SE < NW < NE per step)
    and the result is deterministic.  Raises BudgetError when 4**depth
    would exceed ``budget``.
    """
    alpha = as_alpha(alpha)
    if depth < 0:
        raise ParameterError(f"depth must be nonnegative, got {depth}")
    count = 4 ** depth
    if count > budget:
        raise BudgetError(f"depth {depth} needs {count} addresses, over the budget of {budget}")
    ids = np.arange(count, dtype=np.int64)
    codes = np.empty((count, depth), dtype=np.uint8)
    for k in range(depth):
        codes[:, k] = (ids >> (2 * (depth - 1 - k))) & 3
    return CantorApproximant(alpha, depth, codes)


def approximant_from_cad(path) -> CantorApproximant:
    """Load a full address list and validate it enumerates one generation."""
    from .formats import read_cad

    alpha, depth, words = read_cad(path)
    codes = np.array(sorted(tuple(int(q) for q in w) for w in words),
                     dtype=np.uint8).reshape(len(words), depth)
    reference = generate_cantor(alpha, depth)
    if not np.array_equal(codes, reference.codes):
        raise ParameterError("address list does not enumerate a full generation")
    return reference


def cantor_dimension(alpha: Alpha | float) -> float:
    """Similarity dimension log 4 / log(1/alpha); strictly increasing in alpha."""
    return -math.log(4.0) / math.log(float(as_alpha(alpha)))


def alpha_for_dimension(d: float) -> Alpha:
    """Inverse of cantor_dimension: the ratio whose dust has dimension d."""
    if not (0.0 < d < 2.0):
        raise ParameterError(f"dimension must lie strictly between 0 and 2, got {d!r}")
    return Alpha(4.0 ** (-1.0 / d))


def scale_and_place(approximant: CantorApproximant, diameter: float, iso: Isometry) -> np.ndarray:
    """Scale a copy to the requested diameter and move it by an isometry.

    The copy is scaled uniformly about the origin of its unit frame so the
    frame diagonal equals ``diameter``, then every leaf square is mapped
    through ``iso``.  Returns the placed leaves as an (N, 4, 2) array of
    corner quads (rotations leave the axis-aligned square family).
    """
    if not diameter > 0.0:
        raise ParameterError(f"diameter must be positive, got {diameter!r}")
    scale = diameter / SQRT2
    quads = squares_to_quads(approximant.leaf_corners() * scale, approximant.side * scale)
    return transform_quads(quads, iso)


def placed_frame(diameter: float, iso: Isometry) -> np.ndarray:
    """Image of the copy's scaled unit frame; bounds every placed leaf."""
    scale = diameter / SQRT2
    frame = squares_to_quads(np.zeros((1, 2)), scale)
    return transform_quads(frame, iso)[0]
