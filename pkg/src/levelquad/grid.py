"""Uniform node grids, narrow-band iteration and deterministic summation."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from . import accel
from .errors import EmptyBandWarning

BLOCK_NODES = 1 << 18


class Side(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    BOTH = "both"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"+": cls.POSITIVE, "pos": cls.POSITIVE, "outer": cls.POSITIVE,
                   "-": cls.NEGATIVE, "neg": cls.NEGATIVE, "inner": cls.NEGATIVE}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown side {value!r}") from None


@dataclass(frozen=True)
class GridSpec:
    """Nodes ``-extent + i h`` for ``i = 0..n_nodes-1`` along every axis, ``h = 2/N``.

    With the default ``extent = 1`` the nodes are ``i h - 1`` for ``i = 0..N``.
    Larger extents keep the spacing and add whole cells on each side; this
    is needed when a band reaches outside the unit box.
    """
    dim: int
    n_cells: int
    extent: float = 1.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValueError("n_cells must be an integer >= 2")
        if not self.extent >= 1.0:
            raise ValueError("extent must be >= 1")
        cells = 2.0 * self.extent / self.spacing
        if abs(cells - round(cells)) > 1e-9 * cells:
            raise ValueError("extent must be a whole number of cells")

    @property
    def spacing(self):
        return 2.0 / self.n_cells

    h = spacing

    @property
    def n_nodes(self):
        """Nodes per axis."""
        return int(round(self.extent * self.n_cells)) + 1

    @property
    def total_nodes(self):
        return self.n_nodes ** self.dim

    def axis(self):
        return np.arange(self.n_nodes) * self.spacing - self.extent

    def node_volume(self):
        return self.spacing ** self.dim

    def blocks(self, block_nodes=BLOCK_NODES):
        """Deterministic partition of axis 0 into ``(start, stop)`` slabs."""
        n = self.n_nodes
        per_slice = n ** (self.dim - 1)
        rows = max(1, block_nodes // per_slice)
        return [(s, min(s + rows, n)) for s in range(0, n, rows)]

    def slab_points(self, start, stop):
        """Coordinates of all nodes with axis-0 index in ``[start, stop)``."""
        x = self.axis()
        axes = [x[start:stop]] + [x] * (self.dim - 1)
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def slab_indices(self, start, stop):
        n = self.n_nodes
        ranges = [np.arange(start, stop)] + [np.arange(n)] * (self.dim - 1)
        mesh = np.meshgrid(*ranges, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def points(self):
        return self.slab_points(0, self.n_nodes)


@dataclass(frozen=True)
class BandBlock:
    start: int
    indices: np.ndarray
    points: np.ndarray
    phi: np.ndarray

    def __len__(self):
        return self.phi.shape[0]


def band_mask(values, eps, side):
    """Nodes with level value in (0, eps], [-eps, 0) or [-eps, eps]."""
    if side is Side.POSITIVE:
        return (values > 0.0) & (values <= eps)
    if side is Side.NEGATIVE:
        return (values < 0.0) & (values >= -eps)
    return np.abs(values) <= eps


def iter_band_blocks(grid, field, eps, side=Side.BOTH, shift=0.0, block_nodes=BLOCK_NODES):
    """Yield one :class:`BandBlock` per slab, including empty ones.

    ``phi`` in each block holds the raw field value; the band test uses
    ``phi - shift``.
    """
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    if field.dim != grid.dim:
        raise ValueError("field and grid dimensions differ")
    side = Side.parse(side)
    for start, stop in grid.blocks(block_nodes):
        pts = grid.slab_points(start, stop)
        phi = np.asarray(field.phi(pts), dtype=np.float64)
        keep = np.flatnonzero(band_mask(phi - shift, eps, side))
        idx = grid.slab_indices(start, stop)[keep] if keep.size else np.empty((0, grid.dim), np.int64)
        yield BandBlock(start, idx, pts[keep], phi[keep])


def iterate_band(grid, field, eps, side=Side.BOTH, shift=0.0):
    """Stream ``(index, point, phi)`` for band nodes in lexicographic order.

    Emits :class:`EmptyBandWarning` when no node qualifies.
    """
    count = 0
    for block in iter_band_blocks(grid, field, eps, side, shift):
        for k in range(len(block)):
            count += 1
            yield tuple(int(i) for i in block.indices[k]), block.points[k], float(block.phi[k])
    if count == 0:
        warnings.warn(EmptyBandWarning(f"no node within eps={eps:g} of the level set"), stacklevel=2)


def band_count(grid, field, eps, side=Side.BOTH, shift=0.0):
    return sum(len(b) for b in iter_band_blocks(grid, field, eps, side, shift))


def compensated_sum(terms, chunks=1):
    """Correctly rounded sum of ``terms``.

    Each chunk is reduced to an exact expansion and the expansions are
    merged, so the result is the same for every chunk count.
    """
    values = np.asarray(list(terms) if not isinstance(terms, np.ndarray) else terms, dtype=np.float64).ravel()
    if values.size == 0:
        return 0.0
    chunks = max(1, int(chunks))
    parts = [accel.exact_partials(c) for c in np.array_split(values, chunks)]
    return accel.merge_partials(parts)

