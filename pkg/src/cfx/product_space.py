"""
Block-structured vectors in a finite product of Euclidean spaces.

The space is H = R^{n_1} x ... x R^{n_n}; a point is stored as one flat
float64 array together with its :class:`BlockStructure`.  Component indices
``j`` are 1-based everywhere in the public API.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, ShapeError


@dataclass(frozen=True)
class BlockStructure:
    """Dimensions ``(n_1, ..., n_n)`` of the component spaces."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) == 0:
            raise ShapeError("a block structure needs at least one component")
        if any(d < 1 for d in dims):
            raise ShapeError(f"block dimensions must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def scalar(cls, n: int) -> "BlockStructure":
        """``n`` one-dimensional components (the coordinate splitting of R^n)."""
        return cls((1,) * int(n))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return sum(self.dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.concatenate([[0], np.cumsum(self.dims)]))

    def check_index(self, j: int) -> int:
        """Validate a 1-based component index and return it as ``int``."""
        if isinstance(j, bool) or not isinstance(j, (int, np.integer)):
            raise IndexError(f"component index must be an integer, got {j!r}")
        if not 1 <= j <= self.n:
            raise IndexError(f"component index {j} outside 1..{self.n}")
        return int(j)

    def slice(self, j: int) -> slice:
        j = self.check_index(j)
        return slice(self.offsets[j - 1], self.offsets[j])

    @cached_property
    def component_of(self) -> np.ndarray:
        """For every flat coordinate, the 0-based component it belongs to."""
        return np.repeat(np.arange(self.n), self.dims)

    def expand(self, per_component) -> np.ndarray:
        """Repeat one value per component over that component's coordinates."""
        values = np.asarray(per_component, dtype=float)
        if values.shape[-1] != self.n:
            raise ShapeError(f"expected {self.n} per-component values, got {values.shape[-1]}")
        return values[..., self.component_of]


@dataclass(frozen=True, eq=False)
class ProductVector:
    """A point ``x = (x_1, ..., x_n)`` of the product space.

    The coordinates are held in a read-only flat array; :meth:`block` returns
    read-only views.
    """

    structure: BlockStructure
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True).reshape(-1)
        if arr.shape[0] != self.structure.total:
            raise ShapeError(
                f"expected {self.structure.total} coordinates for dims {self.structure.dims}, "
                f"got {arr.shape[0]}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("product vectors must have finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_blocks(cls, blocks: Iterable) -> "ProductVector":
        parts = [np.atleast_1d(np.asarray(b, dtype=np.float64)).reshape(-1) for b in blocks]
        structure = BlockStructure(tuple(p.shape[0] for p in parts))
        return cls(structure, np.concatenate(parts))

    @classmethod
    def zeros(cls, structure: BlockStructure) -> "ProductVector":
        return cls(structure, np.zeros(structure.total))

    def block(self, j: int) -> np.ndarray:
        return self.data[self.structure.slice(j)]

    @property
    def blocks(self) -> list[np.ndarray]:
        return [self.block(j) for j in range(1, self.structure.n + 1)]

    def with_data(self, data) -> "ProductVector":
        return ProductVector(self.structure, data)

    def __eq__(self, other):
        if not isinstance(other, ProductVector):
            return NotImplemented
        return self.structure == other.structure and np.array_equal(self.data, other.data)

    __hash__ = None

    def __add__(self, other: "ProductVector") -> "ProductVector":
        _check_same(self, other)
        return ProductVector(self.structure, self.data + other.data)

    def __sub__(self, other: "ProductVector") -> "ProductVector":
        _check_same(self, other)
        return ProductVector(self.structure, self.data - other.data)

    def __mul__(self, scale: float) -> "ProductVector":
        return ProductVector(self.structure, float(scale) * self.data)

    __rmul__ = __mul__

    def __repr__(self):
        inner_txt = ", ".join(np.array2string(b, separator=", ") for b in self.blocks)
        return f"ProductVector({inner_txt})"


def _check_same(x: ProductVector, y: ProductVector) -> None:
    if x.structure != y.structure:
        raise ShapeError(f"structure mismatch: {x.structure.dims} vs {y.structure.dims}")


def inner(x: ProductVector, y: ProductVector) -> float:
    """Product inner product: the sum over j of the block dot products."""
    _check_same(x, y)
    s = x.structure
    return float(sum(np.dot(x.data[s.slice(j)], y.data[s.slice(j)]) for j in range(1, s.n + 1)))


def component_norm(x: ProductVector, j: int) -> float:
    """Euclidean norm of block ``j``."""
    return float(np.linalg.norm(x.block(j)))


def norm(x: ProductVector) -> float:
    """Induced product norm, ``sqrt(sum_j ||x_j||^2)``."""
    return float(np.sqrt(sum(component_norm(x, j) ** 2 for j in range(1, x.structure.n + 1))))


def component_norms(x: ProductVector) -> np.ndarray:
    s = x.structure
    return np.array([component_norm(x, j) for j in range(1, s.n + 1)])


def axpy_block(x: ProductVector, j: int, scale: float, direction) -> ProductVector:
    """Return ``x`` with block ``j`` replaced by ``x_j + scale * direction``.

    All other blocks are copied bit for bit.
    """
    sl = x.structure.slice(j)
    d = np.asarray(direction, dtype=np.float64).reshape(-1)
    if d.shape[0] != sl.stop - sl.start:
        raise ShapeError(f"direction has length {d.shape[0]}, block {j} has {sl.stop - sl.start}")
    data = x.data.copy()
    data[sl] = data[sl] + float(scale) * d
    return ProductVector(x.structure, data)


def as_product_vector(x, structure: BlockStructure) -> ProductVector:
    """Coerce an array or a ProductVector to ``structure``."""
    if isinstance(x, ProductVector):
        if x.structure != structure:
            raise ShapeError(f"structure mismatch: {x.structure.dims} vs {structure.dims}")
        return x
    return ProductVector(structure, x)


# plain-text serialization: dims on line 1, coordinates on line 2

def to_text(x: ProductVector) -> str:
    dims = " ".join(str(d) for d in x.structure.dims)
    coords = " ".join(repr(float(v)) for v in x.data)
    return f"{dims}\n{coords}\n"


def from_text(text: str) -> ProductVector:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 2:
        raise InputError("vector text must have exactly two non-empty lines")
    try:
        dims = tuple(int(t) for t in lines[0].split())
        coords = [float(t) for t in lines[1].split()]
    except ValueError as exc:
        raise InputError(f"malformed vector text: {exc}") from exc
    try:
        return ProductVector(BlockStructure(dims), coords)
    except (ShapeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def blocks_equal_except(x: ProductVector, y: ProductVector, j: int) -> bool:
    """True when every block other than ``j`` is identical in ``x`` and ``y``."""
    _check_same(x, y)
    return all(
        np.array_equal(x.block(k), y.block(k)) for k in range(1, x.structure.n + 1) if k != j
    )


def stack(vectors: Sequence[ProductVector]) -> np.ndarray:
    """Stack product vectors into a ``(k, N)`` array."""
    return np.vstack([v.data for v in vectors])
