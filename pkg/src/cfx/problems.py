"""
Problem construction and ingestion.

Sparse consistent linear systems (read from Matrix Market files or planted
from a seed), their column sparsity profiles and DROP weight matrices, and
convex feasibility instances assembled from projection atoms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import operators as ops
from .errors import (
    DegenerateColumnError,
    DegenerateConstraintError,
    GenerationError,
    InputError,
    ParameterError,
    ShapeError,
)
from .operators import OperatorSpec, WeightMatrix
from .product_space import BlockStructure, ProductVector

DEFAULT_SEED = 20211120
MAX_REDRAWS = 100


class LinearSystem:
    """A system ``A x = b`` with sparse ``A`` and no zero rows.

    Explicitly stored zeros are dropped on construction, so the sparsity
    pattern counts structural nonzeros only.
    """

    def __init__(self, A, b):
        A = sp.csr_matrix(A, dtype=np.float64, copy=True)
        A.eliminate_zeros()
        A.sort_indices()
        b = np.asarray(b, dtype=np.float64).reshape(-1)
        m, n = A.shape
        if m < 1 or n < 1:
            raise ShapeError("system needs m >= 1 and n >= 1")
        if b.shape[0] != m:
            raise ShapeError(f"right-hand side has length {b.shape[0]}, system has {m} rows")
        if not (np.all(np.isfinite(A.data)) and np.all(np.isfinite(b))):
            raise ParameterError("system data must be finite")
        self.A = A
        self.b = b
        self.b.setflags(write=False)
        self.row_norms_sq = np.asarray(A.multiply(A).sum(axis=1)).reshape(-1)
        zero = np.flatnonzero(self.row_norms_sq == 0)
        if zero.size:
            raise DegenerateConstraintError(f"rows {(zero + 1).tolist()} of A are zero")
        self.row_norms_sq.setflags(write=False)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def row(self, i: int) -> np.ndarray:
        """Dense copy of row ``i`` (0-based)."""
        return self.A.getrow(i).toarray().reshape(-1)

    def residual(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float) - self.b

    def residual_norm(self, x) -> float:
        return float(np.linalg.norm(self.residual(x)))

    def relative_residual(self, x) -> float:
        """``||A x - b|| / ||b||`` (absolute residual when ``b = 0``)."""
        bn = float(np.linalg.norm(self.b))
        r = self.residual_norm(x)
        return r / bn if bn > 0 else r

    def hyperplanes(self) -> list[ops.HyperplaneProjection]:
        """One projection atom per equation, on the coordinate splitting of R^n."""
        s = BlockStructure.scalar(self.n)
        return [ops.HyperplaneProjection(s, self.row(i), self.b[i]) for i in range(self.m)]

    def __repr__(self):
        return f"LinearSystem(m={self.m}, n={self.n}, nnz={self.A.nnz})"


def column_sparsity(system: LinearSystem) -> np.ndarray:
    """``s_j``: the number of nonzero entries in column ``j`` of A.

    Raises
    ------
    DegenerateColumnError
        If some column has no nonzero entry.
    """
    s = np.bincount(system.A.indices[system.A.data != 0], minlength=system.n).astype(np.int64)
    zero = np.flatnonzero(s == 0)
    if zero.size:
        raise DegenerateColumnError(f"columns {(zero + 1).tolist()} of A are zero")
    return s


def _check_profile(system: LinearSystem, s) -> np.ndarray:
    s = np.asarray(s).reshape(-1)
    if s.shape[0] != system.n:
        raise ShapeError(f"sparsity profile has length {s.shape[0]}, system has {system.n} columns")
    if np.any(s < 1):
        raise DegenerateColumnError("every s_j must be at least 1")
    return s


def drop_weights(system: LinearSystem, s=None, scheme: str = "support-normalized",
                 w=None) -> WeightMatrix:
    """Component-wise weights for the DROP step.

    ``"support-normalized"`` gives ``w_ij = 1{a_ij != 0} / s_j`` (columns sum
    to one).  ``"row-over-sparsity"`` gives ``w_ij = w_i / s_j`` for a
    simplex vector ``w`` (columns sum to at most one).
    """
    s = column_sparsity(system) if s is None else _check_profile(system, s)
    if scheme == "support-normalized":
        support = (system.A != 0).toarray().astype(float)
        return WeightMatrix(support / s[None, :])
    if scheme == "row-over-sparsity":
        if w is None:
            raise ParameterError("scheme 'row-over-sparsity' needs row weights w")
        w = ops.check_simplex(w)
        if w.shape[0] != system.m:
            raise ShapeError(f"need {system.m} row weights, got {w.shape[0]}")
        return WeightMatrix(w[:, None] / s[None, :])
    raise ParameterError(f"unknown weight scheme {scheme!r}")


def plant_consistent_system(m: int, n: int, density: float, seed: int = DEFAULT_SEED,
                            lo: float = -10.0, hi: float = 10.0
                            ) -> tuple[LinearSystem, np.ndarray]:
    """Random sparse ``A`` with a planted solution ``x*`` and ``b = A x*``.

    ``round(density * m * n)`` (at least ``max(m, n)``) positions are drawn
    uniformly without replacement and filled with standard normal values;
    the draw is repeated until no row or column of A is empty.  ``x*`` is
    uniform on ``[lo, hi]^n``.
    """
    if not (0 < density <= 1):
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    if m < 1 or n < 1:
        raise ParameterError("need m >= 1 and n >= 1")
    rng = np.random.default_rng(seed)
    nnz = max(int(round(density * m * n)), 1)
    for _ in range(MAX_REDRAWS):
        pos = np.sort(rng.choice(m * n, size=nnz, replace=False))
        rows, cols = np.divmod(pos, n)
        if np.unique(rows).size < m or np.unique(cols).size < n:
            continue
        vals = rng.standard_normal(nnz)
        while np.any(vals == 0):
            vals[vals == 0] = rng.standard_normal(int(np.sum(vals == 0)))
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
        x_star = rng.uniform(lo, hi, size=n)
        return LinearSystem(A, A @ x_star), x_star
    raise GenerationError(
        f"no {m}x{n} pattern with density {density} free of empty rows/columns "
        f"after {MAX_REDRAWS} draws"
    )


# --------------------------------------------------------------------------
# file formats


def read_matrix_market(path) -> sp.csr_matrix:
    """Read a ``coordinate real general`` Matrix Market file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().split()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if len(header) < 5 or header[0].lower() != "%%matrixmarket" or header[2].lower() != "coordinate":
        raise InputError(f"{path}: expected a '%%MatrixMarket matrix coordinate' header")
    if header[3].lower() not in ("real", "integer"):
        raise InputError(f"{path}: field {header[3]!r} is not supported")
    try:
        A = scipy.io.mmread(str(path))
    except Exception as exc:
        raise InputError(f"{path}: {exc}") from exc
    return sp.csr_matrix(A)


def write_matrix_market(path, A) -> None:
    A = sp.coo_matrix(A)
    lines = ["%%MatrixMarket matrix coordinate real general",
             f"{A.shape[0]} {A.shape[1]} {A.nnz}"]
    order = np.lexsort((A.row, A.col))
    lines += [f"{A.row[k] + 1} {A.col[k] + 1} {float(A.data[k])!r}" for k in order]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_vector(path) -> np.ndarray:
    """One decimal per line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
        return np.array([float(t) for t in text.split()], dtype=float)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read vector from {path}: {exc}") from exc


def write_vector(path, v) -> None:
    Path(path).write_text("".join(f"{float(x)!r}\n" for x in np.asarray(v).reshape(-1)),
                          encoding="utf-8")


def load_system(matrix_path, rhs_path) -> LinearSystem:
    A = read_matrix_market(matrix_path)
    b = read_vector(rhs_path)
    try:
        return LinearSystem(A, b)
    except ShapeError as exc:
        raise InputError(str(exc)) from exc


# --------------------------------------------------------------------------
# convex feasibility instances

_SET_KINDS = ("hyperplane", "halfspace", "ball", "box")


@dataclass(frozen=True, eq=False)
class CfpInstance:
    """Find a point in the intersection of closed convex sets.

    ``sets`` holds one projection atom per set (hyperplane, half-space,
    ball or box) on a common block structure.
    """

    structure: BlockStructure
    sets: tuple[OperatorSpec, ...]
    planted: ProductVector | None = None

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(self.sets))
        if not self.sets:
            raise ParameterError("a feasibility instance needs at least one set")
        for atom in self.sets:
            if atom.kind not in _SET_KINDS:
                raise ParameterError(f"{atom.kind!r} is not a convex-set atom")
            if atom.structure != self.structure:
                raise ShapeError("all sets must live on the instance's block structure")
        if self.planted is not None:
            if not isinstance(self.planted, ProductVector):
                object.__setattr__(self, "planted", ProductVector(self.structure, self.planted))
            if self.planted.structure != self.structure:
                raise ShapeError("planted point has the wrong structure")
            for i, atom in enumerate(self.sets, start=1):
                if not atom.contains(self.planted, 1e-12):
                    raise ParameterError(f"planted point is not in set {i} ({atom.kind})")

    @property
    def m(self) -> int:
        return len(self.sets)

    def to_dict(self) -> dict:
        d = {"dims": list(self.structure.dims), "sets": [a.to_dict() for a in self.sets]}
        if self.planted is not None:
            d["planted"] = self.planted.data.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CfpInstance":
        try:
            structure = BlockStructure(tuple(d["dims"]))
            sets = []
            for sd in d["sets"]:
                sd = {"dims": list(structure.dims), **sd}
                sets.append(ops.from_dict(sd))
            planted = d.get("planted")
            planted = None if planted is None else ProductVector(structure, planted)
        except KeyError as exc:
            raise InputError(f"feasibility instance is missing {exc}") from None
        return cls(structure, tuple(sets), planted)


def load_cfp(path) -> CfpInstance:
    try:
        return CfpInstance.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read feasibility instance {path}: {exc}") from exc


def cfp_projection_operators(instance: CfpInstance) -> list[OperatorSpec]:
    """The metric projections onto the instance's sets, in order.

    Each is a cutter on the whole space.  It is a CW-cutter when the set is
    a product of per-block sets (boxes, or atoms whose data live in a single
    block); a hyperplane or ball coupling several blocks is not.
    """
    return list(instance.sets)


def hyperplane_instance(system: LinearSystem, dims: Sequence[int] | None = None,
                        planted=None) -> CfpInstance:
    """The equations of ``system`` as hyperplane sets on the given block structure."""
    s = BlockStructure.scalar(system.n) if dims is None else BlockStructure(tuple(dims))
    if s.total != system.n:
        raise ShapeError("block structure does not match the number of unknowns")
    sets = [ops.HyperplaneProjection(s, system.row(i), system.b[i]) for i in range(system.m)]
    return CfpInstance(s, tuple(sets), None if planted is None else ProductVector(s, planted))
