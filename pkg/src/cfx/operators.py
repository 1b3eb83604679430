"""
Operator algebra on product spaces.

An operator is a tree: leaves are atoms (projections onto simple convex
sets, affine maps, block swaps and two small fixed examples on R x R) and
internal nodes are combinators (relaxation, component-wise relaxation,
convex and component-weighted combinations, block-diagonal and
block-select assembly).

Every node evaluates on a batch ``X`` of shape ``(k, N)`` where ``N`` is the
total dimension, so the sampling checks in :mod:`cfx.property_checks` can
push a thousand points through one call.  :func:`apply` and
:func:`apply_component` are the single-point entry points.
"""

from __future__ import annotations

from typing import Any, ClassVar, Sequence

import numpy as np

from .errors import (
    DegenerateConstraintError,
    InputError,
    ParameterError,
    ShapeError,
    WeightError,
)
from .product_space import BlockStructure, ProductVector, as_product_vector

SIMPLEX_TOL = 1e-12


def _ro(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


def _structure(dims) -> BlockStructure:
    if isinstance(dims, BlockStructure):
        return dims
    if isinstance(dims, (int, np.integer)):
        return BlockStructure((int(dims),))
    return BlockStructure(tuple(dims))


class OperatorSpec:
    """Base class of all operator nodes.

    Subclasses implement ``_eval`` and may override ``_eval_component`` when
    component ``j`` can be computed without forming the full image.
    """

    kind: ClassVar[str] = ""
    structure: BlockStructure

    @property
    def children(self) -> tuple["OperatorSpec", ...]:
        return ()

    def _eval(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _eval_component(self, X: np.ndarray, j: int) -> np.ndarray:
        return self._eval(X)[:, self.structure.slice(j)]

    def _params(self) -> dict[str, Any]:
        return {}

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        d.update(self._params())
        if self.children:
            d["children"] = [c.to_dict() for c in self.children]
        return d

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.structure.dims})"


# --------------------------------------------------------------------------
# evaluation entry points


def _as_batch(T: OperatorSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != T.structure.total:
        raise ShapeError(
            f"operator on dims {T.structure.dims} expects width {T.structure.total}, got {X.shape}"
        )
    return X


def apply(T: OperatorSpec, x) -> ProductVector:
    """Full image ``T(x)``."""
    x = as_product_vector(x, T.structure)
    return ProductVector(T.structure, T._eval(x.data[None, :])[0])


def apply_component(T: OperatorSpec, x, j: int) -> np.ndarray:
    """Block ``j`` of ``T(x)`` (the j-th componental operator)."""
    x = as_product_vector(x, T.structure)
    j = T.structure.check_index(j)
    return np.array(T._eval_component(x.data[None, :], j)[0])


def apply_batch(T: OperatorSpec, X) -> np.ndarray:
    """Images of the rows of ``X``."""
    return T._eval(_as_batch(T, X))


def apply_component_batch(T: OperatorSpec, X, j: int) -> np.ndarray:
    j = T.structure.check_index(j)
    return T._eval_component(_as_batch(T, X), j)


# --------------------------------------------------------------------------
# atoms


class Identity(OperatorSpec):
    kind = "identity"

    def __init__(self, dims):
        self.structure = _structure(dims)

    def _eval(self, X):
        return X.copy()

    def _eval_component(self, X, j):
        return X[:, self.structure.slice(j)].copy()

    def _params(self):
        return {"dims": list(self.structure.dims)}


def project_hyperplane(a, b: float, z) -> np.ndarray:
    """Orthogonal projection of ``z`` onto ``{x : <a, x> = b}``.

    Returns ``z + ((b - <a, z>) / ||a||^2) a``.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if a.shape != z.shape:
        raise ShapeError(f"normal has length {a.shape[0]}, point has {z.shape[0]}")
    aa = float(np.dot(a, a))
    if aa == 0.0:
        raise DegenerateConstraintError("hyperplane normal must be nonzero")
    return z + ((float(b) - float(np.dot(a, z))) / aa) * a


class _NormalAtom(OperatorSpec):
    """Shared parts of hyperplane and half-space projections."""

    def __init__(self, dims, a, b):
        self.structure = _structure(dims)
        a = _ro(np.reshape(a, -1))
        if a.shape[0] != self.structure.total:
            raise ShapeError(f"normal has length {a.shape[0]}, space has {self.structure.total}")
        if not np.all(np.isfinite(a)) or not np.isfinite(b):
            raise ParameterError("constraint data must be finite")
        self.a = a
        self.b = float(b)
        self.aa = float(np.dot(a, a))
        if self.aa == 0.0:
            raise DegenerateConstraintError(f"{self.kind} normal must be nonzero")

    def _coef(self, X):
        raise NotImplementedError

    def _eval(self, X):
        return X + self._coef(X)[:, None] * self.a

    def _eval_component(self, X, j):
        sl = self.structure.slice(j)
        return X[:, sl] + self._coef(X)[:, None] * self.a[sl]

    def _params(self):
        return {"dims": list(self.structure.dims), "a": self.a.tolist(), "b": self.b}


class HyperplaneProjection(_NormalAtom):
    """Projection onto ``{x : <a, x> = b}``."""

    kind = "hyperplane"

    def _coef(self, X):
        return (self.b - X @ self.a) / self.aa

    def contains(self, x, tol=1e-12) -> bool:
        x = np.asarray(getattr(x, "data", x))
        return abs(float(np.dot(self.a, x)) - self.b) <= tol * (1.0 + abs(self.b))


class HalfspaceProjection(_NormalAtom):
    """Projection onto ``{x : <a, x> <= b}``."""

    kind = "halfspace"

    def _coef(self, X):
        return np.minimum(0.0, (self.b - X @ self.a) / self.aa)

    def contains(self, x, tol=1e-12) -> bool:
        x = np.asarray(getattr(x, "data", x))
        return float(np.dot(self.a, x)) - self.b <= tol * (1.0 + abs(self.b))


class BallProjection(OperatorSpec):
    """Radial projection onto a closed Euclidean ball; interior points are returned as is."""

    kind = "ball"

    def __init__(self, dims, center, radius):
        self.structure = _structure(dims)
        self.center = _ro(np.reshape(center, -1))
        if self.center.shape[0] != self.structure.total:
            raise ShapeError("ball center has the wrong length")
        if not np.isfinite(radius) or radius <= 0:
            raise DegenerateConstraintError(f"ball radius must be positive, got {radius}")
        self.radius = float(radius)

    def _eval(self, X):
        d = X - self.center
        dist = np.sqrt(np.einsum("ij,ij->i", d, d))
        outside = dist > self.radius
        scale = np.where(outside, self.radius / np.where(outside, dist, 1.0), 1.0)
        return np.where(outside[:, None], self.center + d * scale[:, None], X)

    def contains(self, x, tol=1e-12) -> bool:
        x = np.asarray(getattr(x, "data", x))
        return float(np.linalg.norm(x - self.center)) <= self.radius + tol * (1.0 + self.radius)

    def _params(self):
        return {"dims": list(self.structure.dims), "center": self.center.tolist(),
                "radius": self.radius}


class BoxProjection(OperatorSpec):
    """Coordinate-wise clipping onto ``[lo, hi]``."""

    kind = "box"

    def __init__(self, dims, lo, hi):
        self.structure = _structure(dims)
        self.lo = _ro(np.reshape(lo, -1))
        self.hi = _ro(np.reshape(hi, -1))
        if self.lo.shape[0] != self.structure.total or self.hi.shape[0] != self.structure.total:
            raise ShapeError("box bounds have the wrong length")
        if np.any(self.lo > self.hi):
            raise DegenerateConstraintError("box needs lo <= hi in every coordinate")

    def _eval(self, X):
        return np.clip(X, self.lo, self.hi)

    def _eval_component(self, X, j):
        sl = self.structure.slice(j)
        return np.clip(X[:, sl], self.lo[sl], self.hi[sl])

    def contains(self, x, tol=1e-12) -> bool:
        x = np.asarray(getattr(x, "data", x))
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def _params(self):
        return {"dims": list(self.structure.dims), "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class AffineMap(OperatorSpec):
    """``x -> M x + c``."""

    kind = "affine"

    def __init__(self, dims, matrix, offset=None):
        self.structure = _structure(dims)
        N = self.structure.total
        self.matrix = _ro(np.reshape(matrix, (N, N)))
        self.offset = _ro(np.zeros(N) if offset is None else np.reshape(offset, -1))
        if self.offset.shape[0] != N:
            raise ShapeError("affine offset has the wrong length")

    def _eval(self, X):
        return X @ self.matrix.T + self.offset

    def _eval_component(self, X, j):
        sl = self.structure.slice(j)
        return X @ self.matrix[sl].T + self.offset[sl]

    def _params(self):
        return {"dims": list(self.structure.dims), "matrix": self.matrix.tolist(),
                "offset": self.offset.tolist()}


def affine_map(matrix, offset=None) -> AffineMap:
    """Affine map on a single block, sized from ``matrix``."""
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    return AffineMap((M.shape[0],), M, offset)


class Swap(OperatorSpec):
    """Exchange blocks ``i`` and ``j`` (which must have equal dimension)."""

    kind = "swap"

    def __init__(self, dims=(1, 1), i=1, j=2):
        self.structure = _structure(dims)
        self.i = self.structure.check_index(i)
        self.j = self.structure.check_index(j)
        if self.structure.dims[self.i - 1] != self.structure.dims[self.j - 1]:
            raise ShapeError("swapped blocks must have equal dimension")
        perm = np.arange(self.structure.total)
        si, sj = self.structure.slice(self.i), self.structure.slice(self.j)
        perm[si], perm[sj] = np.arange(sj.start, sj.stop), np.arange(si.start, si.stop)
        self._perm = perm

    def _eval(self, X):
        return X[:, self._perm]

    def _eval_component(self, X, j):
        return X[:, self._perm[self.structure.slice(j)]]

    def _params(self):
        return {"dims": list(self.structure.dims), "i": self.i, "j": self.j}


class MixedContraction(OperatorSpec):
    """``(x_1, x_2) -> (x_1/2 + 3, 8 x_2)`` on R x R.

    Contracts component 1 with modulus 1/2 while expanding component 2, so
    it is not a contraction of the whole space.
    """

    kind = "mixed-contraction"

    def __init__(self):
        self.structure = BlockStructure((1, 1))

    def _eval(self, X):
        return np.column_stack([X[:, 0] / 2 + 3, 8 * X[:, 1]])

    def _eval_component(self, X, j):
        j = self.structure.check_index(j)
        return (X[:, :1] / 2 + 3) if j == 1 else 8 * X[:, 1:2]


class ScaledSwap(OperatorSpec):
    """``(x_1, x_2) -> (x_2/2, x_1/2)``: a 1/2-contraction that is no componental contraction."""

    kind = "scaled-swap"

    def __init__(self):
        self.structure = BlockStructure((1, 1))

    def _eval(self, X):
        return np.column_stack([X[:, 1] / 2, X[:, 0] / 2])


# --------------------------------------------------------------------------
# combinators


class Relax(OperatorSpec):
    """``T_lam = Id + lam (T - Id)``."""

    kind = "relax"

    def __init__(self, op: OperatorSpec, lam: float):
        if not np.isfinite(lam) or lam < 0:
            raise ParameterError(f"relaxation must be >= 0, got {lam}")
        self.op = op
        self.lam = float(lam)
        self.structure = op.structure

    @property
    def children(self):
        return (self.op,)

    def _eval(self, X):
        return X + self.lam * (self.op._eval(X) - X)

    def _eval_component(self, X, j):
        xj = X[:, self.structure.slice(j)]
        return xj + self.lam * (self.op._eval_component(X, j) - xj)

    def _params(self):
        return {"lam": self.lam}


class CWRelax(OperatorSpec):
    """Component-wise relaxation: block j moves by ``lam_j`` times T's displacement."""

    kind = "cw-relax"

    def __init__(self, op: OperatorSpec, lams: Sequence[float]):
        lams = np.asarray(lams, dtype=float).reshape(-1)
        if lams.shape[0] != op.structure.n:
            raise ShapeError(f"need {op.structure.n} relaxation parameters, got {lams.shape[0]}")
        if not np.all(np.isfinite(lams)) or np.any(lams < 0):
            raise ParameterError(f"relaxation parameters must be >= 0, got {lams.tolist()}")
        self.op = op
        self.lams = _ro(lams)
        self.structure = op.structure
        self._coord_lams = op.structure.expand(lams)

    @property
    def children(self):
        return (self.op,)

    def _eval(self, X):
        return X + self._coord_lams * (self.op._eval(X) - X)

    def _eval_component(self, X, j):
        xj = X[:, self.structure.slice(j)]
        return xj + self.lams[j - 1] * (self.op._eval_component(X, j) - xj)

    def _params(self):
        return {"lams": self.lams.tolist()}


class Complement(OperatorSpec):
    """``Id - T``."""

    kind = "complement"

    def __init__(self, op: OperatorSpec):
        self.op = op
        self.structure = op.structure

    @property
    def children(self):
        return (self.op,)

    def _eval(self, X):
        return X - self.op._eval(X)

    def _eval_component(self, X, j):
        return X[:, self.structure.slice(j)] - self.op._eval_component(X, j)


def _common_structure(ops: Sequence[OperatorSpec]) -> BlockStructure:
    if len(ops) == 0:
        raise ParameterError("need at least one operator")
    s = ops[0].structure
    for op in ops[1:]:
        if op.structure != s:
            raise ShapeError(f"operators act on different spaces: {s.dims} vs {op.structure.dims}")
    return s


def check_simplex(w, tol: float = SIMPLEX_TOL) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w < 0) or abs(w.sum() - 1.0) > tol:
        raise ParameterError(f"weights must lie in the unit simplex, got {w.tolist()}")
    return w


class ConvexCombination(OperatorSpec):
    """``sum_i w_i T_i`` with ``w`` in the unit simplex."""

    kind = "convex-combination"

    def __init__(self, ops: Sequence[OperatorSpec], weights):
        self.ops = tuple(ops)
        self.structure = _common_structure(self.ops)
        w = check_simplex(weights)
        if w.shape[0] != len(self.ops):
            raise ShapeError(f"{len(self.ops)} operators but {w.shape[0]} weights")
        self.weights = _ro(w)

    @property
    def children(self):
        return self.ops

    def _eval(self, X):
        out = np.zeros_like(X)
        for w, op in zip(self.weights, self.ops):
            out += w * op._eval(X)
        return out

    def _eval_component(self, X, j):
        sl = self.structure.slice(j)
        out = np.zeros((X.shape[0], sl.stop - sl.start))
        for w, op in zip(self.weights, self.ops):
            out += w * op._eval_component(X, j)
        return out

    def _params(self):
        return {"weights": self.weights.tolist()}


class WeightMatrix:
    """Nonnegative weights ``w_ij`` (rows: operators, columns: components).

    Attributes
    ----------
    w : ndarray, shape (m, n)
    column_sums : ndarray, shape (n,)
        ``w_{.j} = sum_i w_ij``, all strictly positive.
    normalized : bool
        Every column sums to one (within ``1e-12``).
    """

    def __init__(self, w):
        w = np.atleast_2d(np.asarray(w, dtype=float))
        if w.ndim != 2:
            raise WeightError("weight matrix must be two-dimensional")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise WeightError("weights must be finite and nonnegative")
        sums = w.sum(axis=0)
        if np.any(sums <= 0):
            bad = (np.flatnonzero(sums <= 0) + 1).tolist()
            raise WeightError(f"columns {bad} have zero weight sum")
        self.w = _ro(w)
        self.column_sums = _ro(sums)
        self.normalized = bool(np.all(np.abs(sums - 1.0) <= SIMPLEX_TOL))

    @classmethod
    def uniform(cls, m: int, n: int) -> "WeightMatrix":
        return cls(np.full((m, n), 1.0 / m))

    @classmethod
    def from_row_weights(cls, w, n: int) -> "WeightMatrix":
        """Same weight vector in every column (the simultaneous-projection case)."""
        w = check_simplex(w)
        return cls(np.repeat(w[:, None], n, axis=1))

    @property
    def m(self) -> int:
        return self.w.shape[0]

    @property
    def n(self) -> int:
        return self.w.shape[1]

    @property
    def max_column_sum(self) -> float:
        return float(self.column_sums.max())

    def __repr__(self):
        return f"WeightMatrix(m={self.m}, n={self.n}, normalized={self.normalized})"


class ComponentalWeighted(OperatorSpec):
    """Component-weighted relaxed combination.

    Block j of the image is ``x_j + lam_j * sum_i w_ij ((T_i x)_j - x_j)``,
    summed in index order over ``i``.  In strict mode each ``lam_j`` must lie
    in ``(0, 2 / w_{.j}]``.
    """

    kind = "componental-weighted"

    def __init__(self, ops, weights: WeightMatrix, lams, strict: bool = True):
        self.ops = tuple(ops)
        self.structure = _common_structure(self.ops)
        if not isinstance(weights, WeightMatrix):
            weights = WeightMatrix(weights)
        if weights.m != len(self.ops) or weights.n != self.structure.n:
            raise ShapeError(
                f"weight matrix is {weights.m}x{weights.n}, need {len(self.ops)}x{self.structure.n}"
            )
        lams = np.broadcast_to(np.asarray(lams, dtype=float), (self.structure.n,)).copy()
        if not np.all(np.isfinite(lams)) or np.any(lams < 0):
            raise ParameterError(f"relaxation parameters must be >= 0, got {lams.tolist()}")
        if strict:
            upper = 2.0 / weights.column_sums
            bad = (lams <= 0) | (lams > upper * (1 + 1e-15))
            if np.any(bad):
                j = int(np.flatnonzero(bad)[0]) + 1
                raise ParameterError(
                    f"lam_{j} = {lams[j - 1]} outside (0, {upper[j - 1]}] = (0, 2/w_.{j}]"
                )
        self.weights = weights
        self.lams = _ro(lams)
        self.strict = bool(strict)
        self._coord_w = weights.w[:, self.structure.component_of]
        self._coord_lams = self.structure.expand(lams)

    @property
    def children(self):
        return self.ops

    @property
    def effective_relaxation(self) -> np.ndarray:
        """``lam_j * w_{.j}``: the relaxation of the normalized combination in block j."""
        return self.lams * self.weights.column_sums

    def _eval(self, X):
        acc = np.zeros_like(X)
        for i, op in enumerate(self.ops):
            acc += self._coord_w[i] * (op._eval(X) - X)
        return X + self._coord_lams * acc

    def _eval_component(self, X, j):
        sl = self.structure.slice(j)
        xj = X[:, sl]
        acc = np.zeros_like(xj)
        for i, op in enumerate(self.ops):
            acc += self.weights.w[i, j - 1] * (op._eval_component(X, j) - xj)
        return xj + self.lams[j - 1] * acc

    def _params(self):
        return {"weights": self.weights.w.tolist(), "lams": self.lams.tolist(),
                "strict": self.strict}


class BlockDiagonal(OperatorSpec):
    """``U(x) = (U^1(x_1), ..., U^n(x_n))`` from per-block maps."""

    kind = "block-diagonal"

    def __init__(self, maps: Sequence[OperatorSpec]):
        self.maps = tuple(maps)
        if not self.maps:
            raise ParameterError("block_diagonal needs at least one map")
        self.structure = BlockStructure(tuple(m.structure.total for m in self.maps))

    @property
    def children(self):
        return self.maps

    def _eval(self, X):
        s = self.structure
        return np.concatenate(
            [m._eval(X[:, s.slice(j)]) for j, m in enumerate(self.maps, start=1)], axis=1
        )

    def _eval_component(self, X, j):
        return self.maps[j - 1]._eval(X[:, self.structure.slice(j)])


class BlockSelect(OperatorSpec):
    """``S(x) = ((S_{c(1)} x)_1, ..., (S_{c(n)} x)_n)`` for an assignment ``c``."""

    kind = "block-select"

    def __init__(self, ops: Sequence[OperatorSpec], assignment: Sequence[int] | None = None):
        self.ops = tuple(ops)
        self.structure = _common_structure(self.ops)
        n = self.structure.n
        if assignment is None:
            if len(self.ops) != n:
                raise ParameterError("without an assignment, supply one operator per component")
            assignment = list(range(1, n + 1))
        assignment = [int(a) if a is not None else None for a in assignment]
        if len(assignment) != n or any(a is None for a in assignment):
            raise ParameterError(f"assignment must name a source operator for all {n} components")
        if any(not 1 <= a <= len(self.ops) for a in assignment):
            raise ParameterError(f"assignment entries must lie in 1..{len(self.ops)}")
        self.assignment = tuple(assignment)

    @property
    def children(self):
        return self.ops

    def _eval(self, X):
        s = self.structure
        return np.concatenate(
            [self._eval_component(X, j) for j in range(1, s.n + 1)], axis=1
        )

    def _eval_component(self, X, j):
        return self.ops[self.assignment[j - 1] - 1]._eval_component(X, j)

    def _params(self):
        return {"assignment": list(self.assignment)}


# --------------------------------------------------------------------------
# builder functions


def relax(T: OperatorSpec, lam: float) -> Relax:
    return Relax(T, lam)


def cw_relax(T: OperatorSpec, lams) -> CWRelax:
    return CWRelax(T, lams)


def complement(T: OperatorSpec) -> Complement:
    return Complement(T)


def convex_combination(ops, weights) -> ConvexCombination:
    return ConvexCombination(ops, weights)


def componental_weighted(ops, weights, lams, strict: bool = True) -> ComponentalWeighted:
    return ComponentalWeighted(ops, weights, lams, strict=strict)


def block_diagonal(maps) -> BlockDiagonal:
    return BlockDiagonal(maps)


def block_select(ops, assignment=None) -> BlockSelect:
    return BlockSelect(ops, assignment)


# --------------------------------------------------------------------------
# JSON round trip


def _from_dims(d):
    try:
        return d["dims"]
    except KeyError:
        raise InputError(f"'{d.get('kind')}' needs 'dims'") from None


def _kids(d, count=None):
    kids = [from_dict(c) for c in d.get("children", [])]
    if count is not None and len(kids) != count:
        raise InputError(f"'{d['kind']}' takes exactly {count} child operator(s)")
    if not kids:
        raise InputError(f"'{d['kind']}' needs children")
    return kids


_BUILDERS = {
    "identity": lambda d: Identity(_from_dims(d)),
    "hyperplane": lambda d: HyperplaneProjection(_from_dims(d), d["a"], d["b"]),
    "halfspace": lambda d: HalfspaceProjection(_from_dims(d), d["a"], d["b"]),
    "ball": lambda d: BallProjection(_from_dims(d), d["center"], d["radius"]),
    "box": lambda d: BoxProjection(_from_dims(d), d["lo"], d["hi"]),
    "affine": lambda d: AffineMap(_from_dims(d), d["matrix"], d.get("offset")),
    "swap": lambda d: Swap(d.get("dims", (1, 1)), d.get("i", 1), d.get("j", 2)),
    "mixed-contraction": lambda d: MixedContraction(),
    "scaled-swap": lambda d: ScaledSwap(),
    "relax": lambda d: Relax(_kids(d, 1)[0], d["lam"]),
    "cw-relax": lambda d: CWRelax(_kids(d, 1)[0], d["lams"]),
    "complement": lambda d: Complement(_kids(d, 1)[0]),
    "convex-combination": lambda d: ConvexCombination(_kids(d), d["weights"]),
    "componental-weighted": lambda d: ComponentalWeighted(
        _kids(d), WeightMatrix(d["weights"]), d["lams"], strict=d.get("strict", True)
    ),
    "block-diagonal": lambda d: BlockDiagonal(_kids(d)),
    "block-select": lambda d: BlockSelect(_kids(d), d.get("assignment")),
}


def from_dict(d: dict) -> OperatorSpec:
    """Rebuild an operator from its JSON document."""
    if not isinstance(d, dict) or "kind" not in d:
        raise InputError("operator documents are objects with a 'kind' field")
    try:
        builder = _BUILDERS[d["kind"]]
    except KeyError:
        raise InputError(f"unknown operator kind {d['kind']!r}") from None
    try:
        return builder(d)
    except KeyError as exc:
        raise InputError(f"operator '{d['kind']}' is missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (ParameterError, ShapeError, InputError)):
            raise
        raise InputError(f"bad parameters for operator '{d['kind']}': {exc}") from exc


def to_dict(T: OperatorSpec) -> dict:
    return T.to_dict()
