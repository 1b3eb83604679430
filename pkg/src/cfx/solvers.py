"""
Fixed-point iterations and their diagnostics.

* :func:`picard` iterates an operator and records per-component steps;
  :func:`contraction_bounds` and :func:`rate_check` evaluate the a priori,
  a posteriori and rate estimates for a componental contraction.
* :func:`cimmino_step`, :func:`drop_step` and :func:`general_cw_step` are the
  simultaneous projection steps; :func:`solve` runs any of the methods.
* :func:`fejer_monitor` checks per-component Fejer monotonicity of a run
  toward a reference point.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import operators as ops
from .errors import (
    DegenerateColumnError,
    DivergenceError,
    ParameterError,
    ShapeError,
    WeightError,
)
from .operators import OperatorSpec, WeightMatrix
from .problems import LinearSystem, column_sparsity, drop_weights
from .product_space import BlockStructure, ProductVector, as_product_vector
from .property_checks import PropertyReport

FEJER_TOL = 1e-10
RATE_TOL = 1e-12


@dataclass(frozen=True)
class StopRule:
    """When to stop an iteration.

    Stops after ``max_iterations`` steps, when the largest per-component step
    ``||x_j^{k+1} - x_j^k||`` (over ``components``, default all) is at most
    ``step_tol``, or, for linear systems, when ``||Ax - b|| / (1 + ||b||)``
    is at most ``residual_tol``.
    """

    max_iterations: int = 100_000
    step_tol: float = 1e-10
    residual_tol: float | None = None
    components: tuple[int, ...] | None = None

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ParameterError("max_iterations must be at least 1")
        if self.step_tol < 0 or (self.residual_tol is not None and self.residual_tol < 0):
            raise ParameterError("tolerances must be nonnegative")
        if self.components is not None:
            object.__setattr__(self, "components", tuple(int(c) for c in self.components))


@dataclass
class IterationHistory:
    """Trajectory of one solver run.

    ``steps[k-1, j-1]`` is ``||x_j^k - x_j^{k-1}||``; ``distances[k, j-1]`` is
    ``||x_j^k - z_j||`` for the reference ``z``; ``residuals[k]`` is
    ``||A x^k - b||``.  ``iterates`` holds ``x^k`` for ``k`` in
    ``iterate_indices`` (every ``keep_every``-th iterate plus the last).
    """

    method: str
    structure: BlockStructure
    iterates: list[ProductVector]
    iterate_indices: list[int]
    steps: np.ndarray
    stop_reason: str
    distances: np.ndarray | None = None
    residuals: np.ndarray | None = None
    rhs_norm: float | None = None
    relaxation: float | None = None
    sqne_constants: np.ndarray | None = None
    reference: ProductVector | None = None
    params: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return int(self.steps.shape[0])

    @property
    def final(self) -> ProductVector:
        return self.iterates[-1]

    def iterate(self, k: int) -> ProductVector:
        try:
            return self.iterates[self.iterate_indices.index(k)]
        except ValueError:
            raise KeyError(f"iterate {k} was not kept (keep_every > 1)") from None

    def component_trajectory(self, j: int) -> np.ndarray:
        """Block ``j`` of every kept iterate, shape ``(len(iterates), n_j)``."""
        sl = self.structure.slice(j)
        return np.vstack([x.data[sl] for x in self.iterates])

    def relative_residuals(self) -> np.ndarray | None:
        if self.residuals is None:
            return None
        return self.residuals / self.rhs_norm if self.rhs_norm else self.residuals.copy()

    def first_below(self, target: float) -> int | None:
        """First ``k`` with relative residual at most ``target``."""
        rr = self.relative_residuals()
        if rr is None:
            raise ParameterError("history has no residuals")
        hit = np.flatnonzero(rr <= target)
        return int(hit[0]) if hit.size else None

    def to_csv(self) -> str:
        return history_to_csv(self)


@dataclass(frozen=True)
class ContractionBounds:
    """A priori and a posteriori error bounds for component ``j``, indexed by ``k = 1..K``."""

    j: int
    alpha: float
    a_priori: np.ndarray
    a_posteriori: np.ndarray

    def check(self, errors: np.ndarray, tol: float = RATE_TOL) -> bool:
        """True when ``errors[k-1] <= bound + tol (1 + bound)`` for both bounds and every k."""
        e = np.asarray(errors)
        ok1 = np.all(e <= self.a_priori + tol * (1 + self.a_priori))
        ok2 = np.all(e <= self.a_posteriori + tol * (1 + self.a_posteriori))
        return bool(ok1 and ok2)


# --------------------------------------------------------------------------
# run bookkeeping


class _Recorder:
    def __init__(self, method, structure, x0: np.ndarray, stop: StopRule, reference=None,
                 keep_every: int = 1, system: LinearSystem | None = None):
        if keep_every < 1:
            raise ParameterError("keep_every must be at least 1")
        self.method = method
        self.s = structure
        self.stop = stop
        self.keep_every = keep_every
        self.system = system
        self.ref = None if reference is None else as_product_vector(reference, structure)
        if stop.components is not None:
            for c in stop.components:
                structure.check_index(c)
        self._cidx = (None if stop.components is None
                      else np.array(stop.components, dtype=int) - 1)
        self.iterates = [ProductVector(structure, x0)]
        self.indices = [0]
        self.steps: list[np.ndarray] = []
        self.dists = [] if self.ref is None else [self._cnorms(x0 - self.ref.data)]
        self.res = None if system is None else [system.residual_norm(x0)]
        self.bnorm = None if system is None else float(np.linalg.norm(system.b))
        self.last = x0
        self.k = 0

    def _cnorms(self, d: np.ndarray) -> np.ndarray:
        sq = np.bincount(self.s.component_of, weights=d * d, minlength=self.s.n)
        return np.sqrt(sq)

    def push(self, x_new: np.ndarray) -> str | None:
        if not np.all(np.isfinite(x_new)):
            hist = self.history("divergence")
            raise DivergenceError(
                f"{self.method}: non-finite iterate at k={self.k + 1}",
                last_finite=hist.iterates[-1], history=hist)
        self.k += 1
        step = self._cnorms(x_new - self.last)
        self.steps.append(step)
        if self.ref is not None:
            self.dists.append(self._cnorms(x_new - self.ref.data))
        if self.system is not None:
            self.res.append(self.system.residual_norm(x_new))
        self.last = x_new
        if self.k % self.keep_every == 0:
            self.iterates.append(ProductVector(self.s, x_new))
            self.indices.append(self.k)
        if self.system is not None and self.stop.residual_tol is not None:
            if self.res[-1] / (1.0 + self.bnorm) <= self.stop.residual_tol:
                return "residual-tolerance"
        watched = step if self._cidx is None else step[self._cidx]
        if np.max(watched) <= self.stop.step_tol:
            return "step-tolerance"
        if self.k >= self.stop.max_iterations:
            return "max-iterations"
        return None

    def history(self, reason: str, **extra) -> IterationHistory:
        iterates, indices = list(self.iterates), list(self.indices)
        if indices[-1] != self.k:
            iterates.append(ProductVector(self.s, self.last))
            indices.append(self.k)
        steps = np.array(self.steps).reshape(len(self.steps), self.s.n)
        return IterationHistory(
            method=self.method, structure=self.s, iterates=iterates, iterate_indices=indices,
            steps=steps, stop_reason=reason,
            distances=None if self.ref is None else np.array(self.dists),
            residuals=None if self.res is None else np.array(self.res),
            rhs_norm=self.bnorm, reference=self.ref, **extra)


def _run(method, step_fn, structure, x0, stop, reference, keep_every, system=None,
         **extra) -> IterationHistory:
    rec = _Recorder(method, structure, np.array(x0, dtype=float), stop, reference,
                    keep_every, system)
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            reason = rec.push(step_fn(rec.k, rec.last))
            if reason:
                return rec.history(reason, **extra)


# --------------------------------------------------------------------------
# Picard iteration and contraction estimates


def picard(T: OperatorSpec, x0, stop: StopRule | None = None, reference=None,
           keep_every: int = 1) -> IterationHistory:
    """Iterate ``x^{k+1} = T(x^k)``.

    Raises
    ------
    DivergenceError
        When an iterate overflows; the exception carries the last finite
        iterate and the partial history.
    """
    stop = stop or StopRule()
    x0 = as_product_vector(x0, T.structure)

    def step(k, x):
        return T._eval(x[None, :])[0]

    return _run("picard", step, T.structure, x0.data, stop, reference, keep_every)


def _component_errors(history: IterationHistory, j: int, reference) -> np.ndarray:
    """``||x_j^k - x_{j*}||`` for every kept ``k``."""
    ref = np.asarray(getattr(reference, "data", reference), dtype=float).reshape(-1)
    traj = history.component_trajectory(j)
    if ref.shape[0] == history.structure.total:
        ref = ref[history.structure.slice(j)]
    if ref.shape[0] != traj.shape[1]:
        raise ShapeError("reference does not match component size")
    return np.linalg.norm(traj - ref, axis=1)


def _need_full(history: IterationHistory):
    if history.iterate_indices != list(range(history.iterations + 1)):
        raise ParameterError("this diagnostic needs every iterate (keep_every=1)")


def contraction_bounds(history: IterationHistory, j: int, alpha: float) -> ContractionBounds:
    """A priori ``alpha^k/(1-alpha) ||x_j^0 - x_j^1||`` and a posteriori
    ``alpha/(1-alpha) ||x_j^{k-1} - x_j^k||`` bounds for ``k = 1..K``."""
    if not (np.isfinite(alpha) and 0 <= alpha < 1):
        raise ParameterError(f"contraction modulus must lie in [0, 1), got {alpha}")
    j = history.structure.check_index(j)
    if history.iterations < 1:
        raise ParameterError("need at least two iterates")
    steps = history.steps[:, j - 1]
    k = np.arange(1, history.iterations + 1)
    a_priori = alpha ** k / (1 - alpha) * steps[0]
    a_post = alpha / (1 - alpha) * steps
    return ContractionBounds(j, float(alpha), a_priori, a_post)


def rate_check(history: IterationHistory, j: int, alpha: float, reference) -> PropertyReport:
    """Check ``||x_j^k - x_{j*}|| <= alpha ||x_j^{k-1} - x_{j*}|| + 1e-12`` for all k."""
    if reference is None:
        raise ParameterError("rate check needs the limit component x_{j*}")
    if not (np.isfinite(alpha) and 0 <= alpha < 1):
        raise ParameterError(f"contraction modulus must lie in [0, 1), got {alpha}")
    j = history.structure.check_index(j)
    _need_full(history)
    err = _component_errors(history, j, reference)
    viol = err[1:] - alpha * err[:-1]
    params = {"j": j, "alpha": float(alpha)}
    if viol.size == 0:
        return PropertyReport("rate", params, 0, 0.0, RATE_TOL, "pass", note="no steps")
    k = int(np.argmax(viol))
    worst = float(viol[k])
    failed = worst > RATE_TOL
    witness = {"k": k + 1, "error_k": float(err[k + 1]), "error_prev": float(err[k])} if failed else None
    return PropertyReport("rate", params, int(viol.size), worst, RATE_TOL,
                          "fail" if failed else "pass", witness=witness,
                          note="rate bound violated" if failed else "rate bound holds at every k")


# --------------------------------------------------------------------------
# simultaneous projection steps for linear systems


def _check_lam(lam: float, strict: bool):
    if not np.isfinite(lam) or lam < 0:
        raise ParameterError(f"relaxation must be nonnegative, got {lam}")
    if strict and not 0 < lam < 2:
        raise ParameterError(f"relaxation must lie in (0, 2), got {lam}")


def cimmino_step(system: LinearSystem, w, lam: float, x, strict: bool = True) -> np.ndarray:
    """``x + lam * sum_i w_i (b_i - <a^i, x>) / ||a^i||^2 a^i``."""
    _check_lam(lam, strict)
    w = ops.check_simplex(w)
    if w.shape[0] != system.m:
        raise ShapeError(f"need {system.m} weights, got {w.shape[0]}")
    x = np.asarray(x, dtype=float)
    r = (system.b - system.A @ x) / system.row_norms_sq
    return x + lam * (system.A.T @ (w * r))


def drop_step(system: LinearSystem, s, lam: float, x, strict: bool = True) -> np.ndarray:
    """``x_j + (lam / s_j) * sum_i (b_i - <a^i, x>) / ||a^i||^2 a^i_j`` for every j."""
    _check_lam(lam, strict)
    s = np.asarray(s).reshape(-1)
    if s.shape[0] != system.n:
        raise ShapeError(f"sparsity profile has length {s.shape[0]}, need {system.n}")
    if np.any(s < 1):
        raise DegenerateColumnError("every s_j must be at least 1")
    x = np.asarray(x, dtype=float)
    r = (system.b - system.A @ x) / system.row_norms_sq
    return x + (lam / s) * (system.A.T @ r)


def general_cw_step(operators: Sequence[OperatorSpec], W: WeightMatrix, lam: float, x,
                    strict: bool = True) -> ProductVector:
    """``x_j + lam * sum_i w_ij ((T_i x)_j - x_j)`` for every component j.

    Strict mode requires every column of ``W`` to sum to one and
    ``lam`` in (0, 2).
    """
    _check_lam(lam, strict)
    if not isinstance(W, WeightMatrix):
        W = WeightMatrix(W)
    if strict and not W.normalized:
        raise WeightError("column sums of W must all equal 1")
    T = ops.componental_weighted(operators, W, lam, strict=False)
    return ops.apply(T, x)


# --------------------------------------------------------------------------
# driver


def _sqne_constants(effective: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return (2.0 - effective) / effective


def solve(method: str, problem, *, x0=None, lam: float = 1.0, weights=None,
          stop: StopRule | None = None, reference=None,
          schedule: Callable[[int], float] | None = None, strict: bool = True,
          keep_every: int = 1) -> IterationHistory:
    """Run one of ``picard``, ``cimmino``, ``drop`` or ``general-cw``.

    Parameters
    ----------
    method : str
    problem : OperatorSpec, LinearSystem, or (operators, WeightMatrix)
        An operator for ``picard``; a linear system for ``cimmino`` and
        ``drop``; for ``general-cw`` either a linear system (its hyperplanes
        with DROP weights) or a pair ``(operators, weights)``.
    x0 : array_like, optional
        Starting point, zero by default.
    lam : float
        Constant relaxation parameter.
    weights :
        ``cimmino``: row weights in the simplex (default ``1/m``).
        ``drop``: a sparsity profile (default: computed).
        ``general-cw`` on a linear system: a :class:`WeightMatrix` or scheme name.
    schedule : callable, optional
        ``k -> lam_k`` overriding ``lam`` per iteration.
    """
    stop = stop or StopRule()
    if method == "picard":
        if not isinstance(problem, OperatorSpec):
            raise ParameterError("picard needs an operator")
        start = ProductVector.zeros(problem.structure) if x0 is None else x0
        return picard(problem, start, stop, reference, keep_every)

    def lam_at(k):
        value = lam if schedule is None else float(schedule(k))
        _check_lam(value, strict)
        return value

    _check_lam(lam, strict)

    if method in ("cimmino", "drop"):
        if not isinstance(problem, LinearSystem):
            raise ParameterError(f"{method} needs a LinearSystem")
        system = problem
        structure = BlockStructure.scalar(system.n)
        if method == "cimmino":
            w = np.full(system.m, 1.0 / system.m) if weights is None else ops.check_simplex(weights)

            def step(k, x):
                return cimmino_step(system, w, lam_at(k), x, strict)

            params = {"weights": "uniform" if weights is None else "given"}
            effective = np.full(system.n, lam)
        else:
            s = column_sparsity(system) if weights is None else np.asarray(weights)

            def step(k, x):
                return drop_step(system, s, lam_at(k), x, strict)

            params = {"sparsity": np.asarray(s).tolist()}
            effective = np.full(system.n, lam)
        start = np.zeros(system.n) if x0 is None else np.asarray(getattr(x0, "data", x0), float)
        return _run(method, step, structure, start, stop, reference, keep_every, system,
                    relaxation=float(lam), sqne_constants=_sqne_constants(effective),
                    params=params)

    if method == "general-cw":
        system = None
        if isinstance(problem, LinearSystem):
            system = problem
            op_list = system.hyperplanes()
            if isinstance(weights, WeightMatrix):
                W = weights
            else:
                W = drop_weights(system, scheme=weights or "support-normalized")
        else:
            op_list, W = problem
            op_list = list(op_list)
            if not isinstance(W, WeightMatrix):
                W = WeightMatrix(W)
        if strict and not W.normalized:
            raise WeightError("column sums of W must all equal 1")
        structure = op_list[0].structure

        def step(k, x):
            T = ops.componental_weighted(op_list, W, lam_at(k), strict=False)
            return T._eval(x[None, :])[0]

        start = np.zeros(structure.total) if x0 is None else as_product_vector(x0, structure).data
        effective = lam * W.column_sums
        return _run(method, step, structure, start, stop, reference, keep_every, system,
                    relaxation=float(lam), sqne_constants=_sqne_constants(effective),
                    params={"normalized": W.normalized})

    raise ParameterError(f"unknown method {method!r}")


# --------------------------------------------------------------------------
# Fejer monitor


def fejer_monitor(history: IterationHistory, reference=None, rho=None,
                  tol: float = FEJER_TOL, aggregate: bool = False) -> PropertyReport:
    """Per-component Fejer monotonicity of a run toward ``reference``.

    Checks ``||x_j^{k+1} - z_j|| <= ||x_j^k - z_j|| + tol`` for every j and k.
    When SQNE constants are available (``rho``, or the run's
    ``(2 - lam w_.j) / (lam w_.j)``) and all are positive, the telescoping
    inequality ``||x_j^{k+1} - z_j||^2 <= ||x_j^k - z_j||^2 - rho_j ||x_j^{k+1} - x_j^k||^2``
    is checked as well; otherwise the report is marked ``"QNE only"``.

    With ``aggregate=True`` the same inequalities are checked for the full
    vector instead of each component.
    """
    if reference is None and history.reference is None:
        raise ParameterError("Fejer monitor needs a reference point")
    if reference is not None:
        ref = as_product_vector(reference, history.structure)
        if history.reference is None or ref != history.reference:
            _need_full(history)
            D = np.array([[np.linalg.norm(x.data[history.structure.slice(j)] -
                                          ref.data[history.structure.slice(j)])
                           for j in range(1, history.structure.n + 1)]
                          for x in history.iterates])
        else:
            D = history.distances
    else:
        D = history.distances
    steps = history.steps
    if aggregate:
        D = np.sqrt(np.sum(D * D, axis=1, keepdims=True))
        steps = np.sqrt(np.sum(steps * steps, axis=1, keepdims=True))
    mono = D[1:] - D[:-1]
    if rho is None:
        rho = history.sqne_constants
    flags = []
    sq_viol = None
    if rho is not None:
        rho = np.broadcast_to(np.asarray(rho, dtype=float), (history.structure.n,))
        if aggregate:
            rho = np.array([rho.min()])
        if np.all(rho > 0) and np.all(np.isfinite(rho)):
            sq_viol = D[1:] ** 2 + rho * steps ** 2 - D[:-1] ** 2
            scale = 1.0 + D[:-1] ** 2
            sq_viol = sq_viol / scale
        else:
            flags.append("QNE only")
    else:
        flags.append("QNE only")
    viol = mono if sq_viol is None else np.maximum(mono, sq_viol)
    params = {"j": None if aggregate else "all", "aggregate": aggregate, "rho": None if rho is None else np.asarray(rho).tolist(),
              "sqne_checked": sq_viol is not None}
    if viol.size == 0:
        return PropertyReport("fejer", params, 0, 0.0, tol, "pass", note="no steps",
                              flags=tuple(flags))
    k, jj = np.unravel_index(int(np.argmax(viol)), viol.shape)
    worst = float(viol[k, jj])
    failed = worst > tol
    witness = None
    if failed:
        witness = {"k": int(k + 1), "component": None if aggregate else int(jj + 1),
                   "dist_prev": float(D[k, jj]), "dist_next": float(D[k + 1, jj]),
                   "step": float(steps[k, jj])}
    n_bad = int(np.sum(np.any(viol > tol, axis=1)))
    note = (f"monotonicity violated at {n_bad} of {viol.shape[0]} steps" if failed
            else "distances nonincreasing at every step")
    return PropertyReport("fejer", params, int(viol.size), worst, tol,
                          "fail" if failed else "pass", witness=witness, note=note,
                          flags=tuple(flags))


# --------------------------------------------------------------------------
# CSV export


def _fmt(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def history_to_csv(history: IterationHistory) -> str:
    """Columns ``k, residual, step_1, dist_1, ..., step_n, dist_n``.

    ``step_j`` in row ``k`` is ``||x_j^k - x_j^{k-1}||`` (empty for k = 0).
    """
    n = history.structure.n
    header = ["k", "residual"]
    for j in range(1, n + 1):
        header += [f"step_{j}", f"dist_{j}"]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for k in range(history.iterations + 1):
        row = [str(k), _fmt(None if history.residuals is None else history.residuals[k])]
        for j in range(n):
            row.append(_fmt(history.steps[k - 1, j]) if k > 0 else "")
            row.append(_fmt(None if history.distances is None else history.distances[k, j]))
        wr.writerow(row)
    return buf.getvalue()
