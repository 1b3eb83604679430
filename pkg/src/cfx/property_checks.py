"""
Sampling-based certification and refutation of componental operator properties.

Every check draws points (or pairs of points) from a seeded :class:`Sampler`,
evaluates the residual of the defining inequality on each sample, and
returns a :class:`PropertyReport`.  A positive residual above the tolerance is
a violation; the worst one is kept as a witness that can be re-evaluated with
:func:`recheck_witness`.  A pass only means that no counterexample was found
under the sampler.

Passing ``j=None`` to the pairwise checks evaluates the classical (full
space) property instead of the componental one.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import operators as ops
from .errors import ParameterError, PreconditionError, SamplingError
from .operators import OperatorSpec, apply_component_batch
from .product_space import BlockStructure, ProductVector, as_product_vector

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
STRICT_MARGIN = 1e-12
PASS_NOTE = "no counterexample found under this sampler"
FNE_BATTERY_RELAXATIONS = (0.0, 0.5, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class Sampler:
    """Seeded source of sample points.

    Parameters
    ----------
    seed : int
        Required; identical seeds give identical sample streams.
    distribution : {"uniform", "gaussian"}
        Uniform on the box ``[lo, hi]^N`` or centred Gaussian with ``sigma``.
    count : int
        Number of random samples (points or pairs).
    pinned_pairs, pinned_points : sequences
        Specific pairs ``(x, y)`` / points ``x`` placed before the random ones.
    """

    seed: int
    distribution: str = "uniform"
    count: int = 1000
    lo: float = -10.0
    hi: float = 10.0
    sigma: float = 1.0
    pinned_pairs: tuple = ()
    pinned_points: tuple = ()

    def __post_init__(self):
        if self.seed is None:
            raise PreconditionError("a sampler needs an explicit seed")
        if self.distribution not in ("uniform", "gaussian"):
            raise ParameterError(f"unknown distribution {self.distribution!r}")
        if self.count < 0 or (self.count == 0 and not self.pinned_pairs and not self.pinned_points):
            raise PreconditionError("sampler would produce no samples")
        if self.distribution == "uniform" and not self.lo < self.hi:
            raise ParameterError("uniform sampler needs lo < hi")
        if self.distribution == "gaussian" and not self.sigma > 0:
            raise ParameterError("gaussian sampler needs sigma > 0")
        object.__setattr__(self, "pinned_pairs", tuple(self.pinned_pairs))
        object.__setattr__(self, "pinned_points", tuple(self.pinned_points))

    def _draw(self, structure: BlockStructure, stream: int, count: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence([int(self.seed) % 2**64, stream]))
        shape = (count, structure.total)
        if self.distribution == "uniform":
            return rng.uniform(self.lo, self.hi, size=shape)
        return rng.normal(0.0, self.sigma, size=shape)

    def points(self, structure: BlockStructure, stream: int = 0) -> np.ndarray:
        pinned = [_flat(p, structure) for p in self.pinned_points]
        X = self._draw(structure, stream, self.count)
        return np.vstack(pinned + [X]) if pinned else X

    def pairs(self, structure: BlockStructure) -> tuple[np.ndarray, np.ndarray]:
        X, Y = self._draw(structure, 0, self.count), self._draw(structure, 1, self.count)
        if self.pinned_pairs:
            PX = np.array([_flat(p[0], structure) for p in self.pinned_pairs])
            PY = np.array([_flat(p[1], structure) for p in self.pinned_pairs])
            X, Y = np.vstack([PX, X]), np.vstack([PY, Y])
        return X, Y


def _flat(p, structure: BlockStructure) -> np.ndarray:
    return as_product_vector(p, structure).data


@dataclass
class PropertyReport:
    """Outcome of one sampled check."""

    property: str
    params: dict[str, Any]
    samples_tested: int
    max_violation: float
    tolerance: float
    verdict: str
    seed: int | None = None
    witness: dict[str, Any] | None = None
    operator: dict[str, Any] | None = None
    note: str = ""
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict[str, Any]:
        return {
            "property": self.property,
            "params": self.params,
            "seed": self.seed,
            "samples_tested": self.samples_tested,
            "max_violation": self.max_violation,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "witness": self.witness,
            "operator": self.operator,
            "note": self.note,
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def summary(self) -> str:
        j = self.params.get("j")
        where = {None: "full space", "all": "all components"}.get(j, f"j={j}")
        return (f"{self.property} ({where}): {self.verdict.upper()} "
                f"max_violation={self.max_violation:.3e} over {self.samples_tested} samples")


@dataclass(frozen=True)
class FixedPointCertificate:
    """Points verified to lie in ``Fix^j T`` (or in ``Fix T`` when ``j`` is None)."""

    points: tuple[ProductVector, ...]
    tolerance: float = DEFAULT_TOL
    j: int | None = None

    @classmethod
    def certify(cls, T: OperatorSpec, points, j: int | None = None,
                tolerance: float = DEFAULT_TOL) -> "FixedPointCertificate":
        pts = tuple(as_product_vector(p, T.structure) for p in points)
        cert = cls(pts, tolerance, j)
        cert.verify(T, j)
        return cert

    def verify(self, T: OperatorSpec, j: int | None = None) -> None:
        """Raise :class:`PreconditionError` unless every point is a (j-th) fixed point of T."""
        if not self.points:
            raise PreconditionError("fixed point certificate is empty")
        comps = range(1, T.structure.n + 1) if j is None else [j]
        for z in self.points:
            for k in comps:
                r = fix_j_residual(T, z, k)
                if r > self.tolerance:
                    raise PreconditionError(
                        f"certificate point {z} is not in Fix^{k} T (residual {r:.3e})"
                    )

    def array(self) -> np.ndarray:
        return np.vstack([p.data for p in self.points])


# --------------------------------------------------------------------------
# helpers


def _check_j(T: OperatorSpec, j):
    return None if j is None else T.structure.check_index(j)


def _img(T, X, j):
    return ops.apply_batch(T, X) if j is None else apply_component_batch(T, X, j)


def _blk(T, X, j):
    return X if j is None else X[:, T.structure.slice(j)]


def _rownorm(D):
    return np.sqrt(np.einsum("ij,ij->i", D, D))


def _rowdot(A, B):
    return np.einsum("ij,ij->i", A, B)


def _vec(row: np.ndarray) -> list[float]:
    return [float(v) for v in row]


def _report(prop, T, j, params, sampler, viol, tol, witness_fn, *, operator=None,
            note_extra="", flags=(), threshold=None) -> PropertyReport:
    viol = np.asarray(viol, dtype=float).reshape(-1)
    viol = np.where(np.isnan(viol), np.inf, viol)
    limit = tol if threshold is None else threshold
    params = {"j": j, **params}
    op_doc = (operator or T).to_dict()
    seed = None if sampler is None else int(sampler.seed)
    if viol.size == 0:
        return PropertyReport(prop, params, 0, 0.0, limit, "pass", seed, None, op_doc,
                              f"vacuous: no applicable samples; {PASS_NOTE}", tuple(flags))
    idx = int(np.argmax(viol))
    worst = float(viol[idx])
    failed = worst > limit
    witness = witness_fn(idx) if failed else None
    if witness is not None:
        witness = {"dims": list(T.structure.dims), "index": idx, **witness}
    note = "counterexample found" if failed else PASS_NOTE
    if note_extra:
        note = f"{note}; {note_extra}"
    return PropertyReport(prop, params, int(viol.size), worst, limit,
                          "fail" if failed else "pass", seed, witness, op_doc, note, tuple(flags))


def _pair_witness(X, Y, **extra):
    def fn(idx):
        return {"x": _vec(X[idx]), "y": _vec(Y[idx]), **extra}
    return fn


# --------------------------------------------------------------------------
# componental fixed points


def fix_j_residual(T: OperatorSpec, x, j: int) -> float:
    """``||(T x)_j - x_j||``; zero exactly when ``x`` is in ``Fix^j T``."""
    x = as_product_vector(x, T.structure)
    return float(np.linalg.norm(ops.apply_component(T, x, j) - x.block(j)))


# --------------------------------------------------------------------------
# pairwise (Lipschitz-type) properties


def _ne_viol(T, j, X, Y):
    return _rownorm(_img(T, X, j) - _img(T, Y, j)) - _rownorm(_blk(T, X, j) - _blk(T, Y, j))


def _fne_viol(T, j, X, Y):
    D = _img(T, X, j) - _img(T, Y, j)
    return _rowdot(D, D) - _rowdot(D, _blk(T, X, j) - _blk(T, Y, j))


def _firm_ineq_viol(T, j, X, Y):
    D = _img(T, X, j) - _img(T, Y, j)
    d = _blk(T, X, j) - _blk(T, Y, j)
    R = d - D
    return _rowdot(D, D) - _rowdot(d, d) + _rowdot(R, R)


def check_j_nonexpansive(T: OperatorSpec, j: int | None, sampler: Sampler,
                         tol: float = DEFAULT_TOL) -> PropertyReport:
    """``||(Tx)_j - (Ty)_j|| <= ||x_j - y_j||`` on sampled pairs."""
    j = _check_j(T, j)
    X, Y = sampler.pairs(T.structure)
    return _report("nonexpansive", T, j, {}, sampler, _ne_viol(T, j, X, Y), tol,
                   _pair_witness(X, Y))


def check_cw_nonexpansive(T: OperatorSpec, sampler: Sampler,
                          tol: float = DEFAULT_TOL) -> list[PropertyReport]:
    return [check_j_nonexpansive(T, j, sampler, tol) for j in range(1, T.structure.n + 1)]


def check_j_fne(T: OperatorSpec, j: int | None, sampler: Sampler,
                tol: float = DEFAULT_TOL) -> PropertyReport:
    """``<(Tx)_j - (Ty)_j, x_j - y_j> >= ||(Tx)_j - (Ty)_j||^2`` on sampled pairs."""
    j = _check_j(T, j)
    X, Y = sampler.pairs(T.structure)
    return _report("firmly-nonexpansive", T, j, {}, sampler, _fne_viol(T, j, X, Y), tol,
                   _pair_witness(X, Y))


def check_j_rfne(T: OperatorSpec, j: int | None, lam: float, sampler: Sampler,
                 tol: float = DEFAULT_TOL) -> PropertyReport:
    """Test whether ``(T.)_j`` is the ``lam``-relaxation of a j-FNE operator.

    The candidate ``U = Id + (1/lam)(T - Id)`` is formed and checked for j-FNE.
    """
    if not (np.isfinite(lam) and 0 < lam <= 2):
        raise ParameterError(f"relaxation must lie in (0, 2], got {lam}")
    j = _check_j(T, j)
    U = ops.relax(T, 1.0 / lam)
    X, Y = sampler.pairs(T.structure)
    return _report("relaxed-firmly-nonexpansive", T, j, {"lam": float(lam)}, sampler,
                   _fne_viol(U, j, X, Y), tol, _pair_witness(X, Y), operator=U)


def check_j_averaged(T: OperatorSpec, j: int | None, alpha: float, sampler: Sampler,
                     tol: float = DEFAULT_TOL) -> PropertyReport:
    """Test ``(Tx)_j = (1-alpha) x_j + alpha (Ux)_j`` with U j-NE, U formed from T."""
    if not (np.isfinite(alpha) and 0 < alpha < 1):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    j = _check_j(T, j)
    U = ops.relax(T, 1.0 / alpha)
    X, Y = sampler.pairs(T.structure)
    return _report("averaged", T, j, {"alpha": float(alpha)}, sampler,
                   _ne_viol(U, j, X, Y), tol, _pair_witness(X, Y), operator=U)


def check_j_contraction(T: OperatorSpec, j: int | None, alpha: float, sampler: Sampler,
                        tol: float = DEFAULT_TOL) -> PropertyReport:
    """``||(Tx)_j - (Ty)_j|| <= alpha ||x_j - y_j||`` with ``alpha`` in [0, 1)."""
    if not (np.isfinite(alpha) and 0 <= alpha < 1):
        raise ParameterError(f"contraction modulus must lie in [0, 1), got {alpha}")
    j = _check_j(T, j)
    X, Y = sampler.pairs(T.structure)
    viol = _rownorm(_img(T, X, j) - _img(T, Y, j)) - alpha * _rownorm(_blk(T, X, j) - _blk(T, Y, j))
    return _report("contraction", T, j, {"alpha": float(alpha)}, sampler, viol, tol,
                   _pair_witness(X, Y))


def estimate_contraction_modulus(T: OperatorSpec, j: int | None, sampler: Sampler) -> float:
    """Largest sampled ratio ``||(Tx)_j - (Ty)_j|| / ||x_j - y_j||``.

    Pairs with ``||x_j - y_j|| < 1e-12`` are skipped.  The result is a lower
    bound on the true Lipschitz modulus of component ``j``.
    """
    j = _check_j(T, j)
    X, Y = sampler.pairs(T.structure)
    den = _rownorm(_blk(T, X, j) - _blk(T, Y, j))
    keep = den >= 1e-12
    if not np.any(keep):
        raise SamplingError("all sampled pairs coincide in the tested component")
    num = _rownorm(_img(T, X[keep], j) - _img(T, Y[keep], j))
    return float(np.max(num / den[keep]))


# --------------------------------------------------------------------------
# properties relative to fixed points


def _against_cert(T, j, cert, sampler, viol_fn):
    """Evaluate ``viol_fn(TXj, Xj, zj)`` for all sampled x and certificate z.

    Returns violations ordered by sample index first, then certificate index.
    """
    if cert is None or not cert.points:
        raise PreconditionError("a nonempty fixed point certificate is required")
    cert.verify(T, j)
    X = sampler.points(T.structure)
    TX = _img(T, X, j)
    Xj = _blk(T, X, j)
    Z = cert.array()
    Zj = _blk(T, Z, j)
    V = np.stack([viol_fn(TX, Xj, z) for z in Zj], axis=1)
    p = Z.shape[0]

    def witness(idx):
        i, k = divmod(idx, p)
        return {"x": _vec(X[i]), "z": _vec(Z[k])}

    return X, V, witness


def check_j_cutter(T: OperatorSpec, j: int | None, cert: FixedPointCertificate,
                   sampler: Sampler, tol: float = DEFAULT_TOL) -> PropertyReport:
    """``<x_j - (Tx)_j, z_j - (Tx)_j> <= 0`` for sampled x and certified z."""
    j = _check_j(T, j)
    X, V, wit = _against_cert(
        T, j, cert, sampler, lambda TX, Xj, z: _rowdot(Xj - TX, z - TX))
    return _report("cutter", T, j, {"certificate_size": len(cert.points)}, sampler, V, tol, wit)


def check_j_qne(T: OperatorSpec, j: int | None, cert: FixedPointCertificate,
                sampler: Sampler, tol: float = DEFAULT_TOL) -> PropertyReport:
    """``||(Tx)_j - z_j|| <= ||x_j - z_j||`` for sampled x and certified z."""
    j = _check_j(T, j)
    X, V, wit = _against_cert(
        T, j, cert, sampler, lambda TX, Xj, z: _rownorm(TX - z) - _rownorm(Xj - z))
    return _report("quasi-nonexpansive", T, j, {"certificate_size": len(cert.points)},
                   sampler, V, tol, wit)


def check_j_sqne(T: OperatorSpec, j: int | None, rho: float, cert: FixedPointCertificate,
                 sampler: Sampler, tol: float = DEFAULT_TOL) -> PropertyReport:
    """``||(Tx)_j - z_j||^2 <= ||x_j - z_j||^2 - rho ||(Tx)_j - x_j||^2``."""
    if not (np.isfinite(rho) and rho > 0):
        raise ParameterError(f"rho must be positive, got {rho}")
    j = _check_j(T, j)

    def viol(TX, Xj, z):
        a, b, c = TX - z, TX - Xj, Xj - z
        return _rowdot(a, a) + rho * _rowdot(b, b) - _rowdot(c, c)

    X, V, wit = _against_cert(T, j, cert, sampler, viol)
    return _report("strongly-quasi-nonexpansive", T, j,
                   {"rho": float(rho), "certificate_size": len(cert.points)},
                   sampler, V, tol, wit)


def check_j_sqne_strict(T: OperatorSpec, j: int | None, cert: FixedPointCertificate,
                        sampler: Sampler, tol: float = DEFAULT_TOL) -> PropertyReport:
    """Strict decrease ``||(Tx)_j - z_j|| < ||x_j - z_j||`` for sampled x outside ``Fix^j T``.

    Samples with ``||(Tx)_j - x_j|| <= tol`` count as fixed and are skipped.
    The decrease must exceed ``1e-12 (1 + ||x_j - z_j||)``; the report
    threshold is therefore 0.
    """
    j = _check_j(T, j)

    def viol(TX, Xj, z):
        dist = _rownorm(Xj - z)
        v = _rownorm(TX - z) - dist + STRICT_MARGIN * (1.0 + dist)
        return np.where(_rownorm(TX - Xj) > tol, v, np.nan)

    X, V, wit = _against_cert(T, j, cert, sampler, viol)
    applicable = ~np.isnan(V).reshape(-1)
    flat = V.reshape(-1)
    positions = np.flatnonzero(applicable)
    return _report("strictly-quasi-nonexpansive", T, j,
                   {"certificate_size": len(cert.points), "fixed_tolerance": tol,
                    "margin": STRICT_MARGIN},
                   sampler, flat[applicable], 0.0, lambda idx: wit(int(positions[idx])))


def check_fj_membership(T: OperatorSpec, z, j: int | None, sampler: Sampler,
                        tol: float = DEFAULT_TOL) -> PropertyReport:
    """Sampled test of ``z`` in ``F^j(T)``: ``||(Tx)_j - z_j|| <= ||x_j - z_j||`` for all x.

    ``x = z`` is always the first sample, so a point outside ``Fix^j T``
    fails with itself as the witness.
    """
    j = _check_j(T, j)
    z = as_product_vector(z, T.structure)
    X = np.vstack([z.data[None, :], sampler.points(T.structure)])
    zj = _blk(T, z.data[None, :], j)
    viol = _rownorm(_img(T, X, j) - zj) - _rownorm(_blk(T, X, j) - zj)
    return _report("fj-membership", T, j, {"z": _vec(z.data)}, sampler, viol, tol,
                   lambda idx: {"x": _vec(X[idx]), "z": _vec(z.data)})


# --------------------------------------------------------------------------
# batteries


def check_fne_battery(T: OperatorSpec, j: int | None, sampler: Sampler,
                      tol: float = DEFAULT_TOL) -> list[PropertyReport]:
    """Run the five equivalent characterizations of j-firm nonexpansiveness.

    Conditions, in order: (i) T is j-FNE; (ii) every relaxation ``T_lam`` with
    lam in {0, 1/2, 1, 3/2, 2} is j-NE; (iii) ``2T - Id`` is j-NE; (iv)
    ``Id - T`` is j-FNE; (v) ``||Dx||^2 <= ||d||^2 - ||d - Dx||^2``.  Since the
    conditions are equivalent, their verdicts should agree; if they do not,
    every report gets the flag ``"inconsistent"``.
    """
    j = _check_j(T, j)
    X, Y = sampler.pairs(T.structure)
    wit = _pair_witness(X, Y)
    reports = [
        _report("firmly-nonexpansive", T, j, {"condition": "i"}, sampler,
                _fne_viol(T, j, X, Y), tol, wit),
    ]
    per_lam = np.stack([_ne_viol(ops.relax(T, lam), j, X, Y) for lam in FNE_BATTERY_RELAXATIONS], axis=1)
    nl = len(FNE_BATTERY_RELAXATIONS)
    reports.append(_report(
        "relaxations-nonexpansive", T, j,
        {"condition": "ii", "lams": list(FNE_BATTERY_RELAXATIONS)}, sampler, per_lam, tol,
        lambda idx: {"x": _vec(X[idx // nl]), "y": _vec(Y[idx // nl]),
                     "lam": FNE_BATTERY_RELAXATIONS[idx % nl]}))
    S = ops.relax(T, 2.0)
    reports.append(_report("nonexpansive", T, j, {"condition": "iii", "derived": "2T - Id"},
                           sampler, _ne_viol(S, j, X, Y), tol, wit, operator=S))
    C = ops.complement(T)
    reports.append(_report("firmly-nonexpansive", T, j, {"condition": "iv", "derived": "Id - T"},
                           sampler, _fne_viol(C, j, X, Y), tol, wit, operator=C))
    reports.append(_report("firm-inequality", T, j, {"condition": "v"}, sampler,
                           _firm_ineq_viol(T, j, X, Y), tol, wit))
    if len({r.verdict for r in reports}) > 1:
        log.warning("equivalent conditions disagree for j=%s: %s", j,
                    [r.verdict for r in reports])
        for r in reports:
            r.flags = r.flags + ("inconsistent",)
    return reports


# older name kept for callers of the original API
check_fact3_battery = check_fne_battery


def battery_consistent(reports: Sequence[PropertyReport]) -> bool:
    return len({r.verdict for r in reports}) <= 1


def check_component_locality(T: OperatorSpec, j: int, sampler: Sampler,
                             tol: float = DEFAULT_TOL) -> PropertyReport:
    """Check that component ``j`` of the image depends only on ``x_j``.

    Each sampled ``x`` is paired with ``x'`` that agrees with it in block
    ``j`` and is redrawn everywhere else.  The report is labelled
    ``"conditioned"`` when T also passes the j-NE check on the same sampler
    and ``"unconditioned"`` otherwise.
    """
    j = T.structure.check_index(j)
    X = sampler.points(T.structure, stream=0)
    other = sampler.points(T.structure, stream=1)
    sl = T.structure.slice(j)
    Xp = other.copy()
    Xp[:, sl] = X[:, sl]
    viol = _rownorm(_img(T, X, j) - _img(T, Xp, j))
    ne = check_j_nonexpansive(T, j, sampler, tol)
    label = "conditioned" if ne.passed else "unconditioned"
    return _report("locality", T, j, {}, sampler, viol, tol,
                   lambda idx: {"x": _vec(X[idx]), "y": _vec(Xp[idx])}, flags=(label,))


def search_relaxation_constant(T: OperatorSpec, j: int | None, grid: Sequence[float],
                               sampler: Sampler, tol: float = DEFAULT_TOL,
                               kind: str = "rfne") -> float | None:
    """First constant in ``grid`` for which the RFNE (or averaged) check passes.

    A convenience for exploration; a ``None`` result proves nothing.
    """
    check: Callable = check_j_rfne if kind == "rfne" else check_j_averaged
    for c in grid:
        if check(T, j, c, sampler, tol).passed:
            return float(c)
    return None


# --------------------------------------------------------------------------
# witness re-evaluation (single-point path, independent of the batch code)


def _pt_img(T, x, j):
    x = ProductVector(T.structure, x)
    return ops.apply(T, x).data if j is None else ops.apply_component(T, x, j)


def _pt_blk(T, x, j):
    x = np.asarray(x, dtype=float)
    return x if j is None else x[T.structure.slice(j)]


def _pt_pair(T, j, x, y):
    return _pt_img(T, x, j) - _pt_img(T, y, j), _pt_blk(T, x, j) - _pt_blk(T, y, j)


def _pt_ne(T, j, x, y):
    D, d = _pt_pair(T, j, x, y)
    return np.linalg.norm(D) - np.linalg.norm(d)


def _pt_fne(T, j, x, y):
    D, d = _pt_pair(T, j, x, y)
    return float(D @ D - D @ d)


def _pt_target(T, j, x, z):
    return _pt_img(T, x, j), _pt_blk(T, x, j), _pt_blk(T, z, j)


def recheck_witness(report: PropertyReport) -> float:
    """Recompute the violation stored in a failing report from its witness alone."""
    if report.witness is None:
        raise PreconditionError("report carries no witness")
    T = ops.from_dict(report.operator)
    j = report.params.get("j")
    w = report.witness
    p = report.property
    if p in ("nonexpansive", "averaged"):
        return float(_pt_ne(T, j, w["x"], w["y"]))
    if p in ("firmly-nonexpansive", "relaxed-firmly-nonexpansive"):
        return _pt_fne(T, j, w["x"], w["y"])
    if p == "relaxations-nonexpansive":
        return float(_pt_ne(ops.relax(T, w["lam"]), j, w["x"], w["y"]))
    if p == "firm-inequality":
        D, d = _pt_pair(T, j, w["x"], w["y"])
        return float(D @ D - d @ d + (d - D) @ (d - D))
    if p == "contraction":
        D, d = _pt_pair(T, j, w["x"], w["y"])
        return float(np.linalg.norm(D) - report.params["alpha"] * np.linalg.norm(d))
    if p == "locality":
        return float(np.linalg.norm(_pt_img(T, w["x"], j) - _pt_img(T, w["y"], j)))
    tx, xj, zj = _pt_target(T, j, w["x"], w["z"])
    if p == "cutter":
        return float((xj - tx) @ (zj - tx))
    if p in ("quasi-nonexpansive", "fj-membership"):
        return float(np.linalg.norm(tx - zj) - np.linalg.norm(xj - zj))
    if p == "strongly-quasi-nonexpansive":
        rho = report.params["rho"]
        return float((tx - zj) @ (tx - zj) + rho * (tx - xj) @ (tx - xj) - (xj - zj) @ (xj - zj))
    if p == "strictly-quasi-nonexpansive":
        dist = np.linalg.norm(xj - zj)
        return float(np.linalg.norm(tx - zj) - dist + STRICT_MARGIN * (1 + dist))
    raise ParameterError(f"no witness re-evaluation for property {p!r}")
