"""
Command line front end.

    cfx check|solve|compare --config <path> [--seed N] [--out DIR] [--max-iter N]

Exit codes: 0 pass/converged, 1 property refuted, 2 input error, 3 divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import operators as ops
from . import property_checks as pc
from . import solvers
from .errors import CfxError, DivergenceError, InputError
from .problems import (
    DEFAULT_SEED,
    LinearSystem,
    load_cfp,
    load_system,
    plant_consistent_system,
)

log = logging.getLogger("cfx")

EXIT_OK, EXIT_REFUTED, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2, 3

_KEYS = {
    "check": {"operator", "checks", "sampler", "tolerance", "seed", "out"},
    "solve": {"method", "operator", "system", "cfp", "lam", "weights", "x0", "stop",
              "reference", "strict", "seed", "out", "keep_every"},
    "compare": {"system", "lam", "target", "x0", "stop", "seed", "out"},
}
_CHECK_KEYS = {"property", "j", "alpha", "lam", "rho", "certificate", "z"}
_SAMPLER_KEYS = {"distribution", "count", "lo", "hi", "sigma", "pinned_pairs", "pinned_points"}
_STOP_KEYS = {"max_iterations", "step_tol", "residual_tol", "components"}
_SYSTEM_KEYS = {"matrix", "rhs", "generate"}
_GENERATE_KEYS = {"m", "n", "density"}


@dataclass
class ExperimentConfig:
    """Validated configuration for one command; relative paths resolve against ``base``."""

    command: str
    data: dict[str, Any]
    base: Path = field(default_factory=Path.cwd)

    @property
    def seed(self) -> int | None:
        return self.data.get("seed")

    @property
    def out(self) -> Path:
        return self.path(self.data.get("out", "."))

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base / p


def _reject_unknown(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise InputError(f"{where} must be a JSON object")
    extra = sorted(set(d) - allowed)
    if extra:
        raise InputError(f"unknown key(s) in {where}: {', '.join(extra)}")


def load_config(path, command: str, seed=None, out=None, max_iter=None) -> ExperimentConfig:
    """Read and validate a config file; command-line overrides win over file values."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    _reject_unknown(data, _KEYS[command], f"{command} config")
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["out"] = str(Path(out).resolve())
    if max_iter is not None:
        data["stop"] = {**data.get("stop", {}), "max_iterations": max_iter}
    if "stop" in data:
        _reject_unknown(data["stop"], _STOP_KEYS, "stop")
    if "sampler" in data:
        _reject_unknown(data["sampler"], _SAMPLER_KEYS, "sampler")
    for i, chk in enumerate(data.get("checks", [])):
        _reject_unknown(chk, _CHECK_KEYS, f"checks[{i}]")
    if "system" in data:
        _reject_unknown(data["system"], _SYSTEM_KEYS, "system")
        if "generate" in data["system"]:
            _reject_unknown(data["system"]["generate"], _GENERATE_KEYS, "system.generate")
    return ExperimentConfig(command, data, path.parent.resolve())


# --------------------------------------------------------------------------
# output helpers


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# loading pieces of a config


def _load_operator(cfg: ExperimentConfig) -> ops.OperatorSpec:
    doc = cfg.data.get("operator")
    if doc is None:
        raise InputError("config needs an 'operator'")
    if isinstance(doc, str):
        try:
            doc = json.loads(cfg.path(doc).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read operator file: {exc}") from exc
    return ops.from_dict(doc)


def _require_seed(cfg: ExperimentConfig) -> int:
    if cfg.seed is None:
        raise InputError("a seed is required (config 'seed' or --seed)")
    return int(cfg.seed)


def _load_system(cfg: ExperimentConfig):
    sysd = cfg.data.get("system")
    if sysd is None:
        raise InputError("config needs a 'system'")
    if "generate" in sysd:
        g = sysd["generate"]
        try:
            seed = DEFAULT_SEED if cfg.seed is None else int(cfg.seed)
            return plant_consistent_system(int(g["m"]), int(g["n"]), float(g["density"]), seed)
        except KeyError as exc:
            raise InputError(f"system.generate is missing {exc}") from None
    try:
        return load_system(cfg.path(sysd["matrix"]), cfg.path(sysd["rhs"])), None
    except KeyError as exc:
        raise InputError(f"system is missing {exc}") from None


def _stop(cfg: ExperimentConfig, **defaults) -> solvers.StopRule:
    d = {**defaults, **cfg.data.get("stop", {})}
    return solvers.StopRule(**d)


# --------------------------------------------------------------------------
# check


def _run_check(T, chk: dict, sampler: pc.Sampler, tol: float) -> list[pc.PropertyReport]:
    prop = chk.get("property")
    j_spec = chk.get("j", "all")
    if j_spec == "all":
        js = list(range(1, T.structure.n + 1))
    else:
        js = [None if j_spec is None else int(j_spec)]

    def cert(j):
        pts = chk.get("certificate")
        if not pts:
            raise InputError(f"property {prop!r} needs a 'certificate' point list")
        return pc.FixedPointCertificate.certify(T, pts, j, tol)

    out: list[pc.PropertyReport] = []
    for j in js:
        if prop == "nonexpansive":
            out.append(pc.check_j_nonexpansive(T, j, sampler, tol))
        elif prop == "firmly-nonexpansive":
            out.append(pc.check_j_fne(T, j, sampler, tol))
        elif prop == "relaxed-firmly-nonexpansive":
            out.append(pc.check_j_rfne(T, j, float(chk["lam"]), sampler, tol))
        elif prop == "averaged":
            out.append(pc.check_j_averaged(T, j, float(chk["alpha"]), sampler, tol))
        elif prop == "contraction":
            out.append(pc.check_j_contraction(T, j, float(chk["alpha"]), sampler, tol))
        elif prop == "cutter":
            out.append(pc.check_j_cutter(T, j, cert(j), sampler, tol))
        elif prop == "quasi-nonexpansive":
            out.append(pc.check_j_qne(T, j, cert(j), sampler, tol))
        elif prop == "strongly-quasi-nonexpansive":
            out.append(pc.check_j_sqne(T, j, float(chk["rho"]), cert(j), sampler, tol))
        elif prop == "strictly-quasi-nonexpansive":
            out.append(pc.check_j_sqne_strict(T, j, cert(j), sampler, tol))
        elif prop == "fj-membership":
            out.append(pc.check_fj_membership(T, chk["z"], j, sampler, tol))
        elif prop == "locality":
            out.append(pc.check_component_locality(T, j, sampler, tol))
        elif prop == "fne-battery":
            out.extend(pc.check_fne_battery(T, j, sampler, tol))
        elif prop == "modulus":
            est = pc.estimate_contraction_modulus(T, j, sampler)
            out.append(pc.PropertyReport(
                "modulus-estimate", {"j": j, "estimate": est}, sampler.count, est,
                float("inf"), "pass", int(sampler.seed),
                note="sampled lower bound on the Lipschitz modulus; informational"))
        else:
            raise InputError(f"unknown property {prop!r}")
    return out


def cmd_check(cfg: ExperimentConfig) -> int:
    T = _load_operator(cfg)
    seed = _require_seed(cfg)
    sampler = pc.Sampler(seed=seed, **cfg.data.get("sampler", {}))
    tol = float(cfg.data.get("tolerance", pc.DEFAULT_TOL))
    checks = cfg.data.get("checks") or [{"property": "nonexpansive"}]
    reports = []
    for chk in checks:
        try:
            reports.extend(_run_check(T, chk, sampler, tol))
        except KeyError as exc:
            raise InputError(f"check {chk.get('property')!r} is missing {exc}") from None
    out = cfg.out
    write_atomic(out / "check_reports.json", dump_json([r.to_dict() for r in reports]))
    failed = 0
    for idx, r in enumerate(reports):
        print(r.summary())
        if not r.passed:
            failed += 1
            write_atomic(out / f"witness_{idx:03d}_{r.property}.json", dump_json(r.to_dict()))
    return EXIT_REFUTED if failed else EXIT_OK


# --------------------------------------------------------------------------
# solve


def _summary_from(history: solvers.IterationHistory, extra: dict | None = None) -> dict:
    d = {
        "method": history.method,
        "iterations": history.iterations,
        "stop_reason": history.stop_reason,
        "final": [b.tolist() for b in history.final.blocks],
    }
    if history.residuals is not None:
        d["final_residual"] = float(history.residuals[-1])
        d["final_relative_residual"] = float(history.relative_residuals()[-1])
    if extra:
        d.update(extra)
    return d


def cmd_solve(cfg: ExperimentConfig) -> int:
    method = cfg.data.get("method")
    if method not in ("picard", "cimmino", "drop", "general-cw"):
        raise InputError(f"unknown or missing method {method!r}")
    lam = float(cfg.data.get("lam", 1.0))
    strict = bool(cfg.data.get("strict", True))
    keep = int(cfg.data.get("keep_every", 1))
    x0 = cfg.data.get("x0")
    reference = cfg.data.get("reference")
    weights = cfg.data.get("weights")
    stop = _stop(cfg)

    if method == "picard":
        problem = _load_operator(cfg)
    elif "cfp" in cfg.data:
        if method != "general-cw":
            raise InputError("a feasibility instance needs method 'general-cw'")
        inst = load_cfp(cfg.path(cfg.data["cfp"]))
        W = (ops.WeightMatrix.uniform(inst.m, inst.structure.n) if weights in (None, "uniform")
             else ops.WeightMatrix(weights))
        problem = (list(inst.sets), W)
        weights = None
        if reference == "planted":
            reference = inst.planted
    else:
        problem, planted = _load_system(cfg)
        if reference == "planted":
            if planted is None:
                raise InputError("'planted' reference needs a generated system")
            reference = planted
        if method == "general-cw" and isinstance(weights, list):
            weights = ops.WeightMatrix(weights)
    if isinstance(reference, str):
        raise InputError(f"unknown reference {reference!r}")

    out = cfg.out
    try:
        hist = solvers.solve(method, problem, x0=x0, lam=lam, weights=weights, stop=stop,
                             reference=reference, strict=strict, keep_every=keep)
    except DivergenceError as exc:
        if exc.history is not None:
            write_atomic(out / "history.csv", exc.history.to_csv())
            write_atomic(out / "summary.json",
                         dump_json(_summary_from(exc.history, {"error": str(exc)})))
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    extra = {}
    if hist.reference is not None and hist.iterations > 0:
        extra["fejer"] = solvers.fejer_monitor(hist).to_dict()
    summary = _summary_from(hist, extra)
    write_atomic(out / "history.csv", hist.to_csv())
    write_atomic(out / "summary.json", dump_json(summary))
    print(f"{method}: {hist.iterations} iterations, stop reason {hist.stop_reason}")
    return EXIT_OK


# --------------------------------------------------------------------------
# compare


def compare_runs(system: LinearSystem, lam: float, target: float, stop: solvers.StopRule,
                 x0=None) -> tuple[solvers.IterationHistory, solvers.IterationHistory]:
    """DROP and uniform-weight Cimmino from the same start with the same relaxation.

    Each run stops once its relative residual is at most ``target`` (or by ``stop``).
    """
    bn = float(np.linalg.norm(system.b))
    rtol = target * bn / (1.0 + bn) * (1.0 - 1e-9) if bn > 0 else target
    rule = solvers.StopRule(stop.max_iterations, stop.step_tol, rtol)
    drop = solvers.solve("drop", system, x0=x0, lam=lam, stop=rule, keep_every=stop.max_iterations)
    cim = solvers.solve("cimmino", system, x0=x0, lam=lam, stop=rule,
                        keep_every=stop.max_iterations)
    return drop, cim


def compare_csv(drop: solvers.IterationHistory, cim: solvers.IterationHistory) -> str:
    rd, rc = drop.relative_residuals(), cim.relative_residuals()
    lines = ["k,drop_relative_residual,cimmino_relative_residual"]
    for k in range(max(rd.size, rc.size)):
        a = format(float(rd[k]), ".17g") if k < rd.size else ""
        b = format(float(rc[k]), ".17g") if k < rc.size else ""
        lines.append(f"{k},{a},{b}")
    return "\n".join(lines) + "\n"


def cmd_compare(cfg: ExperimentConfig) -> int:
    system, _ = _load_system(cfg)
    lam = float(cfg.data.get("lam", 1.0))
    target = float(cfg.data.get("target", 1e-3))
    stop = _stop(cfg, step_tol=0.0)
    try:
        drop, cim = compare_runs(system, lam, target, stop, cfg.data.get("x0"))
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    summary = {
        "m": system.m, "n": system.n, "lam": lam, "target": target,
        "drop_first_hit": drop.first_below(target),
        "cimmino_first_hit": cim.first_below(target),
        "drop_iterations": drop.iterations, "cimmino_iterations": cim.iterations,
    }
    out = cfg.out
    write_atomic(out / "compare.csv", compare_csv(drop, cim))
    write_atomic(out / "compare_summary.json", dump_json(summary))
    print(f"first iteration with relative residual <= {target:g}: "
          f"DROP {summary['drop_first_hit']}, Cimmino {summary['cimmino_first_hit']}")
    return EXIT_OK


_COMMANDS = {"check": cmd_check, "solve": cmd_solve, "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfx", description=__doc__.strip().splitlines()[0])
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.command, args.seed, args.out, args.max_iter)
        return _COMMANDS[args.command](cfg)
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (CfxError, IndexError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
