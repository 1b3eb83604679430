import json
import subprocess
import sys

import numpy as np

from cfx import problems as pb
from cfx.cli import main


def write_config(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def run(tmp_path, command, doc, *extra):
    cfg = write_config(tmp_path / f"{command}.json", doc)
    out = tmp_path / "out"
    code = main([command, "--config", cfg, "--out", str(out), *extra])
    return code, out


def write_system(tmp_path, A, b, name="sys"):
    pb.write_matrix_market(tmp_path / f"{name}.mtx", np.asarray(A, dtype=float))
    pb.write_vector(tmp_path / f"{name}.b", b)
    return {"matrix": f"{name}.mtx", "rhs": f"{name}.b"}


# -- check -------------------------------------------------------------------


def test_check_swap_refuted_with_witness(tmp_path):
    code, out = run(tmp_path, "check", {
        "operator": {"kind": "swap", "dims": [1, 1]},
        "checks": [{"property": "nonexpansive", "j": "all"}], "seed": 1})
    assert code == 1
    witnesses = sorted(out.glob("witness_*.json"))
    assert witnesses
    doc = json.loads(witnesses[0].read_text())
    assert doc["verdict"] == "fail" and doc["witness"]["x"]


def test_check_identity_passes(tmp_path):
    code, out = run(tmp_path, "check", {
        "operator": {"kind": "identity", "dims": [2, 1]},
        "checks": [{"property": "nonexpansive"}, {"property": "firmly-nonexpansive"},
                   {"property": "fne-battery"}, {"property": "locality"},
                   {"property": "cutter", "certificate": [[1, 2, 3]]},
                   {"property": "strictly-quasi-nonexpansive", "certificate": [[0, 0, 0]]}],
        "seed": 1})
    assert code == 0
    reports = json.loads((out / "check_reports.json").read_text())
    assert all(r["verdict"] == "pass" for r in reports)
    assert not list(out.glob("witness_*.json"))


def test_check_contraction_example(tmp_path):
    op = {"kind": "mixed-contraction"}
    code, _ = run(tmp_path, "check", {
        "operator": op, "checks": [{"property": "contraction", "j": 1, "alpha": 0.5}], "seed": 2})
    assert code == 0
    code, _ = run(tmp_path, "check", {
        "operator": op, "checks": [{"property": "contraction", "j": None, "alpha": 0.5}], "seed": 2})
    assert code == 1


def test_check_operator_from_file(tmp_path):
    (tmp_path / "op.json").write_text(json.dumps(
        {"kind": "relax", "lam": 1.5,
         "children": [{"kind": "hyperplane", "dims": [2], "a": [1, 2], "b": 3.0}]}))
    code, out = run(tmp_path, "check", {
        "operator": "op.json", "seed": 4,
        "checks": [{"property": "strongly-quasi-nonexpansive", "j": 1, "rho": 1 / 3,
                    "certificate": [[1, 1]]}]})
    assert code == 0


def test_check_input_errors(tmp_path):
    base = {"operator": {"kind": "swap", "dims": [1, 1]}, "seed": 1}
    assert run(tmp_path, "check", {**base, "colour": "red"})[0] == 2
    assert run(tmp_path, "check", {"operator": {"kind": "swap", "dims": [1, 1]}})[0] == 2
    assert run(tmp_path, "check", {**base, "checks": [{"property": "nonexpansive", "j": 5}]})[0] == 2
    assert run(tmp_path, "check", {**base, "checks": [{"property": "magic"}]})[0] == 2
    assert run(tmp_path, "check", {**base, "checks": [{"property": "cutter", "j": 1}]})[0] == 2
    assert run(tmp_path, "check", {"operator": {"kind": "warp"}, "seed": 1})[0] == 2
    (tmp_path / "broken.json").write_text("{")
    assert main(["check", "--config", str(tmp_path / "broken.json")]) == 2
    assert main(["check"]) == 2


def test_seed_flag_overrides_file(tmp_path):
    doc = {"operator": {"kind": "swap", "dims": [1, 1]},
           "checks": [{"property": "nonexpansive", "j": 1}], "seed": 1}
    run(tmp_path, "check", doc)
    a = (tmp_path / "out" / "check_reports.json").read_text()
    run(tmp_path, "check", doc, "--seed", "2")
    b = (tmp_path / "out" / "check_reports.json").read_text()
    assert json.loads(a)[0]["seed"] == 1 and json.loads(b)[0]["seed"] == 2


# -- solve -------------------------------------------------------------------


def test_solve_drop_diagonal(tmp_path):
    system = write_system(tmp_path, np.diag([2.0, 4.0, -1.0]), [2, 2, 3])
    code, out = run(tmp_path, "solve", {"method": "drop", "system": system, "lam": 1.0,
                                        "stop": {"residual_tol": 0.0}})
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["iterations"] == 1 and summary["final_residual"] == 0
    assert summary["final"] == [[1.0], [0.5], [-3.0]]
    rows = (out / "history.csv").read_text().splitlines()
    assert rows[0].startswith("k,residual,step_1,dist_1") and len(rows) == 3


def test_solve_picard_contraction(tmp_path):
    code, out = run(tmp_path, "solve", {
        "method": "picard", "operator": {"kind": "mixed-contraction"}, "x0": [0, 0],
        "stop": {"components": [1], "step_tol": 1e-12}})
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["final"][0][0] - 6.0) <= 1e-11
    assert summary["stop_reason"] == "step-tolerance"


def test_solve_picard_divergence(tmp_path):
    code, out = run(tmp_path, "solve", {
        "method": "picard", "operator": {"kind": "mixed-contraction"}, "x0": [0, 1]})
    assert code == 3
    summary = json.loads((out / "summary.json").read_text())
    assert summary["stop_reason"] == "divergence"
    assert len((out / "history.csv").read_text().splitlines()) == summary["iterations"] + 2


def test_solve_max_iter_flag(tmp_path):
    code, out = run(tmp_path, "solve", {
        "method": "picard", "operator": {"kind": "mixed-contraction"}, "x0": [0, 0],
        "stop": {"max_iterations": 100}}, "--max-iter", "5")
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["iterations"] == 5


def test_solve_generated_with_planted_reference(tmp_path):
    code, out = run(tmp_path, "solve", {
        "method": "cimmino", "system": {"generate": {"m": 20, "n": 10, "density": 0.3}},
        "reference": "planted", "seed": 5, "stop": {"max_iterations": 30}})
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["iterations"] == 30 and "fejer" in summary


def test_solve_feasibility_instance(tmp_path):
    (tmp_path / "cfp.json").write_text(json.dumps({
        "dims": [1, 1],
        "sets": [{"kind": "box", "lo": [0, 0], "hi": [1, 1]},
                 {"kind": "halfspace", "a": [1, 0], "b": 0.5}],
        "planted": [0.25, 0.5]}))
    code, out = run(tmp_path, "solve", {"method": "general-cw", "cfp": "cfp.json",
                                        "x0": [3, -2], "reference": "planted"})
    assert code == 0
    final = json.loads((out / "summary.json").read_text())["final"]
    assert -1e-9 <= final[0][0] <= 0.5 + 1e-9 and -1e-9 <= final[1][0] <= 1 + 1e-9


def test_solve_input_errors(tmp_path):
    assert run(tmp_path, "solve", {"method": "newton"})[0] == 2
    assert run(tmp_path, "solve", {"method": "drop", "system": {"matrix": "nope.mtx",
                                                                "rhs": "nope.b"}})[0] == 2
    system = write_system(tmp_path, np.eye(2), [1, 1])
    assert run(tmp_path, "solve", {"method": "drop", "system": system, "lam": 2.5})[0] == 2
    assert run(tmp_path, "solve", {"method": "drop", "system": system,
                                   "stop": {"patience": 3}})[0] == 2


# -- compare -----------------------------------------------------------------


def test_compare_diagonal(tmp_path):
    system = write_system(tmp_path, np.diag([1.0, 2.0, 3.0]), [1, 1, 1])
    code, out = run(tmp_path, "compare", {"system": system, "lam": 1.0, "target": 1e-12})
    assert code == 0
    summary = json.loads((out / "compare_summary.json").read_text())
    assert summary["drop_first_hit"] == 1
    assert summary["cimmino_first_hit"] > 1
    rows = (out / "compare.csv").read_text().splitlines()
    assert rows[0] == "k,drop_relative_residual,cimmino_relative_residual"
    assert rows[2].split(",")[1] == "0"


def test_compare_single_row_curves_identical(tmp_path):
    system = write_system(tmp_path, [[1.0, 2.0, 0.5]], [3.0])
    code, out = run(tmp_path, "compare", {"system": system, "target": 1e-9})
    assert code == 0
    for row in (out / "compare.csv").read_text().splitlines()[1:]:
        k, d, c = row.split(",")
        assert d == c


def test_compare_pinned_instance(tmp_path):
    code, out = run(tmp_path, "compare", {
        "system": {"generate": {"m": 200, "n": 100, "density": 0.05}}, "lam": 1.0,
        "target": 1e-3, "seed": pb.DEFAULT_SEED})
    assert code == 0
    s = json.loads((out / "compare_summary.json").read_text())
    assert (s["drop_first_hit"], s["cimmino_first_hit"]) == (182, 6294)


# -- reproducibility and entry point -------------------------------------------


def test_reruns_are_byte_identical(tmp_path):
    system = write_system(tmp_path, [[1.0, 1.0, 0.0], [0.0, 1.0, 2.0], [1.0, 0.0, 1.0]], [2, 3, 2])
    docs = {
        "check": {"operator": {"kind": "swap", "dims": [1, 1]}, "seed": 7,
                  "checks": [{"property": "fne-battery", "j": "all"}]},
        "solve": {"method": "drop", "system": system, "stop": {"max_iterations": 50}},
        "compare": {"system": system, "target": 1e-6},
    }
    for command, doc in docs.items():
        outs = []
        for rep in range(2):
            cfg = write_config(tmp_path / f"{command}.json", doc)
            out = tmp_path / f"{command}_{rep}"
            main([command, "--config", cfg, "--out", str(out)])
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert outs[0] == outs[1]
        assert not [n for n in outs[0] if n.endswith(".tmp")]


def test_console_script(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"operator": {"kind": "identity", "dims": [1]},
                                             "seed": 3})
    proc = subprocess.run([sys.executable, "-m", "cfx.cli", "check", "--config", cfg,
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout
