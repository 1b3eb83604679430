import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfx import operators as ops
from cfx import problems as pb
from cfx import solvers as sv
from cfx.errors import (
    DegenerateColumnError,
    DivergenceError,
    ParameterError,
    WeightError,
)
from cfx.product_space import BlockStructure

MC = ops.MixedContraction()


def constant_map(c):
    return ops.AffineMap((1, 1), np.zeros((2, 2)), c)


def closed_form_x1(k):
    return 6.0 * (1.0 - 2.0 ** -k)


# -- Picard ------------------------------------------------------------------


def test_picard_identity_stops_after_one_step():
    h = sv.picard(ops.Identity((2, 1)), [1, 2, 3])
    assert h.iterations == 1 and h.stop_reason == "step-tolerance"
    assert h.final.data.tolist() == [1, 2, 3]


def test_picard_contraction_example():
    h = sv.picard(MC, [0, 0], sv.StopRule(max_iterations=40, step_tol=0.0))
    x1 = h.component_trajectory(1)[:, 0]
    assert x1[:4].tolist() == [0, 3, 4.5, 5.25]
    for k in range(41):
        assert abs(x1[k] - closed_form_x1(k)) <= 1e-12
    assert np.all(h.component_trajectory(2) == 0)
    assert h.iterate(0).data.tolist() == [0, 0]


def test_picard_diverges_in_second_component():
    with pytest.raises(DivergenceError) as info:
        sv.picard(MC, [0, 1])
    err = info.value
    assert np.all(np.isfinite(err.last_finite.data))
    assert err.history.stop_reason == "divergence"
    assert err.history.iterations >= 300
    assert err.history.final == err.last_finite


def test_component_stop_rule():
    h = sv.picard(MC, [0, 0], sv.StopRule(step_tol=1e-12, components=[1]))
    assert h.stop_reason == "step-tolerance"
    assert abs(h.final.block(1)[0] - 6) < 1e-11
    with pytest.raises(IndexError):
        sv.picard(MC, [0, 0], sv.StopRule(components=[3]))


def test_stop_rule_validation():
    with pytest.raises(ParameterError):
        sv.StopRule(max_iterations=0)
    with pytest.raises(ParameterError):
        sv.StopRule(step_tol=-1)


def test_keep_every_thins_iterates():
    h = sv.picard(MC, [0, 0], sv.StopRule(max_iterations=10, step_tol=0), keep_every=4)
    assert h.iterate_indices == [0, 4, 8, 10]
    assert h.steps.shape == (10, 2)
    with pytest.raises(KeyError):
        h.iterate(3)


# -- contraction bounds ------------------------------------------------------


def test_contraction_bounds_example():
    h = sv.picard(MC, [0, 0], sv.StopRule(max_iterations=40, step_tol=0.0))
    b = sv.contraction_bounds(h, 1, 0.5)
    k = np.arange(1, 41)
    np.testing.assert_allclose(b.a_priori, 6.0 * 2.0 ** -k, rtol=0, atol=1e-12)
    err = np.abs(h.component_trajectory(1)[1:, 0] - 6.0)
    assert np.all(err <= b.a_priori + 1e-12)
    assert b.a_posteriori[0] == 3.0 and err[0] == 3.0
    assert b.check(err)


def test_contraction_bounds_constant_map():
    h = sv.picard(constant_map([2.0, -1.0]), [5, 5], sv.StopRule(max_iterations=5, step_tol=-0.0))
    b = sv.contraction_bounds(h, 2, 0.0)
    assert np.all(b.a_priori == 0) and np.all(b.a_posteriori == 0)
    assert sv.rate_check(h, 1, 0.0, [2.0, -1.0]).passed


def test_contraction_bounds_reject_bad_alpha():
    h = sv.picard(MC, [0, 0], sv.StopRule(max_iterations=3))
    with pytest.raises(ParameterError):
        sv.contraction_bounds(h, 1, 1.0)
    with pytest.raises(ParameterError):
        sv.rate_check(sv.picard(ops.Identity((1,)), [1]), 1, 1.0, [1])
    with pytest.raises(ParameterError):
        sv.rate_check(h, 1, 0.5, None)


def test_rate_check_example():
    h = sv.picard(MC, [0, 0], sv.StopRule(max_iterations=40, step_tol=0.0))
    r = sv.rate_check(h, 1, 0.5, [6.0, 0.0])
    assert r.passed and r.tolerance == 1e-12
    assert not sv.rate_check(h, 1, 0.4, [6.0, 0.0]).passed


@given(st.integers(0, 2**31), st.floats(0.05, 0.95))
@settings(max_examples=40, deadline=None)
def test_bounds_hold_for_component_contractions(seed, alpha):
    rng = np.random.default_rng(seed)
    # block 1 is an alpha-contraction; block 2 reads block 1 only through its own formula
    M = rng.normal(size=(2, 2))
    M *= alpha / np.linalg.norm(M, 2)
    c = rng.normal(size=2)
    U = ops.block_diagonal([ops.affine_map(M, c), ops.affine_map([[1.0]], [0.25])])
    x_star = np.linalg.solve(np.eye(2) - M, c)
    h = sv.picard(U, rng.normal(size=3) * 5, sv.StopRule(max_iterations=60, step_tol=0))
    b = sv.contraction_bounds(h, 1, alpha)
    err = np.linalg.norm(h.component_trajectory(1)[1:] - x_star, axis=1)
    assert np.all(err <= b.a_priori + 1e-12 * (1 + b.a_priori))
    assert np.all(err <= b.a_posteriori + 1e-12 * (1 + b.a_posteriori))
    ref = np.concatenate([x_star, [0.0]])
    assert sv.rate_check(h, 1, alpha, ref).max_violation <= 1e-12 * (1 + err.max())


# -- linear-system steps -----------------------------------------------------


def test_cimmino_examples():
    one = pb.LinearSystem([[3.0, 4.0]], [5.0])
    z = np.array([1.0, -2.0])
    np.testing.assert_array_equal(sv.cimmino_step(one, [1.0], 1.0, z),
                                  ops.project_hyperplane([3, 4], 5.0, z))
    two = pb.LinearSystem(np.eye(2), [1, 2])
    assert sv.cimmino_step(two, [0.5, 0.5], 1.0, [0, 0]).tolist() == [0.5, 1.0]
    sol = np.array([1.0, 2.0])
    assert sv.cimmino_step(two, [0.5, 0.5], 1.3, sol).tolist() == sol.tolist()
    with pytest.raises(ParameterError):
        sv.cimmino_step(two, [0.5, 0.5], 2.0, sol)
    with pytest.raises(ParameterError):
        sv.cimmino_step(two, [0.6, 0.5], 1.0, sol)


def test_drop_examples():
    diag = pb.LinearSystem(np.diag([2.0, -1.0, 4.0]), [2, 3, 1])
    x = sv.drop_step(diag, pb.column_sparsity(diag), 1.0, [7, 7, 7])
    assert x.tolist() == [1, -3, 0.25]
    A = pb.LinearSystem([[1.0, 0.0], [1.0, 1.0]], [1, 2])
    assert sv.drop_step(A, [2, 1], 1.0, [0, 0]).tolist() == [1, 1]
    one = pb.LinearSystem([[0.0, 3.0, 4.0]], [5.0])
    z = np.array([9.0, 1.0, -2.0])
    got = sv.drop_step(one, pb.column_sparsity(pb.LinearSystem([[1.0, 3, 4]], [5.0])), 1.0, z)
    proj = ops.project_hyperplane([0, 3, 4], 5.0, z)
    np.testing.assert_allclose(got, proj, rtol=0, atol=1e-14)
    assert got[0] == z[0]
    with pytest.raises(DegenerateColumnError):
        sv.drop_step(A, [0, 1], 1.0, [0, 0])


def test_m1_steps_reduce_to_projection():
    rng = np.random.default_rng(12)
    for _ in range(50):
        a = rng.normal(size=6)
        system = pb.LinearSystem(a[None, :], [rng.normal()])
        z = rng.normal(size=6) * 3
        p = ops.project_hyperplane(a, system.b[0], z)
        np.testing.assert_allclose(sv.cimmino_step(system, [1.0], 1.0, z), p, rtol=0, atol=1e-14)
        np.testing.assert_allclose(sv.drop_step(system, np.ones(6), 1.0, z), p, rtol=0, atol=1e-14)


def test_general_cw_examples():
    I = ops.Identity((1, 2))
    W = ops.WeightMatrix([[0.5, 0.5], [0.5, 0.5]])
    x = [0.3, -1.0, 2.0]
    assert sv.general_cw_step([I, I], W, 1.0, x).data.tolist() == x
    W1 = ops.WeightMatrix([[1.0, 1.0]])
    P = ops.HyperplaneProjection((1, 2), [1, 2, 3], 4.0)
    assert sv.general_cw_step([P], W1, 1.0, x) == ops.apply(P, x)
    with pytest.raises(WeightError):
        sv.general_cw_step([P, P], ops.WeightMatrix([[0.5, 0.5], [0.25, 0.5]]), 1.0, x)
    with pytest.raises(ParameterError):
        sv.general_cw_step([P], W1, 2.0, x)


@given(st.integers(0, 2**31), st.floats(0.1, 1.9))
@settings(max_examples=60, deadline=None)
def test_drop_equals_general_cw(seed, lam):
    system, _ = pb.plant_consistent_system(5, 4, 0.6, seed)
    x = np.random.default_rng(seed).normal(size=4) * 5
    a = sv.drop_step(system, pb.column_sparsity(system), lam, x)
    b = sv.general_cw_step(system.hyperplanes(), pb.drop_weights(system), lam, x).data
    assert np.max(np.abs(a - b)) <= 1e-13


# -- driver ------------------------------------------------------------------


def test_solve_drop_diagonal_one_iteration():
    diag = pb.LinearSystem(np.diag([2.0, 5.0]), [4, -5])
    h = sv.solve("drop", diag, stop=sv.StopRule(residual_tol=0.0))
    assert h.iterations == 1 and h.stop_reason == "residual-tolerance"
    assert h.final.data.tolist() == [2, -1] and h.residuals[-1] == 0


def test_solve_cimmino_single_row():
    one = pb.LinearSystem([[1.0, 1.0]], [2.0])
    h = sv.solve("cimmino", one, stop=sv.StopRule(residual_tol=0.0))
    assert h.iterations == 1 and h.final.data.tolist() == [1, 1]


def test_solve_recomputes_residuals():
    system, x = pb.plant_consistent_system(40, 20, 0.2, seed=4)
    h = sv.solve("drop", system, lam=1.2, stop=sv.StopRule(max_iterations=300, step_tol=0))
    for k, xk in zip(h.iterate_indices, h.iterates):
        assert h.residuals[k] == pytest.approx(system.residual_norm(xk.data), rel=1e-12, abs=1e-300)
    assert h.relative_residuals()[-1] == pytest.approx(system.relative_residual(h.final.data))


def test_solve_general_cw_matches_drop():
    system, x = pb.plant_consistent_system(30, 12, 0.25, seed=9)
    rule = sv.StopRule(max_iterations=50, step_tol=0)
    a = sv.solve("drop", system, lam=0.8, stop=rule)
    b = sv.solve("general-cw", system, lam=0.8, stop=rule)
    np.testing.assert_allclose(a.final.data, b.final.data, rtol=0, atol=1e-11)


def test_solve_general_cw_feasibility():
    s = BlockStructure((2, 1))
    z = np.array([0.5, -0.5, 1.0])
    sets = [ops.BoxProjection(s, [-1, -1, -1], [1, 1, 2]),
            ops.HalfspaceProjection(s, [1, 1, 0], 0.0),
            ops.BallProjection(s, [0, 0, 1], 1.0)]
    inst = pb.CfpInstance(s, sets, planted=z)
    W = ops.WeightMatrix.uniform(3, 2)
    h = sv.solve("general-cw", (inst.sets, W), x0=[5, 5, 5], lam=1.0,
                 stop=sv.StopRule(max_iterations=5000, step_tol=1e-12))
    assert h.stop_reason == "step-tolerance"
    for T in inst.sets:
        assert T.contains(h.final, 1e-8)


def test_schedule_hook():
    system = pb.LinearSystem(np.eye(2), [1, 1])
    h = sv.solve("drop", system, schedule=lambda k: 0.5, stop=sv.StopRule(max_iterations=1))
    assert h.final.data.tolist() == [0.5, 0.5]
    with pytest.raises(ParameterError):
        sv.solve("drop", system, schedule=lambda k: 2.5, stop=sv.StopRule(max_iterations=1))


def test_solve_rejects_unknown_method():
    with pytest.raises(ParameterError):
        sv.solve("kaczmarz", pb.LinearSystem(np.eye(1), [1]))


def test_histories_are_bit_identical():
    system, x = pb.plant_consistent_system(30, 15, 0.2, seed=6)
    runs = [sv.solve("drop", system, reference=x, stop=sv.StopRule(max_iterations=100))
            for _ in range(2)]
    assert runs[0].to_csv() == runs[1].to_csv()
    assert all(a == b for a, b in zip(runs[0].iterates, runs[1].iterates))


def test_steps_vanish_on_consistent_system():
    system, x = pb.plant_consistent_system(60, 30, 0.15, seed=8)
    h = sv.solve("drop", system, stop=sv.StopRule(max_iterations=3000, step_tol=0))
    total = np.sum(h.steps ** 2, axis=1)
    assert total[-1] < 1e-12 * total[0]
    assert np.isfinite(np.sum(total))


# -- Fejer monitor -----------------------------------------------------------


def test_fejer_identity():
    h = sv.picard(ops.Identity((1, 1)), [1, 2], reference=[0, 0])
    assert sv.fejer_monitor(h).passed


def test_fejer_reflection_is_qne_only():
    P = ops.HyperplaneProjection((1,), [1.0], 0.0)
    W = ops.WeightMatrix([[1.0]])
    h = sv.solve("general-cw", ([P], W), x0=[3.0], lam=2.0, strict=False,
                 reference=[0.0], stop=sv.StopRule(max_iterations=6))
    assert h.distances[:, 0].tolist() == [3.0] * 7
    r = sv.fejer_monitor(h)
    assert r.passed and "QNE only" in r.flags


def test_fejer_needs_reference():
    h = sv.picard(ops.Identity((1,)), [1.0])
    with pytest.raises(ParameterError):
        sv.fejer_monitor(h)


def test_fejer_on_separable_system_passes():
    # every row touches one coordinate, so the projections are component cutters
    A = np.array([[1.0, 0, 0], [2.0, 0, 0], [0, 3.0, 0], [0, 0, -1.0], [0, 0, 2.0]])
    x_star = np.array([1.0, -2.0, 0.5])
    system = pb.LinearSystem(A, A @ x_star)
    h = sv.solve("drop", system, x0=[4, 4, 4], lam=1.5, reference=x_star,
                 stop=sv.StopRule(max_iterations=200))
    r = sv.fejer_monitor(h)
    assert r.passed and r.params["sqne_checked"]


def test_fejer_detects_component_increase():
    # one coupled equation x1 + x2 = 2, z = (2, 0): component 2 moves away from z_2
    system = pb.LinearSystem([[1.0, 1.0]], [2.0])
    h = sv.solve("drop", system, reference=[2.0, 0.0], stop=sv.StopRule(max_iterations=1))
    r = sv.fejer_monitor(h)
    assert not r.passed
    assert r.witness["component"] == 2
    assert r.witness["dist_prev"] == 0.0 and r.witness["dist_next"] == 1.0
    assert sv.fejer_monitor(h, aggregate=True).passed


def test_fejer_with_fresh_reference():
    system, x = pb.plant_consistent_system(20, 10, 0.3, seed=2)
    h = sv.solve("cimmino", system, stop=sv.StopRule(max_iterations=50))
    assert sv.fejer_monitor(h, reference=x, aggregate=True).passed


@given(st.integers(0, 2**31), st.sampled_from([0.5, 1.0, 1.5]))
@settings(max_examples=30, deadline=None)
def test_component_fejer_monotone_on_planted_systems(seed, lam):
    # Per-component Fejer monotonicity toward the planted point for DROP runs.
    system, x = pb.plant_consistent_system(12, 6, 0.4, seed)
    h = sv.solve("drop", system, lam=lam, reference=x, stop=sv.StopRule(max_iterations=200))
    r = sv.fejer_monitor(h, rho=(2 - lam) / lam)
    assert r.passed, r.summary()


# -- CSV ---------------------------------------------------------------------


def test_history_csv_format():
    system = pb.LinearSystem([[1.0, 0.0], [1.0, 1.0]], [1, 2])
    h = sv.solve("drop", system, reference=[1, 1], stop=sv.StopRule(max_iterations=3))
    text = h.to_csv()
    lines = text.split("\n")
    assert "\r" not in text and text.endswith("\n")
    assert lines[0] == "k,residual,step_1,dist_1,step_2,dist_2"
    assert lines[1].startswith("0,") and lines[1].split(",")[2] == ""
    assert len(lines) == h.iterations + 3
    v = lines[2].split(",")[1]
    assert float(v) == h.residuals[1] and v == format(h.residuals[1], ".17g")
    pic = sv.picard(MC, [0, 0], sv.StopRule(max_iterations=2)).to_csv()
    assert pic.split("\n")[1].split(",")[1] == ""
