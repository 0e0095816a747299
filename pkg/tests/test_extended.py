import numpy as np
import pytest

from conefactor.extended import (
    disk_radii,
    extended_report,
    feasibility_gap,
    make_ball,
    make_disks,
    objective_extended,
    solve_extended,
)
from conefactor.projections import DiskConstraint, OutlierBall
from conefactor.reduction import ReducedProblem, self_representation, similarity_weights
from conefactor.solver import SolverConfig, select_endmembers
from oracles import cvx_extended

EXACT = dict(zeta=1.0, nu=0.0, gamma=0.0, eta=0.07)


def disk_ok(V, axes, radii):
    p = np.einsum("ij,ij->j", V, axes)
    w = np.linalg.norm(V - axes * p, axis=0)
    lower = np.sqrt(1 - radii**2) - 1
    return np.all(p <= 1e-10) and np.all(p >= lower - 1e-10) and np.all(w <= radii + 1e-10)


def test_three_column_instance(three_cols):
    rp = self_representation(three_cols)
    res = solve_extended(rp, cfg=SolverConfig(**EXACT))
    assert res.converged
    assert np.array_equal(res.e, np.zeros(3))
    assert np.linalg.norm(res.V) <= 0.07 * np.sqrt(3)
    assert res.gaps[-1] <= 1e-5
    T_ref, V_ref, e_ref, val = cvx_extended(rp.Y, rp.Xs, 1.0, np.full(3, 0.07), np.full(3, 1 / 3), 0.0)
    assert res.objective == pytest.approx(val, rel=1e-6)
    np.testing.assert_allclose(res.T.max(axis=1), T_ref.max(axis=1), atol=1e-5)
    # the disks let both pure columns lean on the mixed one; at the exact minimizer
    # its row max is 0.099, just above the 0.1 relative cutoff of the 0.9275 rows
    assert res.selected.tolist() == select_endmembers(T_ref).tolist() == [0, 1, 2]
    assert T_ref[2].max() == pytest.approx(0.098995, abs=1e-5)


def test_zero_budget_gives_zero_e():
    rng = np.random.default_rng(1)
    X = rng.random((4, 6))
    X /= np.linalg.norm(X, axis=0)
    res = solve_extended(self_representation(X), cfg=SolverConfig(zeta=1.0, nu=0.0, gamma=0.0, max_iter=200))
    assert np.array_equal(res.e, np.zeros(6))


def test_matches_cvxpy_with_outliers():
    rng = np.random.default_rng(8)
    X = rng.random((5, 8))
    X /= np.linalg.norm(X, axis=0)
    cw = np.full(8, 1 / 8)
    rp = ReducedProblem(Y=X, Xs=X, col_weights=cw, diameters=np.full(8, 0.01))
    cfg = SolverConfig(zeta=1.0, nu=2.0, gamma=0.2, eta=0.05, tol=1e-9, max_iter=100000)
    res = solve_extended(rp, cfg=cfg)
    assert res.converged
    W = similarity_weights(X, X, 2.0, cfg.h) * cw[None, :]
    *_, val = cvx_extended(X, X, 1.0, disk_radii(rp, 0.05), cw, 0.2, W)
    assert res.objective == pytest.approx(val, rel=1e-5)
    assert feasibility_gap(rp, res.T, res.V, res.e) <= 1e-6


def test_mu_must_exceed_two(three_cols):
    with pytest.raises(ValueError, match="HTY scheme requires mu > 2"):
        solve_extended(self_representation(three_cols), cfg=SolverConfig(mu=2.0))


def test_dimension_errors(three_cols):
    rp = self_representation(three_cols)
    with pytest.raises(ValueError):
        solve_extended(rp, disks=make_disks(rp, 0.07)[:2])
    with pytest.raises(ValueError):
        solve_extended(rp, ball=OutlierBall(np.full(2, 0.5), 0.1))
    with pytest.raises(ValueError):
        solve_extended(rp, disks=[DiskConstraint(np.array([1.0, 0.0, 0.0]), 0.1)] * 3)


def test_gap_examples(three_cols):
    rp = self_representation(three_cols)
    T0 = np.zeros((3, 3))
    # declaring every column an outlier satisfies the constraint with V = 0
    assert feasibility_gap(rp, T0, np.zeros((2, 3)), np.ones(3)) == pytest.approx(0.0)
    assert feasibility_gap(rp, T0, -rp.Xs, np.ones(3)) == pytest.approx(np.sqrt(3))
    assert feasibility_gap(rp, T0, np.zeros((2, 3)), np.zeros(3)) == pytest.approx(np.sqrt(3))
    assert objective_extended(rp, np.eye(3), SolverConfig(zeta=2.0, nu=0.0)) == pytest.approx(6.0)


def test_feasible_after_every_iteration():
    rng = np.random.default_rng(3)
    X = rng.random((4, 7))
    X /= np.linalg.norm(X, axis=0)
    rp = ReducedProblem(Y=X, Xs=X, col_weights=np.full(7, 1 / 7), diameters=np.full(7, 0.02))
    disks = make_disks(rp, 0.07)
    axes = np.stack([dk.axis for dk in disks], axis=1)
    radii = np.array([dk.radius for dk in disks])
    ball = make_ball(rp, 0.3)
    for k in range(1, 40):
        res = solve_extended(rp, disks, ball, SolverConfig(zeta=1.0, nu=1.0, gamma=0.3, max_iter=k))
        assert disk_ok(res.V, axes, radii)
        assert res.e.min() >= 0 and ball.weights @ res.e <= 0.3 + 1e-10
        assert res.T.min() >= -1e-12


def test_coarse_residual_decrease(three_cols):
    rng = np.random.default_rng(6)
    X = rng.random((5, 9))
    X /= np.linalg.norm(X, axis=0)
    for rp in (self_representation(three_cols), self_representation(X, np.full(9, 1 / 9))):
        res = solve_extended(rp, cfg=SolverConfig(zeta=1.0, nu=0.0, gamma=0.05, max_iter=3000))
        comb = np.array(res.primal_residuals)
        for k in range(10, len(comb) // 10):
            assert comb[10 * k - 1] < comb[k - 1]


def test_report_fields(three_cols):
    rp = self_representation(three_cols)
    res = solve_extended(rp, cfg=SolverConfig(**EXACT))
    rep = extended_report(rp, res)
    assert set(rep) >= {"iterations", "converged", "final_residual", "objective", "selected", "gap",
                        "outlier_mass", "outlier_columns"}
    assert rep["outlier_columns"] == [] and rep["outlier_mass"] == 0.0


def test_radius_rule_and_overrides():
    rp = ReducedProblem(Y=np.eye(2), Xs=np.eye(2), col_weights=[0.5, 0.5], diameters=[0.1, 2.0])
    r = disk_radii(rp, 0.07, overrides={0: 0.3})
    assert r[0] == 0.3 and r[1] == pytest.approx(0.999)
    assert disk_radii(rp, 0.07)[0] == pytest.approx(0.17)
