import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conefactor.projections import (
    DiskConstraint,
    OutlierBall,
    project_disk,
    project_outlier_ball,
    project_pos_l1,
    prox_rowmax_nonneg,
)
from oracles import cvx_project, disk_dual, outlier_ball_dual, pos_l1_dual, prox_rowmax_level, random_projection_inputs

vec5 = arrays(np.float64, 5, elements=st.floats(-10, 10, allow_nan=False))
level = st.floats(0.0, 5.0, allow_nan=False)


@st.composite
def balls(draw):
    w = draw(arrays(np.float64, 5, elements=st.floats(0.05, 1.0)))
    return OutlierBall(w / w.sum(), draw(st.floats(0.0, 2.0)))


@st.composite
def disks(draw):
    a = draw(arrays(np.float64, 5, elements=st.floats(-1, 1)).filter(lambda x: np.linalg.norm(x) > 0.1))
    return DiskConstraint(a / np.linalg.norm(a), draw(st.floats(0.0, 0.95)))


# -- worked examples ---------------------------------------------------------

def test_pos_l1_examples():
    np.testing.assert_allclose(project_pos_l1([0.5, -0.2], 1.0), [0.5, -0.2])
    np.testing.assert_allclose(project_pos_l1([2.0, 1.0, -1.0], 1.0), [1.0, 0.0, -1.0])
    np.testing.assert_allclose(project_pos_l1([1.0, 1.0], 0.0), [0.0, 0.0])
    np.testing.assert_allclose(project_pos_l1([1.0, -3.0], 0.0), [0.0, -3.0])
    with pytest.raises(ValueError):
        project_pos_l1([1.0], -0.1)


def test_prox_examples():
    np.testing.assert_allclose(prox_rowmax_nonneg([2.0, 1.0], 1.0), [1.0, 1.0])
    np.testing.assert_allclose(prox_rowmax_nonneg([-1.0, -2.0], 3.0), [0.0, 0.0])
    v = np.array([0.3, -0.4, 2.0])
    np.testing.assert_allclose(prox_rowmax_nonneg(v, 0.0), np.maximum(v, 0))
    with pytest.raises(ValueError):
        prox_rowmax_nonneg(v, -1.0)


def test_outlier_ball_examples():
    ball = OutlierBall(np.array([0.5, 0.5]), 1.0)
    np.testing.assert_allclose(project_outlier_ball([0.1, 0.2], ball), [0.1, 0.2])
    np.testing.assert_allclose(project_outlier_ball([-1.0, 0.5], ball), [0.0, 0.5])
    np.testing.assert_allclose(project_outlier_ball([2.0, 2.0], ball), [1.0, 1.0])
    # brute-force grid over the 2-d feasible triangle
    g = np.linspace(0, 2, 2001)
    E1, E2 = np.meshgrid(g, g)
    ok = 0.5 * E1 + 0.5 * E2 <= 1 + 1e-12
    d2 = np.where(ok, (E1 - 2) ** 2 + (E2 - 2) ** 2, np.inf)
    k = np.unravel_index(np.argmin(d2), d2.shape)
    np.testing.assert_allclose([E1[k], E2[k]], [1.0, 1.0], atol=1e-3)


def test_outlier_ball_zero_budget():
    ball = OutlierBall(np.array([0.2, 0.8]), 0.0)
    assert np.array_equal(project_outlier_ball([3.0, 1.0], ball), [0.0, 0.0])


def test_ball_validation():
    with pytest.raises(ValueError):
        OutlierBall(np.array([0.5, 0.6]), 1.0)
    with pytest.raises(ValueError):
        OutlierBall(np.array([1.0, 0.0]), 1.0)
    with pytest.raises(ValueError):
        OutlierBall(np.array([0.5, 0.5]), -1.0)


def test_disk_examples():
    disk = DiskConstraint(np.array([1.0, 0.0, 0.0]), 0.5)
    np.testing.assert_allclose(project_disk([-0.05, 0.3, 0.4], disk), [-0.05, 0.3, 0.4])
    np.testing.assert_allclose(project_disk([0.2, 0.0, 0.0], disk), [0.0, 0.0, 0.0])
    out = project_disk([-1.0, 1.0, 0.0], disk)
    np.testing.assert_allclose(out, [np.sqrt(0.75) - 1, 0.5, 0.0], atol=1e-12)
    assert out[0] == pytest.approx(-0.13397, abs=1e-5)


def test_disk_example_dense_search():
    # p and the radial coordinate along (0, 1, 0) on a fine grid; any other radial direction is farther
    disk = DiskConstraint(np.array([1.0, 0.0, 0.0]), 0.5)
    p = np.linspace(disk.lower, 0.0, 1501)
    q = np.linspace(-0.5, 0.5, 1501)
    P, Q = np.meshgrid(p, q)
    d2 = (P + 1.0) ** 2 + (Q - 1.0) ** 2
    k = np.unravel_index(np.argmin(d2), d2.shape)
    np.testing.assert_allclose(project_disk([-1.0, 1.0, 0.0], disk), [P[k], Q[k], 0.0], atol=1e-3)


def test_disk_zero_radius():
    disk = DiskConstraint(np.array([0.0, 1.0]), 0.0)
    assert np.array_equal(project_disk([3.0, -2.0], disk), [0.0, 0.0])


def test_disk_validation():
    with pytest.raises(ValueError):
        DiskConstraint(np.array([1.0, 1.0]), 0.1)
    with pytest.raises(ValueError):
        DiskConstraint(np.array([1.0, 0.0]), 1.0)


# -- properties --------------------------------------------------------------

@given(vec5, level)
def test_moreau_identity(v, w):
    assert np.abs(prox_rowmax_nonneg(v, w) + project_pos_l1(v, w) - v).max() <= 1e-12


@given(vec5, level)
def test_pos_l1_feasible_idempotent(v, z):
    p = project_pos_l1(v, z)
    assert np.maximum(p, 0).sum() <= z + 1e-10
    np.testing.assert_allclose(project_pos_l1(p, z), p, atol=1e-12)


@given(vec5, level)
def test_prox_idempotent_on_fixed_points(v, w):
    # the prox itself is not idempotent; the nonnegative projection it contains is,
    # and the prox output is always nonnegative
    t = prox_rowmax_nonneg(v, w)
    assert t.min() >= 0
    assert t.max() <= max(v.max(), 0) + 1e-12


@given(vec5, balls())
def test_outlier_ball_feasible_idempotent(v, ball):
    e = project_outlier_ball(v, ball)
    assert e.min() >= 0
    assert ball.weights @ e <= ball.budget + 1e-10
    np.testing.assert_allclose(project_outlier_ball(e, ball), e, atol=1e-12)


@given(vec5, disks())
def test_disk_feasible_idempotent(v, disk):
    x = project_disk(v, disk)
    p = x @ disk.axis
    assert disk.lower - 1e-10 <= p <= 1e-10
    assert np.linalg.norm(x - p * disk.axis) <= disk.radius + 1e-10
    np.testing.assert_allclose(project_disk(x, disk), x, atol=1e-12)


@given(vec5, vec5, level, balls(), disks())
def test_nonexpansive(u, v, z, ball, disk):
    dist = np.linalg.norm(u - v) + 1e-12
    assert np.linalg.norm(project_pos_l1(u, z) - project_pos_l1(v, z)) <= dist
    assert np.linalg.norm(prox_rowmax_nonneg(u, z) - prox_rowmax_nonneg(v, z)) <= dist
    assert np.linalg.norm(project_outlier_ball(u, ball) - project_outlier_ball(v, ball)) <= dist
    assert np.linalg.norm(project_disk(u, disk) - project_disk(v, disk)) <= dist


# -- independent solvers -----------------------------------------------------

@pytest.fixture(scope="module")
def inputs():
    return random_projection_inputs(n=100, dim=5, seed=7)


def test_oracle_pos_l1(inputs):
    V, zeta, *_ = inputs
    ours = np.array([project_pos_l1(V[i], zeta[i]) for i in range(len(V))])
    assert np.abs(ours - pos_l1_dual(V, zeta, steps=20000)).max() <= 1e-5


def test_oracle_prox(inputs):
    V, zeta, *_ = inputs
    ours = np.array([prox_rowmax_nonneg(V[i], zeta[i]) for i in range(len(V))])
    assert np.abs(ours - prox_rowmax_level(V, zeta, steps=20000)).max() <= 1e-5


def test_oracle_outlier_ball(inputs):
    V, _, W, budget, *_ = inputs
    ours = np.array([project_outlier_ball(V[i], OutlierBall(W[i], budget[i])) for i in range(len(V))])
    assert np.abs(ours - outlier_ball_dual(V, W, budget, steps=20000)).max() <= 1e-5


def test_oracle_disk(inputs):
    V, *_, axes, radii = inputs
    ours = np.array([project_disk(V[i], DiskConstraint(axes[i], radii[i])) for i in range(len(V))])
    assert np.abs(ours - disk_dual(V, axes, radii, steps=20000)).max() <= 1e-5


def test_cvxpy_agrees(inputs):
    V, zeta, W, budget, axes, radii = inputs
    for i in range(0, len(V), 5):
        v = V[i]
        np.testing.assert_allclose(project_pos_l1(v, zeta[i]), cvx_project(v, "pos_l1", zeta=zeta[i]), atol=1e-6)
        np.testing.assert_allclose(prox_rowmax_nonneg(v, zeta[i]), cvx_project(v, "prox", weight=zeta[i]), atol=1e-6)
        np.testing.assert_allclose(project_outlier_ball(v, OutlierBall(W[i], budget[i])),
                                   cvx_project(v, "ball", weights=W[i], budget=budget[i]), atol=1e-6)
        np.testing.assert_allclose(project_disk(v, DiskConstraint(axes[i], radii[i])),
                                   cvx_project(v, "disk", axis=axes[i], radius=radii[i]), atol=1e-6)


tied = arrays(np.float64, 6, elements=st.sampled_from([-1.0, 0.0, 0.05, 0.25, 1.0]))
tiny = st.sampled_from([0.0, 5e-324, 2.2e-311, 1e-300, 1e-12, 0.3])


@given(tied, tiny)
def test_ties_and_tiny_levels(v, z):
    p = project_pos_l1(v, z)
    assert np.maximum(p, 0).sum() <= z + 1e-12
    assert np.abs(p - pos_l1_dual(v[None, :], z, steps=200)[0]).max() <= 1e-9
    w = np.full(6, 1 / 6)
    e = project_outlier_ball(v, OutlierBall(w, z))
    assert e.min() >= 0 and w @ e <= z + 1e-12
    assert np.abs(e - outlier_ball_dual(v[None, :], w[None, :], z, steps=200)[0]).max() <= 1e-9
