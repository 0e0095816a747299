"""Independent reference solvers used to check the closed-form maps.

The batch solvers run plain (projected) gradient iterations on a
Lagrangian dual or a one-dimensional reformulation, vectorized over the
rows of the input. None of them reuses the sort-and-scan code under test.
"""

import numpy as np

STEPS = 100_000


def pos_l1_dual(V, zeta, steps=STEPS):
    """Projection onto ``{||max(x, 0)||_1 <= zeta}`` by projected ascent on the multiplier.

    For a multiplier ``tau >= 0`` the Lagrangian minimizer keeps negative
    entries and shrinks positive ones by ``tau`` toward zero.
    """
    V = np.asarray(V, dtype=np.float64)
    pos = np.maximum(V, 0.0)
    tau = np.zeros(V.shape[0])
    step = 1.0 / V.shape[1]
    for _ in range(steps):
        x = np.maximum(pos - tau[:, None], 0.0)
        tau = np.maximum(tau + step * (x.sum(axis=1) - zeta), 0.0)
    return np.where(V > 0, np.maximum(pos - tau[:, None], 0.0), V)


def prox_rowmax_level(V, weight, steps=STEPS):
    """Prox of ``indicator(t >= 0) + weight * max(t)`` by projected descent on the level ``s = max(t)``.

    For a fixed level the minimizer over ``0 <= t <= s`` is ``clip(v, 0, s)``,
    leaving a convex function of ``s >= 0`` alone.
    """
    V = np.asarray(V, dtype=np.float64)
    s = np.maximum(V.max(axis=1), 0.0)
    step = 1.0 / V.shape[1]
    for _ in range(steps):
        grad = weight - np.maximum(V - s[:, None], 0.0).sum(axis=1)
        s = np.maximum(s - step * grad, 0.0)
    return np.clip(V, 0.0, s[:, None])


def outlier_ball_dual(V, W, budget, steps=STEPS):
    """Projection onto ``{e >= 0, w . e <= budget}`` by projected ascent on the multiplier (per row)."""
    V = np.asarray(V, dtype=np.float64)
    lam = np.zeros(V.shape[0])
    step = 1.0 / (W * W).sum(axis=1)
    for _ in range(steps):
        e = np.maximum(V - lam[:, None] * W, 0.0)
        lam = np.maximum(lam + step * ((W * e).sum(axis=1) - budget), 0.0)
    return np.maximum(V - lam[:, None] * W, 0.0)


def disk_dual(V, axes, radii, steps=STEPS):
    """Projection onto the axial/radial box by projected ascent on its three multipliers.

    The Lagrangian minimizer is ``p = p_v - l1 + l2`` along the axis and
    ``w = w_v / (1 + l3)`` across it. The radial multiplier uses a
    diagonally scaled step since its curvature shrinks like ``(1 + l3)^-3``.
    """
    V = np.asarray(V, dtype=np.float64)
    pv = (V * axes).sum(axis=1)
    Wv = V - pv[:, None] * axes
    wn2 = (Wv * Wv).sum(axis=1)
    lo = np.sqrt(1.0 - radii**2) - 1.0
    l1 = np.zeros_like(pv)
    l2 = np.zeros_like(pv)
    l3 = np.zeros_like(pv)
    for _ in range(steps):
        p = pv - l1 + l2
        w2 = wn2 / (1.0 + l3) ** 2
        l1 = np.maximum(l1 + 0.5 * p, 0.0)
        l2 = np.maximum(l2 + 0.5 * (lo - p), 0.0)
        curv = np.maximum(wn2 / (1.0 + l3) ** 3, 1e-300)
        l3 = np.maximum(l3 + 0.5 * (w2 - radii**2) / 2.0 / curv, 0.0)
    p = pv - l1 + l2
    return p[:, None] * axes + Wv / (1.0 + l3)[:, None]


def cvx_project(v, kind, **kw):
    """Same projections posed as conic programs and handed to cvxpy."""
    import cvxpy as cp

    x = cp.Variable(len(v))
    if kind == "pos_l1":
        cons = [cp.sum(cp.pos(x)) <= kw["zeta"]]
        obj = 0.5 * cp.sum_squares(x - v)
    elif kind == "prox":
        cons = [x >= 0]
        obj = kw["weight"] * cp.max(x) + 0.5 * cp.sum_squares(x - v)
    elif kind == "ball":
        cons = [x >= 0, kw["weights"] @ x <= kw["budget"]]
        obj = 0.5 * cp.sum_squares(x - v)
    elif kind == "disk":
        a, r = kw["axis"], kw["radius"]
        p = a @ x
        cons = [cp.norm(x - p * a) <= r, p <= 0, p >= np.sqrt(1 - r * r) - 1]
        obj = 0.5 * cp.sum_squares(x - v)
    else:
        raise ValueError(kind)
    cp.Problem(cp.Minimize(obj), cons).solve(solver=cp.CLARABEL, tol_gap_abs=1e-10,
                                             tol_gap_rel=1e-10, tol_feas=1e-10)
    return np.asarray(x.value)


def random_projection_inputs(n=100, dim=5, seed=12345):
    """Inputs shared by the oracle comparisons: vectors, levels, weights, axes and radii."""
    rng = np.random.default_rng(seed)
    V = 2.0 * rng.standard_normal((n, dim))
    zeta = rng.uniform(0.0, 3.0, n)
    W = rng.uniform(0.05, 1.0, (n, dim))
    W /= W.sum(axis=1, keepdims=True)
    budget = rng.uniform(0.0, 1.0, n)
    axes = rng.standard_normal((n, dim))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    radii = rng.uniform(0.05, 0.95, n)
    return V, zeta, W, budget, axes, radii


def cvx_basic(Y, Xs, zeta, beta, fit_weights, W=None):
    """Minimizer of the basic model posed directly in cvxpy."""
    import cvxpy as cp

    n, d = Y.shape[1], Xs.shape[1]
    T = cp.Variable((n, d), nonneg=True)
    R = Y @ T - Xs
    fit = sum(fit_weights[j] * cp.sum_squares(R[:, j]) for j in range(d))
    obj = zeta * cp.sum(cp.max(T, axis=1)) + 0.5 * beta * fit
    if W is not None:
        obj = obj + cp.sum(cp.multiply(W, T))
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return np.asarray(T.value), float(prob.value)


def cvx_extended(Y, Xs, zeta, radii, weights, budget, W=None):
    """Minimizer of the outlier model posed directly in cvxpy; returns (T, V, e, value)."""
    import cvxpy as cp

    m, d = Xs.shape
    n = Y.shape[1]
    T = cp.Variable((n, d), nonneg=True)
    V = cp.Variable((m, d))
    e = cp.Variable(d, nonneg=True)
    cons = [Y @ T - Xs == V - Xs @ cp.diag(e), weights @ e <= budget]
    for j in range(d):
        p = Xs[:, j] @ V[:, j]
        r = radii[j]
        cons += [cp.norm(V[:, j] - p * Xs[:, j]) <= r, p <= 0, p >= np.sqrt(1 - r * r) - 1]
    obj = zeta * cp.sum(cp.max(T, axis=1))
    if W is not None:
        obj = obj + cp.sum(cp.multiply(W, T))
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return np.asarray(T.value), np.asarray(V.value), np.asarray(e.value), float(prob.value)
