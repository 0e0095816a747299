"""Outlier-robust model solved with a three-block splitting scheme.

The hard constraint ``Y T - Xs = V - Xs diag(e)`` replaces the quadratic
fit of the basic model. ``V`` absorbs small noise inside one hockey-puck
disk per column and ``e`` marks whole columns as outliers within a
weighted l1 budget. After the ``Z`` update, the ``T`` block and the
``(V, e)`` blocks are updated in parallel with proximal weight ``mu``,
which needs ``mu > 2``.
"""

import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .projections import DiskConstraint, OutlierBall, project_disk_cols, project_outlier_ball, prox_rowmax_nonneg_rows
from .solver import EXTENDED_MAX_ITER, EXTENDED_TOL, SolveResult, SolverConfig, select_endmembers

MAX_RADIUS = 0.999


def disk_radii(rp, eta, overrides=None):
    """``r_j = eta + m_j`` with ``m_j`` the cluster's largest member distance.

    Radii are capped just below 1 so the disks stay valid. `overrides`
    maps column index to a radius used verbatim.
    """
    m = rp.diameters if rp.diameters is not None else np.zeros(rp.d_s)
    if len(m) != rp.d_s:
        raise ValueError("cluster diameters do not match the columns of Xs; pass radii explicitly")
    r = np.minimum(eta + np.asarray(m, dtype=np.float64), MAX_RADIUS)
    for j, val in (overrides or {}).items():
        r[j] = val
    return r


def make_disks(rp, eta, overrides=None):
    return [DiskConstraint(rp.Xs[:, j], float(r)) for j, r in enumerate(disk_radii(rp, eta, overrides))]


def make_ball(rp, gamma):
    w = rp.col_weights / rp.col_weights.sum()
    return OutlierBall(w, gamma)


def objective_extended(rp, T, cfg=None):
    cfg = cfg or SolverConfig()
    T = np.asarray(T, dtype=np.float64)
    return cfg.zeta * float(T.max(axis=1).sum()) + float((rp.weights_sigma(cfg.nu, cfg.h) * T).sum())


def feasibility_gap(rp, T, V, e):
    """Frobenius norm of ``Y T - Xs - V + Xs diag(e)``."""
    R = rp.Y @ T - rp.Xs - V + rp.Xs * np.asarray(e)[None, :]
    return float(np.linalg.norm(R))


def solve_extended(rp, disks=None, ball=None, cfg=None):
    """Solve the outlier model.

    Parameters
    ----------
    rp : ReducedProblem
    disks : list of DiskConstraint, optional
        One per column of ``Xs``; defaults to radii ``eta + m_j``.
    ball : OutlierBall, optional
        Defaults to the normalized column weights with budget ``gamma``.
    cfg : SolverConfig, optional

    Returns
    -------
    SolveResult
        With ``V`` and ``e`` set. ``primal_residuals`` records the larger of
        the split residual ``||Z - T||_F / sqrt(n_c d_s)`` and the constraint
        gap ``||Y T - Xs - V + Xs diag(e)||_F / sqrt(m d_s)``.

    Notes
    -----
    Iteration stops when that residual and the relative change of ``e``
    are both below ``tol``. The ``T`` block uses the freshly computed ``Z``,
    as do the ``V`` and ``e`` blocks, so the three parallel updates see the
    same point.
    """
    cfg = cfg or SolverConfig()
    if not cfg.mu > 2:
        raise ValueError("HTY scheme requires mu > 2")
    tol = cfg.tol if cfg.tol is not None else EXTENDED_TOL
    max_iter = cfg.max_iter if cfg.max_iter is not None else EXTENDED_MAX_ITER
    Y, Xs = rp.Y, rp.Xs
    n, d, m = rp.n_c, rp.d_s, Y.shape[0]

    if disks is None:
        disks = make_disks(rp, cfg.eta)
    if len(disks) != d:
        raise ValueError(f"need one disk per column of Xs ({d}), got {len(disks)}")
    axes = np.stack([dk.axis for dk in disks], axis=1)
    if axes.shape != Xs.shape:
        raise ValueError("disk axes do not match the shape of Xs")
    radii = np.array([dk.radius for dk in disks])
    if ball is None:
        ball = make_ball(rp, cfg.gamma)
    if ball.weights.shape != (d,):
        raise ValueError("outlier ball weights must have one entry per column of Xs")

    delta, mu, zeta = cfg.delta, cfg.mu, cfg.zeta
    dm = delta * mu
    W = rp.weights_sigma(cfg.nu, cfg.h)
    factor = cho_factor(np.eye(n) + Y.T @ Y)
    split_scale = math.sqrt(n * d)
    gap_scale = math.sqrt(m * d)

    T = np.zeros((n, d))
    Z = np.zeros((n, d))
    V = np.zeros((m, d))
    e = np.zeros(d)
    P1 = np.zeros((n, d))
    P2 = np.zeros((m, d))

    residuals, gaps = [], []
    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        Xe = Xs * e[None, :]
        Z = cho_solve(factor, T - P1 / delta + Y.T @ (V - Xe + Xs - P2 / delta))
        YZ = Y @ Z

        T_new = prox_rowmax_nonneg_rows(T + (Z - T) / mu + P1 / dm - W / dm, zeta / dm)
        R = YZ - V + Xe - Xs
        V_new = project_disk_cols(V + R / mu + P2 / dm, axes, radii)
        grad_e = np.einsum("ij,ij->j", Xs, P2 + delta * R)
        e_new = project_outlier_ball(e - grad_e / dm, ball)

        de = float(np.linalg.norm(e_new - e)) / max(1.0, float(np.linalg.norm(e_new)))
        T, V, e = T_new, V_new, e_new

        S = Z - T
        P1 += delta * S
        C = YZ - V - Xs + Xs * e[None, :]
        P2 += delta * C

        split = float(np.linalg.norm(S)) / split_scale
        gap = feasibility_gap(rp, T, V, e)
        res = max(split, gap / gap_scale)
        residuals.append(res)
        gaps.append(gap)
        if max(res, de) <= tol:
            converged = True
            break

    return SolveResult(T=T, selected=select_endmembers(T, cfg.select_threshold), iterations=k,
                       converged=converged, primal_residuals=residuals,
                       objective=objective_extended(rp, T, cfg), V=V, e=e, Z=Z, P=P1, P2=P2, gaps=gaps)


def extended_report(rp, result, outlier_cutoff=0.5):
    """Convergence report with outlier bookkeeping, suitable for JSON."""
    out = result.report()
    w = rp.col_weights / rp.col_weights.sum()
    out["outlier_mass"] = float(w @ result.e)
    out["outlier_columns"] = [int(j) for j in np.flatnonzero(result.e > outlier_cutoff)]
    return out
