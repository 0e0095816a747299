"""Closed-form projections and proximal maps used by the solvers.

All threshold searches are sort-and-scan, so they terminate after one sort
of the input. Every function accepts a single vector; the ``*_rows`` and
``*_cols`` variants apply the same map to each row or column of a matrix.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DiskConstraint:
    """Cylinder around the line spanned by ``axis`` (a unit data column).

    A noise vector ``v = p * axis + w`` with ``w`` orthogonal to ``axis`` is
    feasible when ``||w|| <= radius`` and ``sqrt(1 - radius**2) - 1 <= p <= 0``.
    """

    axis: np.ndarray
    radius: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=np.float64)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValueError("disk axis must have unit norm")
        if not 0 <= self.radius < 1:
            raise ValueError("disk radius must lie in [0, 1)")
        object.__setattr__(self, "axis", axis)

    @property
    def lower(self):
        return np.sqrt(1.0 - self.radius**2) - 1.0


@dataclass(frozen=True)
class OutlierBall:
    """Nonnegative part of a weighted l1 ball, ``{e >= 0, sum(weights * e) <= budget}``."""

    weights: np.ndarray
    budget: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or np.any(w <= 0):
            raise ValueError("outlier weights must be a vector of positive reals")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("outlier weights must sum to 1")
        if self.budget < 0:
            raise ValueError("outlier budget must be nonnegative")
        object.__setattr__(self, "weights", w)


def _positive_part_threshold(P, zeta):
    """Per-row tau >= 0 such that sum(max(P - tau, 0)) == zeta (tau = 0 when feasible)."""
    pos = np.maximum(P, 0.0)
    srt = np.sort(pos, axis=1)[:, ::-1]
    css = np.cumsum(srt, axis=1)
    k = np.arange(srt.shape[1])
    # positive mass left when thresholding at the k-th largest entry; it never
    # decreases with k, so counting breakpoints within budget is safe under ties
    mass = np.zeros_like(srt)
    mass[:, 1:] = css[:, :-1] - k[1:] * srt[:, 1:]
    last = np.count_nonzero((mass <= zeta) & (srt > 0), axis=1) - 1
    last = np.maximum(last, 0)
    rows = np.arange(srt.shape[0])
    tau = (css[rows, last] - zeta) / (last + 1)
    return np.where(css[:, -1] > zeta, tau, 0.0)


def project_pos_l1_rows(P, zeta):
    """Project each row of `P` onto ``{p : ||max(p, 0)||_1 <= zeta}``."""
    if zeta < 0:
        raise ValueError("zeta must be nonnegative")
    P = np.asarray(P, dtype=np.float64)
    tau = _positive_part_threshold(P, zeta)
    return np.where(P > 0, np.maximum(P - tau[:, None], 0.0), P)


def project_pos_l1(v, zeta):
    """Euclidean projection of `v` onto ``C_zeta = {p : ||max(p, 0)||_1 <= zeta}``.

    Negative entries are left alone; if the positive mass exceeds `zeta`
    the positive entries are soft-thresholded by the unique level that
    brings it down to `zeta`.

    >>> project_pos_l1([2.0, 1.0, -1.0], 1.0)
    array([ 1.,  0., -1.])
    """
    v = np.asarray(v, dtype=np.float64)
    return project_pos_l1_rows(v[None, :], zeta)[0]


def prox_rowmax_nonneg_rows(V, weight):
    if weight < 0:
        raise ValueError("weight must be nonnegative")
    V = np.asarray(V, dtype=np.float64)
    return V - project_pos_l1_rows(V, weight)


def prox_rowmax_nonneg(v, weight):
    """Proximal map of ``t -> indicator(t >= 0) + weight * max_j t_j``.

    Computed through the Moreau decomposition as ``v - project_pos_l1(v, weight)``.
    """
    v = np.asarray(v, dtype=np.float64)
    return prox_rowmax_nonneg_rows(v[None, :], weight)[0]


def project_outlier_ball(v, ball):
    """Project `v` onto ``{e >= 0, sum(w * e) <= budget}``.

    The solution has the form ``max(v - lam * w, 0)``; `lam` is found by
    scanning the breakpoints ``v_j / w_j`` in decreasing order.
    """
    v = np.asarray(v, dtype=np.float64)
    w = ball.weights
    if v.shape != w.shape:
        raise ValueError("vector and ball weights differ in length")
    e = np.maximum(v, 0.0)
    if ball.budget == 0:
        return np.zeros_like(v)
    if w @ e <= ball.budget:
        return e
    order = np.argsort(-(v / w), kind="stable")
    vs, ws = v[order], w[order]
    r = vs / ws
    cwv, cww = np.cumsum(ws * vs), np.cumsum(ws * ws)
    # weighted mass left at each breakpoint; it never decreases along the order,
    # so counting the breakpoints within budget is safe under ties and rounding
    mass = np.concatenate(([0.0], cwv[:-1] - r[1:] * cww[:-1]))
    k = int(np.count_nonzero(mass[r > 0] <= ball.budget)) - 1
    return np.maximum(v - (cwv[k] - ball.budget) / cww[k] * w, 0.0)


def project_disk_cols(V, axes, radii):
    """Project column j of `V` onto the disk around ``axes[:, j]`` with radius ``radii[j]``."""
    V = np.asarray(V, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    p = np.einsum("ij,ij->j", V, axes)
    W = V - axes * p
    lower = np.sqrt(1.0 - radii**2) - 1.0
    p = np.clip(p, lower, 0.0)
    wn = np.linalg.norm(W, axis=0)
    scale = np.ones_like(wn)
    big = wn > radii
    scale[big] = radii[big] / wn[big]
    return axes * p + W * scale


def project_disk(v, disk):
    """Project `v` onto the hockey-puck set described by `disk`."""
    v = np.asarray(v, dtype=np.float64)
    return project_disk_cols(v[:, None], disk.axis[:, None], np.array([disk.radius]))[:, 0]
