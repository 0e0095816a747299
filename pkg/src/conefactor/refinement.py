"""Refinement of selected endmembers and abundance recovery.

The selected columns only approximate the true endmembers when the data
are noisy. Refinement alternates a nonnegative abundance solve with a
projected-gradient endmember update that keeps each endmember inside a
ball around its selected data column.
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import nnls as _lh_nnls

from .data import as_matrix
from .solver import SolverConfig


@dataclass(frozen=True)
class EndmemberSet:
    """Selected endmembers.

    Attributes
    ----------
    A : ndarray, shape (m, n)
        Unit-norm endmember columns.
    indices_Y : ndarray
        Positions of the endmembers among the candidates.
    indices_X : ndarray
        Nearest original data column of each endmember.
    radii : ndarray
        Refinement radius of each endmember (its cluster diameter).
    """

    A: np.ndarray
    indices_Y: np.ndarray
    indices_X: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        if np.any(np.abs(np.linalg.norm(A, axis=0) - 1.0) > 1e-12):
            raise ValueError("endmember columns must have unit norm")
        radii = np.asarray(self.radii, dtype=np.float64)
        if radii.shape != (A.shape[1],) or np.any(radii < 0):
            raise ValueError("need one nonnegative radius per endmember")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "indices_Y", np.asarray(self.indices_Y, dtype=int))
        object.__setattr__(self, "indices_X", np.asarray(self.indices_X, dtype=int))

    @property
    def n(self):
        return self.A.shape[1]

    @classmethod
    def from_selection(cls, rp, selected):
        """Endmembers picked by a solver from a reduced problem."""
        selected = np.asarray(selected, dtype=int)
        if selected.size == 0:
            raise ValueError("no endmembers were selected")
        radii = rp.diameters[selected] if rp.diameters is not None else np.zeros(len(selected))
        src = rp.source_index[selected] if rp.source_index is not None else selected
        return cls(A=rp.Y[:, selected], indices_Y=selected, indices_X=src, radii=radii)


def nnls(A, X):
    """Column-by-column nonnegative least squares (Lawson-Hanson active set)."""
    A = as_matrix(A, "A")
    X = as_matrix(X, "X")
    if A.shape[0] != X.shape[0]:
        raise ValueError("A and X must have the same number of rows")
    if np.linalg.matrix_rank(A) < A.shape[1]:
        warnings.warn("A is not of full column rank; NNLS solution may not be unique", stacklevel=2)
    S = np.empty((A.shape[1], X.shape[1]))
    for j in range(X.shape[1]):
        S[:, j] = _lh_nnls(A, X[:, j], maxiter=50 * A.shape[1])[0]
    return S


def kkt_residual(A, X, S, sigma=None):
    """Per-column natural residual ``max_i |min(S_ij, grad_ij)|`` of the abundance problem."""
    G = A.T @ (A @ S - X)
    if sigma is not None:
        G = G + sigma
    return np.abs(np.minimum(S, G)).max(axis=0)


def _polish(A, X, S, sigma, tol):
    """Re-solve every column exactly on its current support.

    Columns sharing a support are solved together. The exact solution is
    kept when it is nonnegative and its KKT residual is no worse, which
    removes the iteration's last few digits of error on well-identified
    supports and finishes columns the iteration left above `tol`.
    """
    AtA = A.T @ A
    AtX = A.T @ X - (sigma if sigma is not None else 0.0)
    before = kkt_residual(A, X, S, sigma)
    supports = S > 0
    patterns, inverse = np.unique(supports.T, axis=0, return_inverse=True)
    inverse = np.ravel(inverse)
    for p, supp in enumerate(patterns):
        if not supp.any():
            continue
        cols = np.flatnonzero(inverse == p)
        cand = np.zeros((A.shape[1], len(cols)))
        try:
            cand[supp] = np.linalg.solve(AtA[np.ix_(supp, supp)], AtX[np.ix_(supp, cols)])
        except np.linalg.LinAlgError:
            continue
        sig = None if sigma is None else sigma[:, cols]
        after = kkt_residual(A, X[:, cols], np.maximum(cand, 0.0), sig)
        # round-off may leave entries a hair below zero on an exact support
        floor = -1e-12 * np.maximum(np.abs(cand).max(axis=0), 1.0)
        ok = np.all(cand[supp] >= floor, axis=0) & (after <= np.maximum(before[cols], tol))
        S[:, cols[ok]] = np.maximum(cand[:, ok], 0.0)
    return S


def solve_abundances(A, X, sigma_full=None, S0=None, tol=1e-6, max_iter=20000, delta=None):
    """Minimize ``1/2 ||A S - X||_F^2 + <sigma, S>`` over ``S >= 0``.

    ADMM on the split ``Z = S`` (Z carries the quadratic, S the sign
    constraint), stopped once every column's KKT residual is below `tol`;
    columns still above it are finished by an exact solve on their support.
    """
    A = as_matrix(A, "A")
    X = as_matrix(X, "X")
    n, d = A.shape[1], X.shape[1]
    sigma = None if sigma_full is None else np.asarray(sigma_full, dtype=np.float64)
    if sigma is not None and sigma.shape != (n, d):
        raise ValueError(f"sigma must have shape {(n, d)}")
    AtA = A.T @ A
    lam, Q = np.linalg.eigh(AtA)
    lam = np.maximum(lam, 0.0)
    if delta is None:
        pos = lam[lam > 1e-12]
        delta = float(np.sqrt(pos.min() * pos.max())) if pos.size else 1.0
    rhs0 = A.T @ X - (sigma if sigma is not None else 0.0)
    inv = 1.0 / (lam + delta)

    S = np.zeros((n, d)) if S0 is None else np.maximum(np.array(S0, dtype=np.float64), 0.0)
    P = np.zeros((n, d))
    for k in range(max_iter):
        Z = Q @ (inv[:, None] * (Q.T @ (rhs0 + delta * S - P)))
        S = np.maximum(Z + P / delta, 0.0)
        P += delta * (Z - S)
        if k % 10 == 9 and kkt_residual(A, X, S, sigma).max() <= tol:
            break
    return _polish(A, X, S, sigma, tol)


def project_ball_nonneg(v, center, radius):
    """Project `v` onto ``{x >= 0, ||x - center|| <= radius}`` for a nonnegative center.

    The projection has the form ``center + max(s (v - center), -center)``
    for a scalar ``s`` in (0, 1]. Its distance to the center grows with
    ``s`` and is piecewise quadratic with one breakpoint per clamped entry,
    so ``s`` is found exactly by scanning the sorted breakpoints.
    """
    v = np.asarray(v, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    if np.any(c < 0):
        raise ValueError("ball centers must be nonnegative")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    x = np.maximum(v, 0.0)
    if np.linalg.norm(x - c) <= radius:
        return x
    if radius == 0:
        return c.copy()
    a = v - c
    neg = a < 0
    brk = np.full(a.shape, np.inf)
    brk[neg] = c[neg] / -a[neg]
    order = np.argsort(brk[brk < 1.0], kind="stable")
    idx = np.flatnonzero(brk < 1.0)[order]
    a2_total = float(a @ a)
    cum_a2 = np.cumsum(a[idx] ** 2)
    cum_c2 = np.cumsum(c[idx] ** 2)
    t = brk[idx]
    # squared distance at each breakpoint; nondecreasing, so count those inside
    dist2 = t * t * (a2_total - cum_a2) + cum_c2
    k = int(np.count_nonzero(dist2 <= radius * radius))
    free = a2_total - (cum_a2[k - 1] if k else 0.0)
    fixed = cum_c2[k - 1] if k else 0.0
    s = np.sqrt(max(radius * radius - fixed, 0.0) / free)
    return c + np.maximum(s * a, -c)


def _project_ball_nonneg_cols(V, C, radii):
    return np.stack([project_ball_nonneg(V[:, j], C[:, j], radii[j]) for j in range(V.shape[1])], axis=1)


def _a_step(A, S, X, centers, radii, inner_iters=50, tol=1e-10):
    """Projected gradient with backtracking on ``1/2 ||A S - X||^2`` over the ball/orthant sets."""
    SSt = S @ S.T
    XSt = X @ S.T
    L = max(float(np.linalg.eigvalsh(SSt).max()), 1e-12)

    def f(B):
        R = B @ S - X
        return 0.5 * float((R * R).sum())

    fA = f(A)
    t = 2.0 / L
    for _ in range(inner_iters):
        G = A @ SSt - XSt
        while True:
            A_new = _project_ball_nonneg_cols(A - t * G, centers, radii)
            D = A_new - A
            f_new = f(A_new)
            if f_new <= fA + float((G * D).sum()) + float((D * D).sum()) / (2 * t) + 1e-15:
                break
            t *= 0.5
        moved = float(np.abs(D).max())
        A, fA = A_new, f_new
        t *= 2.0
        if moved <= tol:
            break
    return A


class RefineResult(NamedTuple):
    A: np.ndarray
    S: np.ndarray
    objectives: list
    a_step_skipped: bool


def refine_objective(A, S, X, sigma=None):
    R = A @ S - X
    val = 0.5 * float((R * R).sum())
    if sigma is not None:
        val += float((sigma * S).sum())
    return val


def refine(em, X, sigma_full=None, outer_iters=50, cfg=None, rel_tol=1e-7):
    """Alternating minimization started from the selected endmembers.

    Each outer iteration solves for ``S`` with ``A`` fixed, moves ``A``
    within its balls with ``S`` fixed, records the objective, and then
    rescales the columns of ``A`` to unit norm while scaling the rows of
    ``S`` inversely so that ``A S`` is unchanged.

    Returns
    -------
    RefineResult
        ``(A, S, objectives, a_step_skipped)``.
    """
    cfg = cfg or SolverConfig()
    X = as_matrix(X, "X")
    centers = em.A
    radii = em.radii
    skip = bool(np.all(radii == 0))
    if skip:
        warnings.warn("all refinement radii are zero; only abundances are updated", stacklevel=2)
    A = em.A.copy()
    S = None
    history = []
    for _ in range(outer_iters):
        S = solve_abundances(A, X, sigma_full, S0=S)
        if not skip:
            A = _a_step(A, S, X, centers, radii)
        history.append(refine_objective(A, S, X, sigma_full))
        if skip:
            break
        norms = np.linalg.norm(A, axis=0)
        A = A / norms
        S = S * norms[:, None]
        if len(history) > 1 and abs(history[-2] - history[-1]) <= rel_tol * max(abs(history[-2]), 1e-300):
            break
    return RefineResult(A=A, S=S, objectives=history, a_step_skipped=skip)
