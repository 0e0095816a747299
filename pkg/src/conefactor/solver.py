"""ADMM solver for the l_{1,inf} regularized self-representation model.

The basic model is

    min_{T >= 0}  zeta * sum_i max_j T_ij + <R_w sigma C_w, T> + fit(T)

where the fit term penalizes ``Y T - Xs`` column by column with the
cluster mass weights. Splitting ``Z = T`` puts the quadratic on ``Z``
and the nonsmooth row-max term on ``T``.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .projections import prox_rowmax_nonneg_rows
from .reduction import DEFAULT_H

BASIC_TOL, BASIC_MAX_ITER = 1e-8, 5000
EXTENDED_TOL, EXTENDED_MAX_ITER = 1e-7, 10000


@dataclass(frozen=True)
class SolverConfig:
    """Model and numerical parameters shared by both solvers.

    ``tol`` and ``max_iter`` left as ``None`` pick the solver-specific
    defaults (1e-8 / 5000 for the basic solver, 1e-7 / 10000 for the
    extended one).

    ``fit_weighting`` controls how the column weights ``c_j`` enter the
    basic fit term: ``"mass"`` uses ``beta/2 * sum_j c_j ||r_j||^2`` and
    ``"squared"`` uses ``beta/2 * ||R C_w||_F^2 = beta/2 * sum_j c_j^2 ||r_j||^2``.
    The two coincide when ``C_w = I``.
    """

    zeta: float = 1.0
    beta: float = 250.0
    nu: float = 50.0
    h: float = DEFAULT_H
    delta: float = 1.0
    mu: float = 2.01
    gamma: float = 0.01
    eta: float = 0.07
    tol: float = None
    max_iter: int = None
    select_threshold: float = 0.1
    fit_weighting: str = "mass"

    def __post_init__(self):
        if self.zeta < 0:
            raise ValueError("zeta must be nonnegative")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.nu < 0:
            raise ValueError("nu must be nonnegative")
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.select_threshold < 1:
            raise ValueError("select_threshold must lie in (0, 1)")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.fit_weighting not in ("mass", "squared"):
            raise ValueError("fit_weighting must be 'mass' or 'squared'")

    def fit_column_weights(self, col_weights):
        return col_weights if self.fit_weighting == "mass" else col_weights**2

    def as_dict(self):
        return asdict(self)


@dataclass
class SolveResult:
    """Output of either solver.

    ``Z`` and ``P`` (and ``P2`` for the extended solver) hold the final
    splitting variables and multipliers so a solve can be resumed.
    """

    T: np.ndarray
    selected: np.ndarray
    iterations: int
    converged: bool
    primal_residuals: list
    objective: float
    V: np.ndarray = None
    e: np.ndarray = None
    objectives: list = field(default_factory=list, repr=False)
    Z: np.ndarray = field(default=None, repr=False)
    P: np.ndarray = field(default=None, repr=False)
    P2: np.ndarray = field(default=None, repr=False)
    gaps: list = field(default_factory=list, repr=False)

    @property
    def final_residual(self):
        return self.primal_residuals[-1] if self.primal_residuals else float("nan")

    def report(self):
        out = {
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "final_residual": float(self.final_residual),
            "objective": float(self.objective),
            "selected": [int(i) for i in self.selected],
        }
        if self.e is not None:
            out["gap"] = float(self.gaps[-1]) if self.gaps else float("nan")
        return out


def l1inf(T):
    """Sum over rows of the largest absolute entry."""
    return float(np.abs(T).max(axis=1).sum())


def select_endmembers(T, select_threshold=0.1):
    """Rows whose maximum exceeds ``select_threshold`` times the overall maximum."""
    T = np.asarray(T, dtype=np.float64)
    top = T.max()
    if top <= 0:
        return np.array([], dtype=int)
    return np.flatnonzero(T.max(axis=1) > select_threshold * top)


def _check_shapes(rp, T):
    if T.shape != (rp.n_c, rp.d_s):
        raise ValueError(f"T must have shape {(rp.n_c, rp.d_s)}, got {T.shape}")


def objective_basic(rp, T, cfg=None):
    cfg = cfg or SolverConfig()
    T = np.asarray(T, dtype=np.float64)
    _check_shapes(rp, T)
    if T.min() < -1e-9:
        raise ValueError("T must be nonnegative")
    W = rp.weights_sigma(cfg.nu, cfg.h)
    return _objective_basic(rp, T, W, cfg.fit_column_weights(rp.col_weights), cfg)


def _objective_basic(rp, T, W, fw, cfg):
    R = rp.Y @ T - rp.Xs
    fit = 0.5 * cfg.beta * float(((R * R).sum(axis=0) * fw).sum())
    return cfg.zeta * float(T.max(axis=1).sum()) + float((W * T).sum()) + fit


def solve_basic(rp, cfg=None, init=None, track_objective=True):
    """Minimize the basic convex model by ADMM on the split ``Z = T``.

    Parameters
    ----------
    rp : ReducedProblem
    cfg : SolverConfig, optional
    init : SolveResult, optional
        Warm start from a previous result's ``(Z, T, P)``.
    track_objective : bool
        Record the objective of every iterate (costs one extra product per
        iteration).

    Returns
    -------
    SolveResult
        ``converged`` is False when `max_iter` was hit first.

    Notes
    -----
    Each iteration solves ``(beta c_j YᵀY + delta I) z_j = rhs_j`` for every
    column using one eigendecomposition of ``YᵀY``, applies the row-wise
    prox of the nonnegative max with weight ``zeta / delta``, then takes a
    multiplier step. Iteration stops once both the split residual
    ``||Z - T||_F / sqrt(n_c d_s)`` and the change in ``T`` (same scaling)
    are below ``tol``.
    """
    cfg = cfg or SolverConfig()
    tol = cfg.tol if cfg.tol is not None else BASIC_TOL
    max_iter = cfg.max_iter if cfg.max_iter is not None else BASIC_MAX_ITER
    Y, Xs = rp.Y, rp.Xs
    n, d = rp.n_c, rp.d_s
    delta, zeta, beta = cfg.delta, cfg.zeta, cfg.beta
    W = rp.weights_sigma(cfg.nu, cfg.h)
    fw = cfg.fit_column_weights(rp.col_weights)

    lam, Q = np.linalg.eigh(Y.T @ Y)
    lam = np.maximum(lam, 0.0)
    denom = beta * lam[:, None] * fw[None, :] + delta
    QtB = Q.T @ (beta * (Y.T @ Xs) * fw[None, :])
    Wd = W / delta
    scale = math.sqrt(n * d)

    if init is not None:
        T, Z, P = init.T.copy(), init.Z.copy(), init.P.copy()
    else:
        T = np.zeros((n, d))
        Z = np.zeros((n, d))
        P = np.zeros((n, d))

    residuals, objectives = [], []
    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        Z = Q @ ((QtB + Q.T @ (delta * T - P)) / denom)
        T_old = T
        T = prox_rowmax_nonneg_rows(Z + P / delta - Wd, zeta / delta)
        R = Z - T
        P += delta * R
        r = float(np.linalg.norm(R)) / scale
        s = float(np.linalg.norm(T - T_old)) / scale
        residuals.append(r)
        if track_objective:
            objectives.append(_objective_basic(rp, T, W, fw, cfg))
        if r <= tol and s <= tol:
            converged = True
            break

    return SolveResult(T=T, selected=select_endmembers(T, cfg.select_threshold), iterations=k,
                       converged=converged, primal_residuals=residuals,
                       objective=_objective_basic(rp, T, W, fw, cfg),
                       objectives=objectives, Z=Z, P=P)
