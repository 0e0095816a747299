"""Scoring, brute-force oracles and the noise-stability experiment."""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.optimize import nnls as _lh_nnls

from .data import as_matrix
from .reduction import self_representation
from .refinement import nnls
from .solver import SolverConfig, l1inf, solve_basic

EXHAUSTIVE_MATCH_LIMIT = 8


def angle_deg(a, b):
    """Angle between two nonzero vectors in degrees.

    Uses ``2 atan2(||a - b||, ||a + b||)`` on the unit vectors, which stays
    accurate for nearly parallel inputs where ``arccos`` loses half the digits.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("angle undefined for a zero vector")
    a, b = a / na, b / nb
    return float(np.degrees(2.0 * np.arctan2(np.linalg.norm(a - b), np.linalg.norm(a + b))))


def angle_matrix(A, B):
    """Pairwise angles (degrees) between the columns of `A` (rows) and `B` (columns)."""
    A = A / np.linalg.norm(A, axis=0)
    B = B / np.linalg.norm(B, axis=0)
    diff = np.linalg.norm(A[:, :, None] - B[:, None, :], axis=0)
    summ = np.linalg.norm(A[:, :, None] + B[:, None, :], axis=0)
    return np.degrees(2.0 * np.arctan2(diff, summ))


@dataclass(frozen=True)
class MatchReport:
    """Deviation angles after optimally pairing estimated and true columns.

    ``permutation[k]`` is the true column matched to estimated column
    ``est_index[k]``; ``angles[k]`` is their angle in degrees.
    """

    permutation: np.ndarray
    est_index: np.ndarray
    angles: np.ndarray
    unmatched_est: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    unmatched_true: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    @property
    def avg_deg(self):
        return float(self.angles.mean())

    @property
    def min_deg(self):
        return float(self.angles.min())

    @property
    def max_deg(self):
        return float(self.angles.max())

    def as_dict(self):
        return {
            "avg_deg": self.avg_deg,
            "min_deg": self.min_deg,
            "max_deg": self.max_deg,
            "angles": [float(a) for a in self.angles],
            "est_index": [int(i) for i in self.est_index],
            "permutation": [int(i) for i in self.permutation],
            "unmatched_est": [int(i) for i in self.unmatched_est],
            "unmatched_true": [int(i) for i in self.unmatched_true],
        }


def match_and_score(A_est, A_true):
    """Pair estimated and true endmembers to minimize the summed angle.

    Up to eight columns the pairing is found by trying every permutation;
    larger problems use the Hungarian algorithm. With unequal column counts
    only the smaller number of pairs is formed and the leftovers are listed.
    """
    A_est = as_matrix(A_est, "A_est")
    A_true = as_matrix(A_true, "A_true")
    if A_est.shape[0] != A_true.shape[0]:
        raise ValueError("A_est and A_true must have the same number of rows")
    D = angle_matrix(A_est, A_true)
    ne, nt = D.shape
    if max(ne, nt) <= EXHAUSTIVE_MATCH_LIMIT:
        best, best_pairs = math.inf, None
        if ne <= nt:
            for cols in itertools.permutations(range(nt), ne):
                cost = D[np.arange(ne), list(cols)].sum()
                if cost < best - 1e-12:
                    best, best_pairs = cost, (np.arange(ne), np.array(cols))
        else:
            for rows in itertools.permutations(range(ne), nt):
                cost = D[list(rows), np.arange(nt)].sum()
                if cost < best - 1e-12:
                    best, best_pairs = cost, (np.array(rows), np.arange(nt))
            order = np.argsort(best_pairs[0])
            best_pairs = (best_pairs[0][order], best_pairs[1][order])
        rows, cols = best_pairs
    else:
        rows, cols = linear_sum_assignment(D)
    return MatchReport(
        permutation=np.asarray(cols, dtype=int),
        est_index=np.asarray(rows, dtype=int),
        angles=D[rows, cols],
        unmatched_est=np.setdiff1d(np.arange(ne), rows),
        unmatched_true=np.setdiff1d(np.arange(nt), cols),
    )


@dataclass(frozen=True)
class Row0Certificate:
    """Smallest column subset whose cone holds every column.

    ``residual`` is the largest NNLS residual over all columns for that
    subset; ``enumerated`` counts the subsets whose feasibility was tested.
    """

    support: tuple
    residual: float
    enumerated: int


def _fits(X, subset, cols, tol):
    A = X[:, list(subset)]
    worst = 0.0
    for j in cols:
        s = _lh_nnls(A, X[:, j], maxiter=50 * A.shape[1])[0]
        r = float(np.linalg.norm(A @ s - X[:, j]))
        if r > tol:
            return False, r
        worst = max(worst, r)
    return True, worst


def row0_oracle(X, feas_tol=None, max_cols=16, prune=True):
    """Brute-force solution of the row-0 problem ``min #nonzero rows s.t. X T = X, T >= 0``.

    Subsets are tried by increasing size in lexicographic order; a subset is
    feasible when every column is fit by NNLS over it within `feas_tol`
    (default ``1e-6 * sqrt(m)``). The first feasible subset is returned.

    With ``prune`` the search skips subsets missing an *essential* column,
    one that no other columns can represent. Every feasible subset contains
    all essential columns, so the answer is unchanged.
    """
    X = as_matrix(X, "X")
    m, d = X.shape
    if d > max_cols:
        raise ValueError(f"row0_oracle enumerates subsets; {d} columns exceeds max_cols={max_cols}")
    tol = 1e-6 * math.sqrt(m) if feas_tol is None else feas_tol
    required = []
    if prune:
        for j in range(d):
            others = [i for i in range(d) if i != j]
            if not others or not _fits(X, others, [j], tol)[0]:
                required.append(j)
    rest = [j for j in range(d) if j not in required]
    enumerated = 0
    for size in range(len(required), d + 1):
        for extra in itertools.combinations(rest, size - len(required)):
            subset = tuple(sorted(required + list(extra)))
            enumerated += 1
            outside = [j for j in range(d) if j not in subset]
            ok, worst = _fits(X, subset, outside, tol)
            if ok:
                return Row0Certificate(support=subset, residual=worst, enumerated=enumerated)
    raise RuntimeError("no feasible subset found")  # unreachable: the full set always fits


def projection_stats(A, X, zero_tol=1e-8):
    """NNLS projection error ``||A S - X||_F^2`` and fraction of nonzero abundances."""
    A = as_matrix(A, "A")
    X = as_matrix(X, "X")
    S = nnls(A, X)
    R = A @ S - X
    err = float((R * R).sum())
    sparsity = float(np.count_nonzero(np.abs(S) > zero_tol)) / S.size
    return err, sparsity


@dataclass
class StabilityConfig:
    """Noise sequence and regularization rule for the stability experiment.

    ``alpha_rule`` maps a noise level to the weight on ``||T||_{1,inf}`` in
    ``||X T - X||_F^2 + alpha ||T||_{1,inf}``. Weights below ``alpha_floor``
    (in particular the zero weight of a noise-free level) are raised to it;
    the fit residual at the floor is of order ``alpha``.
    """

    noise_levels: tuple = (1e-1, 1e-2, 1e-3)
    alpha_rule: object = staticmethod(lambda delta: delta)
    trials: int = 1
    seed: int = 0
    alpha_floor: float = 5e-7
    tol: float = 1e-10
    max_iter: int = 200000

    def __post_init__(self):
        levels = np.asarray(self.noise_levels, dtype=np.float64)
        if levels.ndim != 1 or levels.size == 0:
            raise ValueError("noise_levels must be a nonempty sequence")
        if np.any(np.diff(levels) >= 0):
            raise ValueError("noise_levels must be strictly decreasing")
        if np.any(levels < 0):
            raise ValueError("noise_levels must be nonnegative")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")


def alpha_rule_conforms(alpha_rule, probes=None):
    """Check numerically that ``alpha -> 0`` and ``delta**2 / alpha -> 0`` as ``delta -> 0``.

    Both sequences must decrease strictly along the probe levels and the
    last ratio must be small relative to the first.
    """
    probes = np.logspace(-1, -8, 8) if probes is None else np.asarray(probes)
    alphas = np.array([alpha_rule(float(p)) for p in probes])
    if np.any(alphas <= 0):
        return False
    ratios = probes**2 / alphas
    return bool(np.all(np.diff(alphas) < 0) and np.all(np.diff(ratios) < 0)
                and ratios[-1] < 1e-3 * ratios[0] and alphas[-1] < 1e-3 * alphas[0])


def solve_penalized(X, alpha, tol=1e-10, max_iter=200000):
    """Minimize ``||X T - X||_F^2 + alpha ||T||_{1,inf}`` over ``T >= 0``.

    Mapped onto the basic solver with unit column weights, no similarity
    penalty, ``zeta = 1`` and ``beta = 2 / alpha``.
    """
    beta = 2.0 / alpha
    cfg = SolverConfig(zeta=1.0, beta=beta, nu=0.0, delta=admm_delta(X, beta), tol=tol, max_iter=max_iter)
    return solve_basic(self_representation(X), cfg, track_objective=False)


def admm_delta(Y, beta, zeta=1.0, scale=0.6):
    """ADMM penalty ``scale * lambda_max(YᵀY) * sqrt(beta * zeta)`` for large `beta`.

    The default ``delta = 1`` suits ``beta = 250``; as ``beta`` grows the
    quadratic block stiffens and a penalty between the curvature of the fit
    and the prox weight keeps the iteration count moderate.
    """
    lam = np.linalg.eigvalsh(Y.T @ Y)
    return scale * float(lam.max()) * math.sqrt(beta * zeta)


def _noisy(X, level, rng):
    N = rng.standard_normal(X.shape)
    if level > 0:
        N *= level / np.linalg.norm(N)
    else:
        N[:] = 0.0
    Xd = X + N
    return Xd / np.linalg.norm(Xd, axis=0)


def run_stability(X_true, cfg=None):
    """Solve the penalized model on noisy copies of `X_true` for each noise level.

    Returns a dict with one record per level holding ``alpha``, the mean
    fidelity ``||X T - X||_F`` (on the noisy data the solve saw), the mean
    ``||T||_{1,inf}`` and its distance to the certified number of extreme
    columns ``|I|``.
    """
    cfg = cfg or StabilityConfig()
    X_true = as_matrix(X_true, "X_true")
    X_true = X_true / np.linalg.norm(X_true, axis=0)
    cert = row0_oracle(X_true)
    n_ext = len(cert.support)
    rng = np.random.default_rng(cfg.seed)
    records = []
    converged = True
    for level in cfg.noise_levels:
        alpha = float(cfg.alpha_rule(float(level)))
        alpha_used = max(alpha, cfg.alpha_floor)
        fid, norms = [], []
        for _ in range(cfg.trials):
            Xd = _noisy(X_true, float(level), rng)
            res = solve_penalized(Xd, alpha_used, cfg.tol, cfg.max_iter)
            converged &= res.converged
            fid.append(float(np.linalg.norm(Xd @ res.T - Xd)))
            norms.append(l1inf(res.T))
        records.append({
            "noise": float(level),
            "alpha": alpha_used,
            "fidelity": float(np.mean(fid)),
            "l1inf": float(np.mean(norms)),
            "gap": float(abs(np.mean(norms) - n_ext)),
        })
    return {
        "n_extreme": n_ext,
        "support": [int(i) for i in cert.support],
        "alpha_rule_conforming": alpha_rule_conforms(cfg.alpha_rule),
        "converged": bool(converged),
        "levels": records,
    }


def format_angle_table(rows):
    """Plain-text table of average / min / max deviation angles.

    `rows` is a sequence of ``(label, avg, min, max)``.
    """
    width = max([len("Method")] + [len(r[0]) for r in rows])
    lines = [f"{'Method':<{width}}  {'Avg.':>7}  {'Min.':>7}  {'Max.':>7}"]
    for label, avg, lo, hi in rows:
        lines.append(f"{label:<{width}}  {avg:7.2f}  {lo:7.2f}  {hi:7.2f}")
    return "\n".join(lines)


def format_projection_table(rows):
    """Plain-text table of NNLS projection error and sparsity; rows are ``(label, err, sparsity)``."""
    width = max([len("Method")] + [len(r[0]) for r in rows])
    lines = [f"{'Method':<{width}}  {'||AS-X||^2':>12}  {'||S||_0/(dn)':>12}"]
    for label, err, sp in rows:
        lines.append(f"{label:<{width}}  {err:12.4g}  {sp:12.3f}")
    return "\n".join(lines)
