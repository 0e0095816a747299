"""Seeded synthetic data generators.

Every generator draws from ``numpy.random.default_rng(seed)`` (PCG64), so
output is a pure function of the arguments.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .data import as_matrix
from .refinement import EndmemberSet

# 4x4 mixing matrix of the NMR blind source separation example.
BSS_A0 = np.array([
    [0.3162, 0.6576, 0.3288, 0.5000],
    [0.3162, 0.3288, 0.6576, 0.5000],
    [0.6325, 0.1644, 0.1644, 0.5000],
    [0.6325, 0.6576, 0.6576, 0.5000],
])

# Mixing matrix recovered from the real NMR data, as published.
BSS_A_REPORTED = np.array([
    [0.3267, 0.6524, 0.3327, 0.4933],
    [0.3180, 0.3300, 0.6544, 0.5110],
    [0.6228, 0.1757, 0.1658, 0.4836],
    [0.6358, 0.6593, 0.6585, 0.5114],
])

SPIKE_WEIGHT = 0.3
SPIKE_BASELINE = 0.02


def _unit(X):
    return X / np.linalg.norm(X, axis=0)


def simplex_weights(rng, k, size):
    """`size` points drawn uniformly from the probability simplex in ``R^k`` (columns).

    Uses the gaps between sorted uniform draws on [0, 1].
    """
    u = np.sort(rng.random((k - 1, size)), axis=0)
    edges = np.vstack([np.zeros((1, size)), u, np.ones((1, size))])
    return np.diff(edges, axis=0)


def random_endmembers(m, n, min_angle_deg=15.0, seed=0, max_tries=10000):
    """`n` random nonnegative unit vectors in ``R^m`` with pairwise angles of at least `min_angle_deg`."""
    rng = np.random.default_rng(seed)
    cos_max = math.cos(math.radians(min_angle_deg))
    cols = []
    for _ in range(max_tries):
        v = rng.random(m)
        v /= np.linalg.norm(v)
        if all(v @ c <= cos_max for c in cols):
            cols.append(v)
            if len(cols) == n:
                return np.stack(cols, axis=1)
    raise RuntimeError(f"could not place {n} endmembers {min_angle_deg} degrees apart in R^{m}")


@dataclass(frozen=True)
class MixturePlan:
    """Mixture design: how many samples of each mixing order to draw.

    ``counts = (pure, pairs, triples, full)`` gives samples per endmember,
    per pair, per triple, and the number of samples mixing all endmembers.
    """

    endmembers: np.ndarray
    counts: tuple = (50, 30, 10, 30)
    noise_std: float = 0.006
    seed: int = 0

    def __post_init__(self):
        E = as_matrix(self.endmembers, "endmembers")
        if np.any(np.abs(np.linalg.norm(E, axis=0) - 1.0) > 1e-9):
            raise ValueError("endmembers must have unit-norm columns")
        object.__setattr__(self, "endmembers", E)
        if len(self.counts) != 4 or any(int(c) != c or c < 0 for c in self.counts):
            raise ValueError("counts must be four nonnegative integers")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        n = E.shape[1]
        if self.counts[1] > 0 and n < 2:
            raise ValueError("pair mixtures need at least 2 endmembers")
        if self.counts[2] > 0 and n < 3:
            raise ValueError("triple mixtures need at least 3 endmembers")

    @property
    def n_columns(self):
        n = self.endmembers.shape[1]
        pure, pairs, triples, full = self.counts
        return n * pure + math.comb(n, 2) * pairs + math.comb(n, 3) * triples + full


def pure_indices(plan):
    """Column indices of the pure samples, one array per endmember."""
    pure = plan.counts[0]
    return [np.arange(i * pure, (i + 1) * pure) for i in range(plan.endmembers.shape[1])]


def gen_mixtures(plan, return_coefficients=False):
    """Noisy normalized mixtures of the plan's endmembers.

    Columns are ordered pure samples (grouped by endmember), pair mixtures,
    triple mixtures, then full mixtures. Noise is added entrywise, negative
    entries are clamped to zero and every column is normalized.

    Returns
    -------
    X : ndarray, shape (m, d)
    truth : EndmemberSet
        The generating endmembers; ``indices_X`` is the first pure sample
        of each (all of them are listed by :func:`pure_indices`).
    S : ndarray, shape (n, d)
        Only with ``return_coefficients``: the mixing weights, so that
        ``endmembers @ S`` is the noise-free data before normalization.
    """
    E = plan.endmembers
    m, n = E.shape
    pure, pairs, triples, full = plan.counts
    rng = np.random.default_rng(plan.seed)
    blocks = [np.repeat(np.eye(n), pure, axis=1)]
    for order, count in ((2, pairs), (3, triples)):
        if count == 0:
            continue
        for subset in itertools.combinations(range(n), order):
            B = np.zeros((n, count))
            B[list(subset), :] = simplex_weights(rng, order, count)
            blocks.append(B)
    if full:
        blocks.append(simplex_weights(rng, n, full))
    S = np.hstack(blocks)
    X = E @ S
    if plan.noise_std > 0:
        X = X + plan.noise_std * rng.standard_normal(X.shape)
    X = np.maximum(X, 0.0)
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise ValueError("a column became zero after clamping; lower noise_std")
    X = X / norms
    first = np.array([i * pure for i in range(n)]) if pure else np.full(n, -1)
    truth = EndmemberSet(A=E, indices_Y=np.arange(n), indices_X=first, radii=np.zeros(n))
    return (X, truth, S) if return_coefficients else (X, truth)


def make_spike(m, spike_height, band):
    """Unit column with one band of height `spike_height` over a flat baseline."""
    if spike_height <= 0:
        raise ValueError("zero spike")
    s = np.full(m, SPIKE_BASELINE)
    s[band] += spike_height
    return s / np.linalg.norm(s)


def gen_spike_outliers(X, spike_height=1.0, fraction=0.03, seed=0, band=None):
    """Append a spike column and mix it into a fraction of the columns.

    ``ceil(fraction * d)`` randomly chosen columns become
    ``0.7 x_j + 0.3 spike`` (renormalized). Returns the new matrix and the
    indices of the affected columns, which include the spike column itself
    (appended last).
    """
    X = as_matrix(X, "X")
    if not 0 <= fraction < 1:
        raise ValueError("fraction must lie in [0, 1)")
    m, d = X.shape
    rng = np.random.default_rng(seed)
    band = int(rng.integers(m)) if band is None else int(band)
    spike = make_spike(m, spike_height, band)
    k = math.ceil(fraction * d - 1e-9)
    chosen = np.sort(rng.choice(d, size=k, replace=False)) if k else np.array([], dtype=int)
    Xo = X.copy()
    if k:
        Xo[:, chosen] = (1 - SPIKE_WEIGHT) * X[:, chosen] + SPIKE_WEIGHT * spike[:, None]
        Xo[:, chosen] = _unit(Xo[:, chosen])
    Xo = np.hstack([Xo, spike[:, None]])
    return Xo, np.append(chosen, d).astype(int)


def _bump(t, center, width, height):
    u = (t - center) / width
    return height * np.maximum(1.0 - u * u, 0.0) ** 2


def gen_bss(A0=None, source_len=5000, active_density=0.2, seed=0, width_range=(4.0, 12.0)):
    """Noise-free mixtures ``X0 = A0 S0`` of sparse bump-train sources.

    Each source is a sum of compactly supported bumps placed at random.
    One bump per source is reserved as its pure region: every other source
    is zeroed over that bump's support, so some columns of ``X0`` are exact
    multiples of the matching column of ``A0``.
    """
    A0 = BSS_A0 if A0 is None else as_matrix(A0, "A0")
    k = A0.shape[1]
    if not 0 < active_density <= 1:
        raise ValueError("active_density must lie in (0, 1]")
    if source_len < 10 * A0.shape[0]:
        raise ValueError("source_len must be at least 10 times the number of mixtures")
    rng = np.random.default_rng(seed)
    t = np.arange(source_len, dtype=np.float64)
    S0 = np.zeros((k, source_len))
    mean_width = 0.5 * (width_range[0] + width_range[1])
    n_bumps = max(1, int(round(active_density * source_len / (2 * mean_width))))
    for i in range(k):
        centers = rng.uniform(0, source_len, n_bumps)
        widths = rng.uniform(*width_range, n_bumps)
        heights = rng.uniform(0.2, 1.0, n_bumps)
        for c, w, h in zip(centers, widths, heights):
            S0[i] += _bump(t, c, w, h)
    # pure regions sit in disjoint slots so they cannot overlap each other
    slot = source_len / k
    for i in range(k):
        w = width_range[1]
        c = rng.uniform(i * slot + w, (i + 1) * slot - w)
        pure = _bump(t, c, w, 1.0)
        support = pure > 0
        S0[:, support] = 0.0
        S0[i] += pure
    return A0 @ S0, S0


def gen_cone_instance(seed, m=10, n_extreme=(3, 6), n_total=(10, 16), background=0.1, min_angle_deg=3.0):
    """Noise-free instance with a known set of extreme columns.

    Each extreme column is a dominant unit band on its own coordinate over
    a small random background, so no extreme lies in the cone of the
    others. The remaining columns are random convex combinations of two or
    more extremes, rejected when they fall within `min_angle_deg` of an
    existing column. Columns are normalized and shuffled.

    Returns
    -------
    X : ndarray, shape (m, d)
    extremes : ndarray
        Sorted indices of the extreme columns in ``X``.
    """
    rng = np.random.default_rng(seed)
    k = int(rng.integers(n_extreme[0], n_extreme[1] + 1))
    total = int(rng.integers(n_total[0], n_total[1] + 1))
    if k > m:
        raise ValueError("more extremes than dimensions")
    E = background * rng.random((m, k))
    E[rng.choice(m, k, replace=False), np.arange(k)] += 1.0
    E = _unit(E)
    cols = list(E.T)
    cos_max = math.cos(math.radians(min_angle_deg))
    while len(cols) < total:
        size = int(rng.integers(2, k + 1))
        idx = rng.choice(k, size, replace=False)
        v = E[:, idx] @ simplex_weights(rng, size, 1)[:, 0]
        v /= np.linalg.norm(v)
        if max(float(v @ c) for c in cols) <= cos_max:
            cols.append(v)
    X = np.stack(cols, axis=1)
    perm = rng.permutation(total)
    X = X[:, perm]
    return X, np.sort(np.flatnonzero(perm < k))


@dataclass(frozen=True)
class ColorScene:
    """Three-channel scene with a dense interior cluster and rare outlier colors.

    ``vertices`` are the pure colors spanning the main cone, ``floor`` is
    the interior color of the dense cluster and ``rare`` the colors lying
    outside the cone. Label arrays give each column's group: ``-1`` for
    mixtures, ``0..k-1`` pure vertex pixels, ``k`` the floor and ``k+1+r``
    the ``r``-th rare color.
    """

    X: np.ndarray
    labels: np.ndarray
    vertices: np.ndarray
    floor: np.ndarray
    rare: np.ndarray


def gen_color_scene(seed=0, n_mix=1500, n_pure=100, n_floor=600, rare_sizes=(8, 15, 25), jitter=0.003):
    """Color-image stand-in: mixtures of three primaries, a dense floor, rare colors.

    The floor color is a fixed interior mixture, so it can be represented
    exactly by the primaries; it only becomes worth selecting when the
    similarity weights reward representing dense data by nearby candidates.
    The rare colors sit outside the cone of the primaries and hold well
    under 1% of the pixels each.
    """
    rng = np.random.default_rng(seed)
    V = _unit(np.array([[0.9, 0.25, 0.2], [0.2, 0.85, 0.3], [0.15, 0.3, 0.9]]).T)
    floor = V @ np.array([0.45, 0.35, 0.2])
    floor /= np.linalg.norm(floor)
    rare = _unit(np.array([[0.95, 0.9, 0.05], [0.05, 0.9, 0.95], [0.97, 0.05, 0.6]]).T)
    cols, labels = [], []
    cols.append(V @ simplex_weights(rng, 3, n_mix))
    labels.append(np.full(n_mix, -1))
    for i in range(3):
        cols.append(np.repeat(V[:, [i]], n_pure, axis=1))
        labels.append(np.full(n_pure, i))
    cols.append(np.repeat(floor[:, None], n_floor, axis=1))
    labels.append(np.full(n_floor, 3))
    for r, size in enumerate(rare_sizes):
        cols.append(np.repeat(rare[:, [r]], size, axis=1))
        labels.append(np.full(size, 4 + r))
    X = np.hstack(cols)
    X = np.maximum(X + jitter * rng.standard_normal(X.shape), 1e-6)
    return ColorScene(X=_unit(X), labels=np.concatenate(labels), vertices=V, floor=floor, rare=rare)
