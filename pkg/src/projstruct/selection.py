"""Penalized structure selection.

The selected structure minimizes  ||Y - P_I Y||^2 + sigma^2 * pen(I)  with
pen(I) = 2*kappa*rho(I) (or the model-averaging variant that adds dim L_I).
Every family gets a brute-force selector over its capped enumeration; the
families with special form get fast exact algorithms, and the combinatorial
ones get multi-start heuristics.

Ties are broken deterministically: objectives within a relative 1e-12 band
count as equal, and among tied structures the one with the smallest majorant,
then the smallest canonical sort key, wins.  Exact selectors and the brute
force share this rule so they return identical structures.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError, ExactModeUnavailableError
from .linalg import sq_norm
from .structures import (
    Band,
    Bicluster,
    BiclusterFamily,
    BandingFamily,
    Caps,
    ClusteringFamily,
    Family,
    JumpFamily,
    JumpSet,
    KnotFamily,
    LeveledSparsityFamily,
    MultiLevelPartition,
    RegressionFamily,
    RegressionSupport,
    SmoothnessFamily,
    SparseSet,
    SparsityFamily,
    Truncation,
    canonical_partition,
    sorted_tuple,
)

TIE_RTOL = 1e-12


def penalty(family: Family, structure, kappa: float, pen_variant: str = "main") -> float:
    """pen(I) = 2*kappa*rho(I), plus dim(L_I) for the "map" variant."""
    pen = 2.0 * kappa * family.majorant(structure)
    if pen_variant == "map":
        pen += family.dim(structure)
    elif pen_variant != "main":
        raise ValueError(f"unknown penalty variant {pen_variant!r}")
    return pen


def objective(Y, family: Family, structure, sigma: float, kappa: float,
              pen_variant: str = "main") -> float:
    resid = np.asarray(Y, dtype=float) - family.project(structure, Y)
    return sq_norm(resid) + sigma**2 * penalty(family, structure, kappa, pen_variant)


class _ArgminTracker:
    """Running argmin with the shared tolerance tie rule."""

    def __init__(self, family: Family):
        self.family = family
        self.best = None
        self.best_obj = math.inf
        self.best_tie = None

    def _tie_key(self, structure):
        return (self.family.majorant(structure), self.family.sort_key(structure))

    def offer(self, structure, obj: float):
        tol = TIE_RTOL * (1.0 + abs(min(self.best_obj, obj)))
        if obj < self.best_obj - tol:
            self.best, self.best_obj, self.best_tie = structure, obj, self._tie_key(structure)
        elif obj <= self.best_obj + tol:
            key = self._tie_key(structure)
            if self.best_tie is None or key < self.best_tie:
                self.best, self.best_tie = structure, key
                self.best_obj = min(self.best_obj, obj)

    def result(self):
        if self.best is None:
            raise ValueError("no candidate structures offered")
        return self.best, self.best_obj


def select_bruteforce(Y, family: Family, sigma: float, kappa: float,
                      caps: Caps | None = None, pen_variant: str = "main"):
    """Global minimizer by exhaustive search over the capped enumeration."""
    tracker = _ArgminTracker(family)
    for structure in family.enumerate_structures(caps):
        tracker.offer(structure, objective(Y, family, structure, sigma, kappa, pen_variant))
    return tracker.result()


# ---------------------------------------------------------------------------
# Segmentation dynamic program (piecewise-constant SSE)
# ---------------------------------------------------------------------------


def segment_dp(values, max_breaks: int):
    """SSE-optimal break sets for every break budget.

    Returns a list indexed by k = 0..max_breaks of (sse, breaks) where breaks
    is the k-break set minimizing the within-segment sum of squares around
    segment means.  Exact because the optimal fit on a segment is its mean,
    so costs are additive over segments; O(n^2 * max_breaks).
    """
    y = np.asarray(values, dtype=float)
    n = y.size
    if n < 1:
        raise ValueError("values must be nonempty")
    if max_breaks > n - 1:
        raise ValueError("max_breaks must be at most n-1")
    cs = np.concatenate([[0.0], np.cumsum(y)])
    cs2 = np.concatenate([[0.0], np.cumsum(y * y)])

    def seg_cost(lo, hi):  # SSE of y[lo:hi] around its mean
        m = hi - lo
        total = cs[hi] - cs[lo]
        return max((cs2[hi] - cs2[lo]) - total * total / m, 0.0)

    cost = np.array([[seg_cost(lo, hi) if lo < hi else 0.0 for hi in range(n + 1)]
                     for lo in range(n + 1)])

    best = np.full((max_breaks + 1, n + 1), np.inf)
    back = np.zeros((max_breaks + 1, n + 1), dtype=int)
    best[0] = cost[0]
    for k in range(1, max_breaks + 1):
        for hi in range(k + 1, n + 1):
            cand = best[k - 1, k:hi] + cost[k:hi, hi]
            j = int(np.argmin(cand))
            best[k, hi] = cand[j]
            back[k, hi] = j + k
    out = []
    for k in range(max_breaks + 1):
        breaks = []
        hi = n
        for kk in range(k, 0, -1):
            lo = back[kk, hi]
            breaks.append(lo - 1)  # break sits after index lo-1
            hi = lo
        out.append((float(best[k, n]), tuple(sorted(breaks))))
    return out


# ---------------------------------------------------------------------------
# Family-specific exact selectors
# ---------------------------------------------------------------------------


def _finish(Y, family, sigma, kappa, pen_variant, scored):
    tracker = _ArgminTracker(family)
    for structure, obj in scored:
        tracker.offer(structure, obj)
    structure, _ = tracker.result()
    # report the objective through the shared evaluator for cross-checks
    return structure, objective(Y, family, structure, sigma, kappa, pen_variant)


def _pen(family, structure, sigma, kappa, pen_variant):
    return sigma**2 * penalty(family, structure, kappa, pen_variant)


def _select_smoothness(Y, family: SmoothnessFamily, sigma, kappa, pen_variant):
    y = np.asarray(Y, dtype=float)
    tails = np.concatenate([np.cumsum((y * y)[::-1])[::-1], [0.0]])

    def scored():
        for level in range(family.n + 1):
            s = Truncation(level)
            yield s, tails[level] + _pen(family, s, sigma, kappa, pen_variant)

    return _finish(Y, family, sigma, kappa, pen_variant, scored())


def _select_banding(Y, family: BandingFamily, sigma, kappa, pen_variant):
    y = np.asarray(Y, dtype=float).reshape(family.p, family.p)
    sym = 0.5 * (y + y.T)
    total = float(np.sum(y * y))
    idx = np.arange(family.p)
    dist = np.abs(idx[:, None] - idx[None, :])
    # captured energy of the symmetric part per band width
    energy = np.array([float(np.sum((sym * sym)[dist <= w])) for w in range(family.p)])

    def scored():
        for w in range(family.p):
            s = Band(w)
            yield s, (total - energy[w]) + _pen(family, s, sigma, kappa, pen_variant)

    return _finish(Y, family, sigma, kappa, pen_variant, scored())


def _select_sparsity(Y, family: SparsityFamily, sigma, kappa, pen_variant):
    y = np.asarray(Y, dtype=float)
    order = np.argsort(-np.abs(y), kind="stable")
    gains = np.concatenate([[0.0], np.cumsum((y * y)[order])])
    total = gains[-1]

    def scored():
        for size in range(family.n + 1):
            s = SparseSet(sorted_tuple(order[:size]))
            yield s, (total - gains[size]) + _pen(family, s, sigma, kappa, pen_variant)

    return _finish(Y, family, sigma, kappa, pen_variant, scored())


def _select_leveled(Y, family: LeveledSparsityFamily, sigma, kappa, pen_variant):
    # the objective decomposes over levels, so each level scans independently
    y = np.asarray(Y, dtype=float)
    chosen = []
    for j in range(family.n_levels):
        off = family.level_offsets[j]
        block = y[off:off + 2**j]
        order = np.argsort(-np.abs(block), kind="stable")
        gains = np.concatenate([[0.0], np.cumsum((block * block)[order])])
        total = gains[-1]
        best_size, best_val = 0, math.inf
        for size in range(2**j + 1):
            pen_j = 2.0 * kappa * 2.0 * (size * math.log(math.e * 2**j / size) if size else 0.0)
            if pen_variant == "map":
                pen_j += size
            val = (total - gains[size]) + sigma**2 * pen_j
            tol = TIE_RTOL * (1.0 + abs(min(best_val, val)))
            if val < best_val - tol:
                best_size, best_val = size, val
        chosen.append(sorted_tuple(order[:best_size]))
    structure = family.canonical(chosen)
    return structure, objective(Y, family, structure, sigma, kappa, pen_variant)


def _select_jump(Y, family: JumpFamily, sigma, kappa, pen_variant):
    table = segment_dp(Y, family.n - 1)

    def scored():
        for k, (sse, breaks) in enumerate(table):
            s = JumpSet(breaks)
            yield s, sse + _pen(family, s, sigma, kappa, pen_variant)

    return _finish(Y, family, sigma, kappa, pen_variant, scored())


def _select_exhaustive(Y, family, sigma, kappa, pen_variant, caps):
    try:
        return select_bruteforce(Y, family, sigma, kappa, caps, pen_variant)
    except CapExceededError as exc:
        raise ExactModeUnavailableError(
            f"exact selection for family {family.tag} exceeds caps: {exc}"
        ) from exc


# ---------------------------------------------------------------------------
# Heuristics
# ---------------------------------------------------------------------------


def _greedy_regression_path(Y, family: RegressionFamily, sigma, kappa, pen_variant):
    """Forward greedy over supports inside the small family, then the I_r elbow;
    returns every (structure, objective) the search visits."""
    current: list[int] = []
    visited = [(RegressionSupport(()),
                objective(Y, family, RegressionSupport(()), sigma, kappa, pen_variant))]
    while family.in_small_family(len(current) + 1):
        best_j, best_obj = None, visited[-1][1]
        for j in range(family.p):
            if j in current:
                continue
            cand = RegressionSupport(sorted_tuple(current + [j]))
            obj = objective(Y, family, cand, sigma, kappa, pen_variant)
            if obj < best_obj - TIE_RTOL * (1.0 + abs(obj)):
                best_j, best_obj = j, obj
        if best_j is None:
            break
        current.append(best_j)
        visited.append((RegressionSupport(sorted_tuple(current)), best_obj))
    full = family.full_rank_structure
    visited.append((full, objective(Y, family, full, sigma, kappa, pen_variant)))
    return visited


def _greedy_regression(Y, family, sigma, kappa, pen_variant):
    visited = _greedy_regression_path(Y, family, sigma, kappa, pen_variant)
    return _finish(Y, family, sigma, kappa, pen_variant, visited)


@dataclass
class AlternatingTrace:
    structure: Bicluster
    objective: float
    history: list[float]


def _bicluster_objective(mat, family, rows, cols, sigma, kappa, pen_variant):
    s = Bicluster(canonical_partition(rows), canonical_partition(cols))
    fit = family.project(s, mat.reshape(-1)).reshape(mat.shape)
    return s, sq_norm((mat - fit).reshape(-1)) + _pen(family, s, sigma, kappa, pen_variant)


def _labels_to_blocks(labels, k):
    return [tuple(np.flatnonzero(labels == b)) for b in range(k) if np.any(labels == b)]


def alternating_bicluster(Y, family: BiclusterFamily, sigma, kappa, k1, k2, rng,
                          pen_variant="main", restarts=10, max_iter=50):
    """Alternating row/column reassignment; objective never increases."""
    mat = np.asarray(Y, dtype=float).reshape(family.n1, family.n2)
    inits = []
    for _ in range(restarts):
        inits.append((rng.integers(0, k1, family.n1), rng.integers(0, k2, family.n2)))
    # one ordered initialization: contiguous groups along marginal-mean order
    r_order = np.argsort(mat.mean(axis=1), kind="stable")
    c_order = np.argsort(mat.mean(axis=0), kind="stable")
    r_init = np.empty(family.n1, dtype=int)
    c_init = np.empty(family.n2, dtype=int)
    r_init[r_order] = (np.arange(family.n1) * k1) // family.n1
    c_init[c_order] = (np.arange(family.n2) * k2) // family.n2
    inits.append((r_init, c_init))

    best = None
    for row_labels, col_labels in inits:
        row_labels = row_labels.copy()
        col_labels = col_labels.copy()
        s, obj = _bicluster_objective(mat, family,
                                      _labels_to_blocks(row_labels, k1),
                                      _labels_to_blocks(col_labels, k2),
                                      sigma, kappa, pen_variant)
        history = [obj]
        for _ in range(max_iter):
            improved = False
            for axis, labels, k in ((0, row_labels, k1), (1, col_labels, k2)):
                n_axis = family.n1 if axis == 0 else family.n2
                for i in range(n_axis):
                    old = labels[i]
                    best_b, best_obj = old, obj
                    for b in range(k):
                        if b == old:
                            continue
                        labels[i] = b
                        _, cand = _bicluster_objective(
                            mat, family,
                            _labels_to_blocks(row_labels, k1),
                            _labels_to_blocks(col_labels, k2),
                            sigma, kappa, pen_variant)
                        if cand < best_obj - TIE_RTOL * (1.0 + abs(cand)):
                            best_b, best_obj = b, cand
                    labels[i] = best_b
                    if best_b != old:
                        obj = best_obj
                        history.append(obj)
                        improved = True
            if not improved:
                break
        s, obj = _bicluster_objective(mat, family,
                                      _labels_to_blocks(row_labels, k1),
                                      _labels_to_blocks(col_labels, k2),
                                      sigma, kappa, pen_variant)
        history.append(obj)
        trace = AlternatingTrace(s, obj, history)
        if best is None or obj < best.objective - TIE_RTOL * (1.0 + abs(obj)):
            best = trace
        elif abs(obj - best.objective) <= TIE_RTOL * (1.0 + abs(obj)):
            if (family.majorant(s), family.sort_key(s)) < (
                family.majorant(best.structure), family.sort_key(best.structure)):
                best = trace
    return best


def _bicluster_search_traces(Y, family, sigma, kappa, pen_variant, rng, max_blocks):
    traces = []
    b1 = min(max_blocks, family.n1)
    b2 = min(max_blocks, family.n2)
    for k1 in range(1, b1 + 1):
        for k2 in range(1, b2 + 1):
            traces.append(alternating_bicluster(Y, family, sigma, kappa, k1, k2, rng,
                                                pen_variant=pen_variant))
    return traces


def _heuristic_bicluster(Y, family, sigma, kappa, pen_variant, rng, max_blocks):
    tracker = _ArgminTracker(family)
    for trace in _bicluster_search_traces(Y, family, sigma, kappa, pen_variant, rng,
                                          max_blocks):
        tracker.offer(trace.structure, trace.objective)
    structure, _ = tracker.result()
    return structure, objective(Y, family, structure, sigma, kappa, pen_variant)


def _heuristic_clustering(Y, family, sigma, kappa, pen_variant, max_clusters, max_free):
    candidates = _clustering_candidates(Y, family, sigma, kappa, pen_variant,
                                        max_clusters, max_free)
    return _finish(Y, family, sigma, kappa, pen_variant, candidates)


def _clustering_candidates(Y, family: ClusteringFamily, sigma, kappa, pen_variant,
                           max_clusters, max_free):
    """Sorted-order DP: clusters contiguous in value order, small free set exhaustive.

    Optimality is not claimed; the penalty's per-cluster term -log|I_k|! is
    separable, so for a fixed free set and cluster count the DP is exact over
    contiguous-in-sorted-order clusterings only.
    """
    y = np.asarray(Y, dtype=float)
    n = family.n
    if n > 20:  # the exhaustive free-set sweep is quadratic in n
        max_free = 0
    candidates = []

    def dp_clusters(values, m):
        # min over partitions of sorted `values` into m contiguous runs of
        # SSE(run) - 2*kappa*sigma^2*log(len!)  (runs of length >= 2)
        k = values.size
        if m == 0:
            return (0.0, []) if k == 0 else None
        if k < 2 * m:
            return None
        cs = np.concatenate([[0.0], np.cumsum(values)])
        cs2 = np.concatenate([[0.0], np.cumsum(values * values)])

        def run_cost(lo, hi):
            ln = hi - lo
            sse = max((cs2[hi] - cs2[lo]) - (cs[hi] - cs[lo]) ** 2 / ln, 0.0)
            return sse - 2.0 * kappa * sigma**2 * math.lgamma(ln + 1)

        best = {(0, 0): (0.0, [])}
        for j in range(1, m + 1):
            for hi in range(2 * j, k + 1):
                for lo in range(2 * (j - 1), hi - 1):
                    prev = best.get((j - 1, lo))
                    if prev is None:
                        continue
                    val = prev[0] + run_cost(lo, hi)
                    cur = best.get((j, hi))
                    if cur is None or val < cur[0]:
                        best[(j, hi)] = (val, prev[1] + [(lo, hi)])
        return best.get((m, k))

    order = np.argsort(y, kind="stable")
    for f in range(min(max_free, n) + 1):
        for free_combo in itertools.combinations(range(n), f):
            free = sorted_tuple(free_combo)
            rest = [i for i in order if i not in free]
            vals = y[rest]
            for m in range(0, max_clusters + 1):
                fit = dp_clusters(vals, m)
                if fit is None:
                    continue
                clusters = canonical_partition(
                    tuple(sorted_tuple(rest[lo:hi]) for lo, hi in fit[1]))
                s = MultiLevelPartition(free, clusters)
                candidates.append((s, objective(Y, family, s, sigma, kappa, pen_variant)))
    return candidates


def search_candidates(Y, family: Family, sigma: float, kappa: float,
                      pen_variant: str = "main", rng=None, max_blocks: int = 4):
    """Structures visited by the heuristic search paths, duplicate-free in
    canonical order; the honest candidate set for restricted posteriors over
    non-enumerable families."""
    if isinstance(family, RegressionFamily):
        found = [s for s, _ in _greedy_regression_path(Y, family, sigma, kappa,
                                                       pen_variant)]
    elif isinstance(family, BiclusterFamily):
        rng = rng if rng is not None else np.random.default_rng(0)
        found = [t.structure for t in _bicluster_search_traces(
            Y, family, sigma, kappa, pen_variant, rng, max_blocks)]
    elif isinstance(family, ClusteringFamily):
        found = [s for s, _ in _clustering_candidates(Y, family, sigma, kappa,
                                                      pen_variant, max_blocks, 2)]
    else:
        raise ExactModeUnavailableError(
            f"no heuristic search path for family {family.tag}; enumerate instead")
    return sorted(set(found), key=family.sort_key)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

EXACT_CAPS = {
    "knot": Caps(max_count=400_000),
    "regression": Caps(max_count=400_000),
    "bicluster": Caps(max_count=300_000, max_blocks=None),
    "clustering": Caps(max_count=300_000, max_blocks=3),
}


def select_penalized(Y, family: Family, sigma: float, kappa: float, mode: str = "exact",
                     pen_variant: str = "main", rng=None, caps: Caps | None = None,
                     max_blocks: int = 4):
    """Penalized selector; returns (structure, objective value).

    Exact mode is available for smoothness, banding, sparsity, leveled
    sparsity, jump and knot shape sets, regression within caps, and tiny
    bicluster/clustering instances; heuristic mode covers regression
    (forward greedy) and bicluster/clustering searches.
    """
    if sigma <= 0 or kappa <= 0:
        raise ValueError("sigma and kappa must be positive")
    if mode == "exact":
        if isinstance(family, SmoothnessFamily):
            return _select_smoothness(Y, family, sigma, kappa, pen_variant)
        if isinstance(family, BandingFamily):
            return _select_banding(Y, family, sigma, kappa, pen_variant)
        if isinstance(family, SparsityFamily):
            return _select_sparsity(Y, family, sigma, kappa, pen_variant)
        if isinstance(family, LeveledSparsityFamily):
            return _select_leveled(Y, family, sigma, kappa, pen_variant)
        if isinstance(family, JumpFamily):
            return _select_jump(Y, family, sigma, kappa, pen_variant)
        if isinstance(family, (KnotFamily, RegressionFamily, BiclusterFamily,
                               ClusteringFamily)):
            return _select_exhaustive(Y, family, sigma, kappa, pen_variant,
                                      caps or EXACT_CAPS[family.tag])
        raise ExactModeUnavailableError(f"no exact selector for family {family.tag}")
    if mode == "heuristic":
        if isinstance(family, RegressionFamily):
            return _greedy_regression(Y, family, sigma, kappa, pen_variant)
        if isinstance(family, BiclusterFamily):
            rng = rng if rng is not None else np.random.default_rng(0)
            return _heuristic_bicluster(Y, family, sigma, kappa, pen_variant, rng, max_blocks)
        if isinstance(family, ClusteringFamily):
            return _heuristic_clustering(Y, family, sigma, kappa, pen_variant,
                                         max_clusters=max_blocks, max_free=2)
        # cheap families: the exact algorithm is the heuristic
        return select_penalized(Y, family, sigma, kappa, "exact", pen_variant)
    raise ValueError(f"unknown mode {mode!r}")
