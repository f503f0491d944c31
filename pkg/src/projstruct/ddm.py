"""Data-dependent measures over structures and their conditional laws.

The structure measure puts weight proportional to
exp{-kappa*rho(I)} * exp{-||Y - P_I Y||^2 / (2 sigma^2)} on each structure;
normalization happens in the log domain.  For the sparsity family the
normalizer over all 2^n subsets factors through elementary symmetric
polynomials of exp{Y_i^2 / (2 sigma^2)}, so exactness does not require
enumeration.  Conditional laws produce draws supported on L_I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ExactModeUnavailableError
from .linalg import sq_norm
from .selection import TIE_RTOL, penalty
from .structures import Caps, Family, SparseSet, SparsityFamily

# Gaussian conditional law: prior-to-posterior shrinkage with kappa = e - 1
# gives conditional covariance (kappa/(kappa+1)) sigma^2 P_I.
CONDITIONAL_KAPPA = math.e - 1.0
CONDITIONAL_VAR_FACTOR = CONDITIONAL_KAPPA / (CONDITIONAL_KAPPA + 1.0)


@dataclass
class DdmConfig:
    """Penalty scale, noise intensity, and the conditional resampling law."""

    kappa: float
    sigma: float
    conditional_law: str = "gaussian"  # "gaussian" | "resample"
    z_sampler: object = None  # rng, size -> vector; required for "resample"
    pen_variant: str = "main"  # "main" = 2*kappa*rho; "map" adds dim(L_I)

    def __post_init__(self):
        if self.kappa <= 0 or self.sigma < 0:
            raise ValueError("kappa must be positive and sigma nonnegative")
        if self.conditional_law not in ("gaussian", "resample"):
            raise ValueError(f"unknown conditional law {self.conditional_law!r}")
        if self.conditional_law == "resample" and self.z_sampler is None:
            raise ValueError("resample law needs a z_sampler")


@dataclass
class DdmPosterior:
    family: Family
    candidates: list
    log_weights: np.ndarray  # normalized: logsumexp == 0 when candidates cover the family
    method: str  # enumeration | symmetric-polynomial | restricted-candidate-set
    log_normalizer: float = 0.0
    majorants: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.majorants is None:
            self.majorants = np.array([self.family.majorant(s) for s in self.candidates])

    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def export(self) -> list[dict]:
        """JSON-ready [{structure, log_weight}], sorted by weight descending."""
        order = sorted(range(len(self.candidates)),
                       key=lambda i: (-self.log_weights[i], self.family.sort_key(self.candidates[i])))
        return [
            {"structure": self.family.structure_to_json(self.candidates[i]),
             "log_weight": float(self.log_weights[i])}
            for i in order
        ]


def log_unnormalized_weight(Y, family: Family, structure, cfg: DdmConfig) -> float:
    resid = sq_norm(np.asarray(Y, dtype=float) - family.project(structure, Y))
    return -0.5 * (resid / cfg.sigma**2 + penalty(family, structure, cfg.kappa, cfg.pen_variant))


def logsumexp(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    hi = values.max()
    if not np.isfinite(hi):
        return float(hi)
    return float(hi + math.log(np.sum(np.exp(values - hi))))


# ---------------------------------------------------------------------------
# Elementary symmetric polynomials, log domain
# ---------------------------------------------------------------------------


def log_elementary_symmetric(log_x: np.ndarray) -> np.ndarray:
    """log e_k(x) for k = 0..n given log x_i, via the stable O(n^2) recurrence.

    e_k after absorbing x_j is e_k + x_j * e_{k-1}; in the log domain each
    step is one vectorized logaddexp, so no overflow for any magnitudes.
    """
    log_x = np.asarray(log_x, dtype=float)
    n = log_x.size
    out = np.full(n + 1, -np.inf)
    out[0] = 0.0
    for j in range(n):
        out[1:j + 2] = np.logaddexp(out[1:j + 2], log_x[j] + out[:j + 1])
    return out


def sparsity_size_log_weights(Y, family: SparsityFamily, cfg: DdmConfig) -> np.ndarray:
    """log of the total unnormalized mass per support size, for all sizes."""
    y = np.asarray(Y, dtype=float)
    log_x = 0.5 * (y * y) / cfg.sigma**2
    log_esp = log_elementary_symmetric(log_x)
    base = -0.5 * sq_norm(y) / cfg.sigma**2
    sizes = np.arange(family.n + 1)
    pen = np.array([penalty(family, SparseSet(tuple(range(s))), cfg.kappa, cfg.pen_variant)
                    for s in sizes])
    return base - 0.5 * pen + log_esp


def sparsity_log_normalizer(Y, family: SparsityFamily, cfg: DdmConfig) -> float:
    """Exact log normalizer over all 2^n subsets, without enumeration."""
    return logsumexp(sparsity_size_log_weights(Y, family, cfg))


def sparsity_inclusion_probabilities(Y, family: SparsityFamily, cfg: DdmConfig) -> np.ndarray:
    """Exact marginal P(i in I | Y) for every coordinate, via leave-one-out
    symmetric polynomials."""
    y = np.asarray(Y, dtype=float)
    log_x = 0.5 * (y * y) / cfg.sigma**2
    log_z = sparsity_log_normalizer(Y, family, cfg)
    base = -0.5 * sq_norm(y) / cfg.sigma**2
    sizes = np.arange(family.n + 1)
    pen = np.array([penalty(family, SparseSet(tuple(range(s))), cfg.kappa, cfg.pen_variant)
                    for s in sizes])
    probs = np.empty(family.n)
    for i in range(family.n):
        loo = np.delete(log_x, i)
        log_esp_loo = log_elementary_symmetric(loo)  # sizes 0..n-1
        # mass of subsets containing i, by size s = 1..n
        terms = base - 0.5 * pen[1:] + log_x[i] + log_esp_loo
        probs[i] = math.exp(logsumexp(terms) - log_z)
    return np.clip(probs, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Posterior construction
# ---------------------------------------------------------------------------


def structure_posterior(Y, family: Family, cfg: DdmConfig, candidates=None,
                        method: str = "auto", caps: Caps | None = None) -> DdmPosterior:
    """Normalized structure measure over a candidate set.

    method "enumeration" normalizes over the family's full (capped)
    enumeration; "symmetric-polynomial" (sparsity only) uses the exact 2^n
    normalizer; "restricted-candidate-set" normalizes over the structures
    actually supplied.  "auto" picks enumeration when candidates are absent
    and the restricted mode otherwise.
    """
    if cfg.sigma <= 0:
        raise ValueError("posterior construction needs sigma > 0")
    if method == "auto":
        method = "enumeration" if candidates is None else "restricted-candidate-set"
    if candidates is None:
        if method == "restricted-candidate-set":
            raise ValueError("restricted mode needs an explicit candidate set")
        try:
            candidates = list(family.enumerate_structures(caps))
        except NotImplementedError as exc:
            raise ExactModeUnavailableError(
                f"family {family.tag} is not enumerable; pass explicit candidates") from exc
    else:
        candidates = list(candidates)
    if not candidates:
        raise ValueError("candidate set is empty")

    raw = np.array([log_unnormalized_weight(Y, family, s, cfg) for s in candidates])
    if method in ("enumeration", "restricted-candidate-set"):
        log_z = logsumexp(raw)
    elif method == "symmetric-polynomial":
        if not isinstance(family, SparsityFamily):
            raise ExactModeUnavailableError(
                "symmetric-polynomial normalization applies to the sparsity family only")
        log_z = sparsity_log_normalizer(Y, family, cfg)
    else:
        raise ValueError(f"unknown method {method!r}")
    return DdmPosterior(family, candidates, raw - log_z, method, log_normalizer=log_z)


def select_map(post: DdmPosterior):
    """Highest-weight structure; ties go to the smallest majorant, then the
    canonical enumeration order."""
    best_i = 0
    for i in range(1, len(post.candidates)):
        tol = TIE_RTOL * (1.0 + abs(post.log_weights[best_i]))
        if post.log_weights[i] > post.log_weights[best_i] + tol:
            best_i = i
        elif post.log_weights[i] >= post.log_weights[best_i] - tol:
            key_i = (post.majorants[i], post.family.sort_key(post.candidates[i]))
            key_b = (post.majorants[best_i], post.family.sort_key(post.candidates[best_i]))
            if key_i < key_b:
                best_i = i
    return post.candidates[best_i]


def ma_mean(Y, family: Family, post: DdmPosterior) -> np.ndarray:
    """Model-averaging mean: the weight-mixed projection of Y."""
    weights = post.weights()
    out = np.zeros(family.ambient_dim)
    for w, s in zip(weights, post.candidates):
        if w == 0.0:
            continue
        out += w * family.project(s, Y)
    return out


def ms_mean(Y, family: Family, I_hat) -> np.ndarray:
    """Model-selection mean: the projection of Y onto the selected subspace."""
    return family.project(I_hat, Y)


def sparsity_ma_mean_exact(Y, family: SparsityFamily, cfg: DdmConfig) -> np.ndarray:
    """Exact model-averaging mean over all 2^n supports: Y_i * P(i in I|Y)."""
    return np.asarray(Y, dtype=float) * sparsity_inclusion_probabilities(Y, family, cfg)


def sample_conditional(Y, family: Family, structure, cfg: DdmConfig, rng, count: int):
    """Draws from the conditional law on L_I centered at P_I Y.

    Gaussian: N(P_I Y, (kappa/(kappa+1)) sigma^2 P_I) with kappa = e-1.
    Resample: P_I Y + sigma P_I Z with caller-supplied Z draws.
    """
    if count < 1:
        raise ValueError("count >= 1 required")
    center = family.project(structure, Y)
    if cfg.conditional_law == "gaussian":
        scale = cfg.sigma * math.sqrt(CONDITIONAL_VAR_FACTOR)
        noise = rng.standard_normal((count, family.ambient_dim))
    else:
        scale = cfg.sigma
        noise = np.stack([np.asarray(cfg.z_sampler(rng, family.ambient_dim), dtype=float)
                          for _ in range(count)])
    projected = family.project_many(structure, noise)
    return [center + scale * z for z in projected]
