"""Confidence balls: the EBR construction and the N^{1/4}-margin construction.

The EBR ball inflates the data-driven radius r_hat^2 = sigma^2 (1 + rho(I_hat))
by the structural parameter t; its coverage holds over the excessive-bias
class only.  The quarter ball de-biases ||Y' - theta_hat||^2 with a V
statistic and pays an explicit sigma^2 sqrt(N) margin in exchange for
coverage over the whole space.  Y' must be independent of the sample that
produced theta_hat; Gaussian duplication manufactures such a pair at the cost
of doubling the variance, while the Bernoulli V statistic requires a genuine
second sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .linalg import as_vector, sq_norm
from .oracle import FrameworkConstants
from .structures import Family


@dataclass(frozen=True)
class ConfidenceBall:
    center: np.ndarray
    radius_sq: float
    kind: str  # "ebr" | "quarter"
    params: dict
    provenance: dict

    def to_json(self) -> dict:
        return {
            "center": [float(v) for v in self.center],
            "radius_sq": self.radius_sq,
            "kind": self.kind,
            "params": self.params,
        }


def ebr_radius_sq(rho_hat: float, sigma: float, constants: FrameworkConstants,
                  t: float, M: float) -> float:
    r_hat_sq = sigma**2 * (1.0 + rho_hat)
    return (t + 1.0) * constants.M2 * r_hat_sq + (t + 2.0) * M * sigma**2


def ebr_ball(Y, family: Family, sigma: float, constants: FrameworkConstants,
             I_hat, theta_hat, t: float, M: float) -> ConfidenceBall:
    """Ball around theta_hat with squared radius (t+1) M2 r_hat^2 + (t+2) M sigma^2."""
    if M < 0 or t < 0:
        raise ValueError("t and M must be nonnegative")
    theta_hat = as_vector(theta_hat)
    rho_hat = family.majorant(I_hat)
    radius_sq = ebr_radius_sq(rho_hat, sigma, constants, t, M)
    return ConfidenceBall(
        theta_hat, radius_sq, "ebr",
        {"t": t, "M": M, "rho_hat": rho_hat, "sigma": sigma},
        constants.snapshot(),
    )


def quarter_ball(Y_prime, theta_hat, sigma: float, M: float, M1: float,
                 v_stat: float, provenance: dict | None = None) -> ConfidenceBall:
    """Ball with squared radius (||Y' - theta_hat||^2 - sigma^2 V + 2 sigma^2 G_M sqrt(N))_+
    where G_M = sqrt(M (M + M1)).

    Caller contract: Y' is independent of the sample behind theta_hat.
    """
    if M < 0 or M1 < 0:
        raise ValueError("M and M1 must be nonnegative")
    Y_prime = as_vector(Y_prime)
    theta_hat = as_vector(theta_hat)
    if Y_prime.size != theta_hat.size:
        raise DimensionMismatchError("Y' and theta_hat must have equal length")
    n = Y_prime.size
    g_m = math.sqrt(M * (M + M1))
    stat = sq_norm(Y_prime - theta_hat) - sigma**2 * v_stat
    radius_sq = max(stat + 2.0 * sigma**2 * g_m * math.sqrt(n), 0.0)
    return ConfidenceBall(
        theta_hat, radius_sq, "quarter",
        {"M": M, "M1": M1, "G_M": g_m, "v_stat": v_stat, "sigma": sigma},
        provenance or {},
    )


def duplicate_gaussian(Y, sigma: float, rng):
    """Randomized duplication (Y + sigma Z, Y - sigma Z) for Gaussian noise.

    The second sample is computed as 2Y - Y' so the pair sums to 2Y; each
    copy carries twice the original noise variance.
    """
    Y = as_vector(Y)
    z = rng.standard_normal(Y.size)
    y_prime = Y + sigma * z
    y_second = 2.0 * Y - y_prime
    return y_prime, y_second


def v_statistic(kind: str, Y_prime, Y=None) -> float:
    """V statistic used to de-bias ||xi'||^2: N for unit-variance noise,
    sum Y'_i - sum Y'_i Y_i in the Bernoulli model."""
    Y_prime = as_vector(Y_prime)
    if kind == "unit-variance":
        return float(Y_prime.size)
    if kind == "bernoulli":
        if Y is None:
            raise ValueError("the Bernoulli V statistic needs both samples")
        Y = as_vector(Y)
        if Y.size != Y_prime.size:
            raise DimensionMismatchError("samples must have equal length")
        return float(np.sum(Y_prime) - np.sum(Y_prime * Y))
    raise ValueError(f"unknown V statistic kind {kind!r}")


def contains(ball: ConfidenceBall, theta) -> bool:
    """Closed-ball membership."""
    theta = as_vector(theta)
    if theta.size != ball.center.size:
        raise DimensionMismatchError("theta has the wrong length for this ball")
    return sq_norm(theta - ball.center) <= ball.radius_sq


def highly_structured(rate_sq: float, sigma: float, ambient_dim: int, c: float = 1.0) -> bool:
    """Flag for r^2(theta) <= c sigma^2 sqrt(N), where the quarter ball's
    sqrt(N) margin dominates the oracle rate."""
    return rate_sq <= c * sigma**2 * math.sqrt(ambient_dim)
