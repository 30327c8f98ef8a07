"""Quadratic comparison function and geometric rate-bound certificates.

The weighted variance ``phi(x, nu) = sum_i nu_i x_i^2 - (nu'x)^2`` decreases
exactly along a weighted-averaging step: for any stochastic ``A``,

    phi(Ax, nu) = phi(x, A'nu) - (1/2) sum_i nu_i sum_{j,l} A_ij A_il (x_j - x_l)^2.

With an adjoint sequence in the second slot the per-step loss ``D(t)`` is
bounded below by ``delta * beta^2 / (4 p*)`` times the squared spread, which
yields the per-step contraction quotient ``q = 1 - delta*beta^2/(4 p*)``
certified here, together with its operator-norm consequence for the matrix
products and the doubly-stochastic baseline factor ``1 - beta/(2 m^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adjoint import AbsoluteProbabilitySequence
from .certificates import NORM_SLACK, VALUE_SLACK, CertificateRecord, bounded
from .weights import MatrixSequence


class NegativeWeight(ValueError):
    pass


class VacuousBound(ValueError):
    """The claimed contraction quotient is not below one."""


@dataclass(frozen=True)
class ComparisonValue:
    """Value of the weighted variance and the centering scalar ``nu'x``."""

    value: float
    center: float


def weighted_variance(x: np.ndarray, nu: np.ndarray) -> ComparisonValue:
    """Moment form ``sum nu_i x_i^2 - (nu'x)^2`` with nonnegative weights."""
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if (nu < 0).any():
        raise NegativeWeight("weights must be nonnegative")
    center = float(nu @ x)
    return ComparisonValue(value=float(nu @ (x * x) - center * center), center=center)


def weighted_variance_direct(x: np.ndarray, nu: np.ndarray) -> float:
    """Centered form ``sum nu_i (x_i - nu'x)^2``; equals the moment form for stochastic nu."""
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float)
    center = nu @ x
    return float(nu @ (x - center) ** 2)


def pairwise_decrement_sum(a: np.ndarray, x: np.ndarray, nu: np.ndarray) -> float:
    """``(1/2) sum_i nu_i sum_{j,l} A_ij A_il (x_j - x_l)^2``.

    Evaluated as ``(1/2) sum_i nu_i (A_i' Delta A_i)`` on the matrix of
    squared differences, which keeps every term nonnegative (no
    cancellation, unlike the expanded moment form).
    """
    x = np.asarray(x, dtype=float)
    delta = (x[:, None] - x[None, :]) ** 2
    return 0.5 * float(nu @ ((a @ delta) * a).sum(axis=1))


def averaging_identity_residual(a: np.ndarray, x: np.ndarray, nu: np.ndarray) -> float:
    """Signed defect of the exact decrease identity; zero in exact arithmetic."""
    lhs = weighted_variance(a @ np.asarray(x, dtype=float), nu).value
    rhs = weighted_variance(x, a.T @ np.asarray(nu, dtype=float)).value
    return lhs - (rhs - pairwise_decrement_sum(a, x, nu))


@dataclass(frozen=True)
class DecrementRecord:
    """One step's exact loss, its squared spread, and the certified lower bound."""

    t: int | None
    value: float
    spread_sq: float
    lower_bound: float
    passed: bool


def step_decrement(a: np.ndarray, x: np.ndarray, pi_next: np.ndarray,
                   delta: float, beta: float, p_star: int,
                   t: int | None = None) -> DecrementRecord:
    """Evaluate ``D(t)`` and check it against ``delta*beta^2/(4 p*) * spread^2``."""
    pi_next = np.asarray(pi_next, dtype=float)
    if (pi_next < 0).any() or abs(pi_next.sum() - 1.0) > 1e-12:
        raise ValueError("pi_next must be stochastic")
    x = np.asarray(x, dtype=float)
    value = pairwise_decrement_sum(a, x, pi_next)
    spread_sq = float((x.max() - x.min()) ** 2)
    lower = delta * beta * beta / (4.0 * p_star) * spread_sq
    passed = value >= -1e-12 and lower <= value * VALUE_SLACK + 1e-10 * max(1.0, spread_sq)
    return DecrementRecord(t=t, value=value, spread_sq=spread_sq,
                           lower_bound=lower, passed=passed)


def spread_bound(x: np.ndarray, nu: np.ndarray) -> tuple[float, float]:
    """Return ``(max_{j,l}(x_j-x_l)^2, sum nu_i (x_i - nu'x)^2)`` for stochastic nu.

    The weighted variance never exceeds the squared spread; the pair is
    checked here and a violation (impossible in exact arithmetic) raises.
    """
    nu = np.asarray(nu, dtype=float)
    if abs(nu.sum() - 1.0) > 1e-12 or (nu < 0).any():
        raise ValueError("nu must be stochastic")
    x = np.asarray(x, dtype=float)
    spread_sq = float((x.max() - x.min()) ** 2)
    wvar = weighted_variance_direct(x, nu)
    if wvar > spread_sq * VALUE_SLACK + 1e-12:
        raise ArithmeticError("weighted variance exceeded the squared spread")
    return spread_sq, wvar


def rate_quotient(delta: float, beta: float, p_star: int) -> float:
    """Per-step contraction factor ``1 - delta*beta^2/(4 p*)``."""
    drop = delta * beta * beta / (4.0 * p_star)
    if drop >= 1.0:
        raise VacuousBound(f"claimed per-step drop {drop} >= 1; check delta/beta/p*")
    return 1.0 - drop


@dataclass
class RateBound:
    """Contraction verdicts for a family of ``(t, k)`` pairs at quotient ``q_step``."""

    q_step: float
    records: list[CertificateRecord]

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.records)


def noise_floor(states: np.ndarray) -> float:
    """Absolute float64 allowance for squared-deviation sums over a run.

    States are representable only to ``eps * (1 + |x|)``, so any weighted
    sum of squared deviations computed from them carries an irreducible
    error of about ``m * (eps * (1 + max|x|))^2``; envelopes decaying below
    that level cannot be witnessed in double precision.
    """
    m = states.shape[1]
    scale = 1.0 + float(np.abs(states).max())
    return m * (np.finfo(float).eps * scale) ** 2


def contraction_certificate(states: np.ndarray, adjoint: AbsoluteProbabilitySequence,
                            beta: float, p_star: int, k: int) -> RateBound:
    """Check the scalar weighted variance against its geometric envelope from time ``k``.

    ``states`` has shape ``(horizon+1, m)``.  The center is the conserved
    value ``pi(0)'x(0)``; for each ``t >= k`` the check is

        sum_i pi_i(t) (x_i(t) - c)^2  <=  q^(t-k) * sum_j pi_j(k) (x_j(k) - c)^2.
    """
    states = np.asarray(states, dtype=float)
    pi = adjoint.vectors
    q = rate_quotient(adjoint.delta, beta, p_star)
    c = float(pi[0] @ states[0])
    vals = np.einsum("tm,tm->t", pi, (states - c) ** 2)
    floor = noise_floor(states)
    records = [bounded("rate-contraction", t, k, vals[t], q ** (t - k) * vals[k],
                       floor=floor)
               for t in range(k, states.shape[0])]
    return RateBound(q_step=q, records=records)


def vector_contraction_certificate(states: np.ndarray, adjoint: AbsoluteProbabilitySequence,
                                   beta: float, p_star: int, k: int) -> RateBound:
    """Coordinate-summed contraction check for vector-valued runs.

    ``states`` has shape ``(horizon+1, m, n)``; the center is the
    ``pi(0)``-weighted mean of the initial vectors and the envelope is the
    same quotient as the scalar case.  With ``n = 1`` this reduces exactly
    to :func:`contraction_certificate`.
    """
    states = np.asarray(states, dtype=float)
    pi = adjoint.vectors
    q = rate_quotient(adjoint.delta, beta, p_star)
    c = pi[0] @ states[0]
    vals = np.einsum("tm,tm->t", pi, ((states - c) ** 2).sum(axis=2))
    floor = noise_floor(states)
    records = [bounded("vector-rate-contraction", t, k, vals[t], q ** (t - k) * vals[k],
                       floor=floor)
               for t in range(k, states.shape[0])]
    return RateBound(q_step=q, records=records)


def doubly_stochastic_rate_factor(beta: float, m: int, steps: int) -> float:
    """Baseline per-product factor ``(1 - beta/(2 m^2))^steps`` for doubly stochastic chains."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    if m < 2:
        raise ValueError("m must be >= 2")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    return (1.0 - beta / (2.0 * m * m)) ** steps


def operator_norm_sq(mat: np.ndarray) -> float:
    """Squared induced 2-norm (largest singular value squared)."""
    return float(np.linalg.norm(mat, 2) ** 2)


def product_convergence_records(seq: MatrixSequence, adjoint: AbsoluteProbabilitySequence,
                                beta: float, p_star: int, k: int,
                                t_max: int) -> list[CertificateRecord]:
    """Operator-norm envelope for the backward products ``A(t:k)``.

    For each ``t`` in ``k..t_max`` checks

        || A(t:k) - 1 pi(k)' ||^2  <=  (1/delta) q^(t-k) || I - 1 pi(k)' ||^2

    with the products accumulated incrementally.
    """
    m = seq.m
    pi_k = adjoint.vector_at(k)
    q = rate_quotient(adjoint.delta, beta, p_star)
    rank_one = np.outer(np.ones(m), pi_k)
    base = operator_norm_sq(np.eye(m) - rank_one) / adjoint.delta
    records = []
    prod = None
    for t in range(k, t_max + 1):
        prod = seq.matrix_at(k) if prod is None else seq.matrix_at(t) @ prod
        lhs = operator_norm_sq(prod - rank_one)
        records.append(bounded("product-convergence", t, k, lhs,
                               q ** (t - k) * base, slack=NORM_SLACK))
    return records
