"""Minimal-energy densities via Tikhonov filtering and discrepancy matching.

Among all densities whose traces miss the target by at most epsilon (in
the weighted product norm), the one of smallest antenna L2 norm solves
the regularized normal equations

    alpha * h + K*K h = K* v

at the unique alpha where the residual norm equals epsilon.  In the
weighted SVD basis the solution is diagonal: coefficient i of h is
sigma_i * beta_i / (alpha + sigma_i^2) with beta the singular-basis
coefficients of v.  The residual norm is monotone increasing in alpha, so
the matching alpha is found by bisection on log(alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operator import ControlTrace, Density, ForwardOperator, apply, weighted_svd

# Relative tolerance on |residual - epsilon| at which the alpha search stops.
DISCREPANCY_RTOL = 1e-3

# Bisection bracket for alpha, in units of sigma_1^2, and iteration cap.
ALPHA_BRACKET_LO = 1e-14
ALPHA_BRACKET_HI = 1e4
MAX_BRACKET_ITERATIONS = 200

# Singular values below this fraction of sigma_1 count as unresolved when
# estimating the smallest residual the current discretization can reach.
RANK_CUTOFF_RTOL = 1e-12


class InfeasibleAccuracyError(ValueError):
    """The requested accuracy lies below the discretization's residual floor."""

    def __init__(self, epsilon: float, floor: float):
        self.epsilon = epsilon
        self.floor = floor
        super().__init__(
            f"requested accuracy {epsilon:.6g} is at or below the residual floor "
            f"{floor:.6g} of this discretization; refine the node counts"
        )


@dataclass(frozen=True)
class SpectrumSummary:
    sigma_max: float
    sigma_min: float
    rank_above_cutoff: int


@dataclass(frozen=True)
class SolveReport:
    """Diagnostics of one minimal-energy solve."""

    alpha_star: float
    discrepancy: float
    epsilon: float
    energy: float
    bracket_iterations: int
    spectrum: SpectrumSummary
    block_residuals: tuple[float, ...]
    epsilon_floor: float
    degenerate: bool = False


@dataclass(frozen=True)
class _FilterData:
    """Per-solve quantities in the weighted singular basis."""

    sigma: np.ndarray    # (k,)
    beta: np.ndarray     # (k,) singular-basis coefficients of the target
    perp_sq: float       # squared norm of the target outside the column span

    def discrepancy_sq(self, alpha: float) -> float:
        f = alpha / (alpha + self.sigma**2)  # (k,)
        return float(np.sum((f * self.beta) ** 2)) + self.perp_sq

    def coefficients(self, alpha: float) -> np.ndarray:
        return self.sigma * self.beta / (alpha + self.sigma**2)


def _filter_data(K: ForwardOperator, v: ControlTrace) -> _FilterData:
    svd = weighted_svd(K)
    v_tilde = svd.sqrt_row_w * v.concatenated  # (m,)
    beta = svd.u.T @ v_tilde  # (k,)
    perp_sq = max(float(v_tilde @ v_tilde - beta @ beta), 0.0)
    return _FilterData(sigma=svd.sigma, beta=beta, perp_sq=perp_sq)


def _density_from_coefficients(K: ForwardOperator, coeff: np.ndarray) -> Density:
    svd = weighted_svd(K)
    values = (svd.vt.T @ coeff) / svd.sqrt_col_w  # (n,)
    return Density(rule=K.antenna_rule, values=values)


def tikhonov_solve(K: ForwardOperator, v: ControlTrace, alpha: float) -> Density:
    """Unique solution of alpha*h + K*K h = K*v, via the weighted SVD."""
    if not alpha > 0:
        raise ValueError(f"regularization strength must be positive, got {alpha}")
    data = _filter_data(K, v)
    return _density_from_coefficients(K, data.coefficients(alpha))


def discrepancy(K: ForwardOperator, v: ControlTrace, alpha: float) -> float:
    """Residual norm ||K h_alpha - v|| in the weighted product norm.

    Nondecreasing in alpha whenever v has a component in the range closure.
    """
    if not alpha > 0:
        raise ValueError(f"regularization strength must be positive, got {alpha}")
    return math.sqrt(_filter_data(K, v).discrepancy_sq(alpha))


def residual_floor(K: ForwardOperator, v: ControlTrace) -> float:
    """Smallest residual the discretization can certify.

    Evaluated at the bottom of the alpha bracket with singular values
    below the rank cutoff treated as zero: the continuous operator has
    dense range, but a fixed Nystrom grid does not, and requests below
    this floor must be reported as infeasible rather than silently
    under-delivered.
    """
    data = _filter_data(K, v)
    sigma_1 = float(data.sigma[0]) if data.sigma.size else 0.0
    if sigma_1 == 0.0:
        return math.sqrt(data.perp_sq + float(data.beta @ data.beta))
    alpha = ALPHA_BRACKET_LO * sigma_1**2
    keep = data.sigma >= RANK_CUTOFF_RTOL * sigma_1
    f = alpha / (alpha + data.sigma[keep] ** 2)
    dropped_sq = float(np.sum(data.beta[~keep] ** 2))
    return math.sqrt(float(np.sum((f * data.beta[keep]) ** 2)) + dropped_sq + data.perp_sq)


def _spectrum_summary(K: ForwardOperator) -> SpectrumSummary:
    sigma = weighted_svd(K).sigma
    return SpectrumSummary(
        sigma_max=float(sigma[0]),
        sigma_min=float(sigma[-1]),
        rank_above_cutoff=int(np.sum(sigma > RANK_CUTOFF_RTOL * sigma[0])),
    )


def _block_residuals(K: ForwardOperator, h: Density, v: ControlTrace) -> tuple[float, ...]:
    res = apply(K, h) - v
    return tuple(rule.l2_norm(b) for b, rule in zip(res.blocks, res.rules))


def solve_min_energy(
    K: ForwardOperator, v: ControlTrace, epsilon: float
) -> tuple[Density, SolveReport]:
    """Minimal-energy density with residual norm equal to epsilon.

    Bisects log10(alpha) over [1e-14, 1e4] * sigma_1^2 until the residual
    is within 1e-3 relative of epsilon; the bracket is widened upward in
    the rare case the initial top is still below target.  When epsilon is
    at or above ||v|| the zero density already satisfies the constraint
    and is returned with the ``degenerate`` flag; when epsilon is at or
    below the discretization's residual floor the request is infeasible
    at this resolution and an error advises refinement.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    v_norm = v.norm()
    if v_norm == 0.0:
        raise ValueError("target trace is identically zero; nothing to solve")

    data = _filter_data(K, v)
    sigma_1 = float(data.sigma[0])
    spectrum = _spectrum_summary(K)

    if epsilon >= v_norm:
        h = Density(rule=K.antenna_rule, values=np.zeros(K.antenna_rule.node_count))
        report = SolveReport(
            alpha_star=math.inf,
            discrepancy=v_norm,
            epsilon=epsilon,
            energy=0.0,
            bracket_iterations=0,
            spectrum=spectrum,
            block_residuals=_block_residuals(K, h, v),
            epsilon_floor=residual_floor(K, v),
            degenerate=True,
        )
        return h, report

    floor = residual_floor(K, v)
    if epsilon <= floor:
        raise InfeasibleAccuracyError(epsilon, floor)

    lo = math.log10(ALPHA_BRACKET_LO * sigma_1**2)
    hi = math.log10(ALPHA_BRACKET_HI * sigma_1**2)
    target_lo = epsilon * (1.0 - DISCREPANCY_RTOL)
    target_hi = epsilon * (1.0 + DISCREPANCY_RTOL)

    # Residual at the top of the bracket approaches ||v|| from below; widen
    # if epsilon sits inside that last sliver.
    while math.sqrt(data.discrepancy_sq(10.0**hi)) < target_lo and hi < 40:
        hi += 2.0

    iterations = 0
    log_alpha = 0.5 * (lo + hi)
    disc = math.sqrt(data.discrepancy_sq(10.0**log_alpha))
    while not (target_lo <= disc <= target_hi) and iterations < MAX_BRACKET_ITERATIONS:
        if disc > epsilon:
            hi = log_alpha
        else:
            lo = log_alpha
        log_alpha = 0.5 * (lo + hi)
        disc = math.sqrt(data.discrepancy_sq(10.0**log_alpha))
        iterations += 1

    alpha = 10.0**log_alpha
    h = _density_from_coefficients(K, data.coefficients(alpha))
    report = SolveReport(
        alpha_star=alpha,
        discrepancy=disc,
        epsilon=epsilon,
        energy=h.norm(),
        bracket_iterations=iterations,
        spectrum=spectrum,
        block_residuals=_block_residuals(K, h, v),
        epsilon_floor=floor,
    )
    return h, report


def sweep_alpha(
    K: ForwardOperator, v: ControlTrace, alphas
) -> list[tuple[float, float, float]]:
    """Rows (alpha, residual norm, energy), sorted by alpha ascending."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alpha sweep needs at least one value")
    if any(a <= 0 for a in alphas):
        raise ValueError("alpha sweep values must be positive")
    data = _filter_data(K, v)
    rows = []
    for a in sorted(alphas):
        coeff = data.coefficients(a)
        rows.append((a, math.sqrt(data.discrepancy_sq(a)), float(np.linalg.norm(coeff))))
    return rows
