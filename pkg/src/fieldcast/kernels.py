"""Point kernels of potential theory and Poisson-formula Dirichlet solvers.

Free-space fundamental solution of the Laplacian

    Phi(x, y) = (1/2pi) ln(1/|x-y|)   in 2D
    Phi(x, y) = (1/4pi) / |x-y|       in 3D

its normal derivatives in the source and observation variables (the
double-layer and adjoint kernels), and Poisson-kernel quadrature for the
interior/exterior Dirichlet problem on a ball.  The Poisson solvers are
used as independent oracles: they reproduce harmonic data without going
through any layer-potential machinery.

All kernels broadcast over leading axes; points are arrays whose last
axis has length ``dim``.
"""

from __future__ import annotations

import numpy as np

from .geometry import QuadratureRule

# Surface measure of the unit sphere: the normalization that makes the
# mean-value property and the Gauss identity come out exact.
UNIT_SPHERE_MEASURE = {2: 2.0 * np.pi, 3: 4.0 * np.pi}

# Evaluations closer than this (relative) are treated as coincident-point
# bugs, never regularized: every boundary pair in scope is well separated.
COINCIDENT_RTOL = 1e-12


def _diff_and_dist(x, y, dim: int):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != dim or y.shape[-1] != dim:
        raise ValueError(
            f"points must have trailing dimension {dim}, got {x.shape} and {y.shape}"
        )
    diff = x - y  # (..., dim)
    dist = np.linalg.norm(diff, axis=-1)  # (...)
    scale = np.maximum(1.0, np.linalg.norm(np.broadcast_to(x, diff.shape), axis=-1))
    if np.any(dist < COINCIDENT_RTOL * scale):
        raise ValueError("coincident or near-coincident evaluation points")
    return diff, dist


def phi(x, y, dim: int) -> np.ndarray | float:
    """Fundamental solution Phi(x, y) of the Laplacian.

    (1/2pi) ln(1/|x-y|) in 2D, (1/4pi)/|x-y| in 3D.
    """
    _, dist = _diff_and_dist(x, y, dim)
    if dim == 2:
        out = -np.log(dist) / (2.0 * np.pi)
    elif dim == 3:
        out = 1.0 / (4.0 * np.pi * dist)
    else:
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    return out if out.ndim else float(out)


def dlp_kernel(x, y, nu_y, dim: int) -> np.ndarray | float:
    """Normal derivative of Phi in the source point: dPhi(x,y)/dnu_y.

    Differentiating the fundamental solution gives

        dPhi/dnu_y = (x - y).nu_y / (omega_d |x - y|^d)

    with omega_2 = 2pi and omega_3 = 4pi the unit-sphere surface measure.
    Integrated against a density over a closed boundary this is the
    double-layer field; for the unit density it evaluates to -1 inside and
    0 outside the boundary (Gauss identity), which pins the constant.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    diff, dist = _diff_and_dist(x, y, dim)
    nu_y = np.asarray(nu_y, dtype=float)
    out = np.sum(diff * nu_y, axis=-1) / (UNIT_SPHERE_MEASURE[dim] * dist**dim)
    return out if out.ndim else float(out)


def adjoint_kernel(x, nu_x, y, dim: int) -> np.ndarray | float:
    """Normal derivative of Phi in the observation point: dPhi(x,y)/dnu_x.

    Equal to (y - x).nu_x / (omega_d |x - y|^d); by the symmetry of Phi
    this is dlp_kernel with the roles of the two points swapped.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    diff, dist = _diff_and_dist(x, y, dim)
    nu_x = np.asarray(nu_x, dtype=float)
    out = np.sum(-diff * nu_x, axis=-1) / (UNIT_SPHERE_MEASURE[dim] * dist**dim)
    return out if out.ndim else float(out)


def poisson_solve(rule: QuadratureRule, data: np.ndarray, x, side: str) -> np.ndarray | float:
    """Dirichlet solution on either side of a sphere via Poisson-kernel quadrature.

    For boundary data f on the sphere of radius R* centred at y0,

        interior:  u(x) = (R*^2 - |x-y0|^2) / (omega_d R*) * sum_j w_j f_j / |x - y_j|^d
        exterior:  u(x) = (|x-y0|^2 - R*^2) / (omega_d R*) * sum_j w_j f_j / |x - y_j|^d

    The exterior solution is the one bounded at infinity in 2D and
    decaying in 3D.  The quadrature is spectrally accurate for smooth data
    when the evaluation point keeps a healthy distance from the sphere
    (radius ratio <= ~0.5 interior, >= ~2 exterior at default node counts).

    Parameters
    ----------
    rule : QuadratureRule
        Rule over the data sphere.
    data : ndarray, shape (n,)
        Boundary values at the rule's nodes.
    x : array-like, shape (dim,) or (p, dim)
        Evaluation point(s), strictly off the sphere and on the stated side.
    side : "interior" or "exterior"
    """
    if side not in ("interior", "exterior"):
        raise ValueError(f"side must be 'interior' or 'exterior', got {side!r}")
    dim = rule.boundary.dim
    data = np.asarray(data, dtype=float)
    if data.shape != (rule.node_count,):
        raise ValueError(
            f"data shape {data.shape} does not match {rule.node_count} nodes"
        )

    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    pts = np.atleast_2d(x)  # (p, dim)
    if pts.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim}, got {x.shape}")

    r_star = rule.boundary.radius
    rho = np.linalg.norm(pts - rule.boundary.center, axis=-1)  # (p,)
    on_tol = 1e-12 * r_star
    if np.any(np.abs(rho - r_star) <= on_tol):
        raise ValueError("evaluation point lies on the data sphere")
    if side == "interior" and np.any(rho >= r_star):
        raise ValueError("interior evaluation requested at an exterior point")
    if side == "exterior" and np.any(rho <= r_star):
        raise ValueError("exterior evaluation requested at an interior point")

    diff = pts[:, None, :] - rule.nodes[None, :, :]  # (p, n, dim)
    dist = np.linalg.norm(diff, axis=-1)  # (p, n)
    kernel = 1.0 / dist**dim
    front = (r_star**2 - rho**2) / (UNIT_SPHERE_MEASURE[dim] * r_star)  # (p,)
    if side == "exterior":
        front = -front
    out = front * (kernel @ (rule.weights * data))  # (p,)
    return float(out[0]) if scalar else out
