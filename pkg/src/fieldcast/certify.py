"""Sup-norm error certificates from boundary residual norms.

A harmonic function on a ball is its Poisson integral, so its sup over a
strictly smaller concentric ball is bounded by a geometry constant times
the L1 norm of its boundary data; the same holds outside a strictly
larger sphere for the exterior problem.  Applied to the difference
between the radiated field and the wanted field, whose boundary data on
each control sphere is exactly the solver's residual block, this turns
the achieved L2 residuals into machine-checkable sup-norm guarantees on
every target ball and beyond the observation boundary.

Two constants are recorded for every bound: a conservative form
normalized by the unit-ball volume, and a sharp form normalized by the
unit-sphere surface measure (d times larger in denominator, hence the
smaller bound).  Soundness is always claimed for the conservative form;
the sharp form is what direct differentiation of the Poisson kernel
yields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Scenario, surface_measure
from .operator import ControlTrace, Density, ForwardOperator, apply

UNIT_BALL_VOLUME = {2: np.pi, 3: 4.0 * np.pi / 3.0}


def interior_sup_constant(inner: float, outer: float, dim: int, sharp: bool = False) -> float:
    """Sup bound constant for the interior problem: sup over the ball of
    radius ``inner`` given L1 boundary data on the sphere of radius
    ``outer`` (concentric, inner < outer)."""
    if not 0 < inner < outer:
        raise ValueError(f"need 0 < inner < outer, got {inner}, {outer}")
    norm = UNIT_BALL_VOLUME[dim] * (dim if sharp else 1)
    return (outer + inner) / (norm * outer * (outer - inner) ** (dim - 1))


def exterior_sup_constant(inner: float, outer: float, dim: int, sharp: bool = False) -> float:
    """Sup bound constant outside radius ``outer`` given L1 data on the
    sphere of radius ``inner`` (inner < outer)."""
    if not 0 < inner < outer:
        raise ValueError(f"need 0 < inner < outer, got {inner}, {outer}")
    norm = UNIT_BALL_VOLUME[dim] * (dim if sharp else 1)
    return (outer + inner) / (norm * inner * (outer - inner) ** (dim - 1))


def interior_bound(mismatch_l2: float, a: float, a_prime: float, dim: int,
                   sharp: bool = False) -> float:
    """Sup bound on the ball of radius a from an L2 mismatch on the
    concentric control sphere of radius a'.

    The sup constant is stated for L1 boundary data; the factor
    sqrt(surface measure) converts the L2 mismatch by Cauchy-Schwarz.
    """
    if mismatch_l2 < 0:
        raise ValueError(f"mismatch must be nonnegative, got {mismatch_l2}")
    c = interior_sup_constant(a, a_prime, dim, sharp=sharp)
    return c * np.sqrt(surface_measure(a_prime, dim)) * mismatch_l2


def exterior_bound(mismatch_l2: float, r_prime: float, r: float, dim: int,
                   sharp: bool = False) -> float:
    """Sup bound outside radius r from an L2 mismatch on the sphere of
    radius r' < r."""
    if mismatch_l2 < 0:
        raise ValueError(f"mismatch must be nonnegative, got {mismatch_l2}")
    c = exterior_sup_constant(r_prime, r, dim, sharp=sharp)
    return c * np.sqrt(surface_measure(r_prime, dim)) * mismatch_l2


@dataclass(frozen=True)
class BoundaryBound:
    """Certificate entry for one control boundary."""

    label: str
    mismatch_l2: float
    l1_factor: float            # sqrt of the control sphere's surface measure
    constant_conservative: float
    constant_sharp: float
    bound_conservative: float
    bound_sharp: float


@dataclass(frozen=True)
class Certificate:
    """Sup-norm guarantees: one entry per target ball, one for the exterior.

    Region entry k asserts  sup over the closed target ball k of
    |radiated - (u_k - u_0)| <= bound; the exterior entry asserts
    sup outside the observation ball of |radiated| <= bound.
    """

    regions: tuple[BoundaryBound, ...]
    exterior: BoundaryBound


def _entry(label: str, mismatch: float, inner: float, outer: float, dim: int,
           kind: str) -> BoundaryBound:
    # The mismatch lives on the control sphere: radius `outer` for interior
    # bounds (data sphere outside the protected ball), `inner` for exterior
    # bounds (data sphere inside the protected region).
    if kind == "interior":
        constant_fn, data_radius = interior_sup_constant, outer
    else:
        constant_fn, data_radius = exterior_sup_constant, inner
    l1_factor = float(np.sqrt(surface_measure(data_radius, dim)))
    c_cons = constant_fn(inner, outer, dim, sharp=False)
    c_sharp = constant_fn(inner, outer, dim, sharp=True)
    return BoundaryBound(
        label=label,
        mismatch_l2=mismatch,
        l1_factor=l1_factor,
        constant_conservative=c_cons,
        constant_sharp=c_sharp,
        bound_conservative=c_cons * l1_factor * mismatch,
        bound_sharp=c_sharp * l1_factor * mismatch,
    )


def certify_solution(K: ForwardOperator, h: Density, v: ControlTrace,
                     s: Scenario) -> Certificate:
    """Certificate for a solved density against its trace target.

    Feeds each control boundary's L2 residual through the interior or
    exterior sup bound with that boundary's radii.
    """
    res = apply(K, h) - v
    region_entries = []
    for k, (r, block, rule) in enumerate(zip(s.regions, res.blocks, res.rules), start=1):
        mismatch = rule.l2_norm(block)
        region_entries.append(
            _entry(f"region-{k}", mismatch, r.radius, r.control_radius, s.dim,
                   "interior")
        )
    outer_rule = res.rules[-1]
    mismatch = outer_rule.l2_norm(res.blocks[-1])
    exterior_entry = _entry(
        "exterior", mismatch, s.outer_control_radius, s.observation_radius, s.dim,
        "exterior",
    )
    return Certificate(regions=tuple(region_entries), exterior=exterior_entry)


def sample_in_ball(rng: np.random.Generator, center, radius: float, dim: int,
                   n: int) -> np.ndarray:
    """Uniform samples in a ball (radius scaled by U^(1/dim))."""
    center = np.asarray(center, dtype=float)
    direction = rng.standard_normal((n, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * rng.uniform(0.0, 1.0, n) ** (1.0 / dim)
    return center + r[:, None] * direction


def sample_outside_ball(rng: np.random.Generator, radius: float, dim: int,
                        n: int, reach: float = 3.0) -> np.ndarray:
    """Uniform-direction samples with radii in (radius, reach * radius]."""
    direction = rng.standard_normal((n, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * (1.0 + (reach - 1.0) * rng.uniform(0.0, 1.0, n))
    return r[:, None] * direction


def empirical_mismatches(h: Density, v_fields, s: Scenario,
                         rng: np.random.Generator, n_samples: int = 500
                         ) -> tuple[list[float], float]:
    """Monte-Carlo sup-norm probes matching the certificate's claims.

    ``v_fields`` supplies the wanted difference field per region (a
    callable of points); returns the sampled maxima per target ball and
    the sampled maximum of |radiated field| outside the observation ball.
    """
    from .fields import eval_double_layer

    maxima = []
    for r, wanted in zip(s.regions, v_fields):
        pts = sample_in_ball(rng, r.center, r.radius, s.dim, n_samples)
        diff = eval_double_layer(h, pts) - wanted(pts)
        maxima.append(float(np.max(np.abs(diff))))
    pts = sample_outside_ball(rng, s.observation_radius, s.dim, n_samples)
    exterior_max = float(np.max(np.abs(eval_double_layer(h, pts))))
    return maxima, exterior_max


def scenario_difference_fields(s: Scenario):
    """Per-region callables evaluating u_k - u_0 at points."""
    from .fields import eval_field

    def make(region):
        def wanted(pts):
            return (np.asarray(eval_field(region.target, pts), dtype=float)
                    - np.asarray(eval_field(s.exterior_target, pts), dtype=float))
        return wanted

    return [make(r) for r in s.regions]
