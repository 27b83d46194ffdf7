"""Ball geometry, surface quadrature and admissibility checks.

The solver's geometry is a small source ball (the "antenna") centred at
the origin, one or more target balls in which a prescribed harmonic field
is wanted, a concentric control sphere slightly larger than each target
ball, and one large outer control sphere sitting strictly inside the
observation boundary.  Boundary data is matched on the control spheres;
sup-norm guarantees then propagate inward to the target balls and outward
past the observation boundary.

Surface integrals are discretized with spectrally accurate rules for
smooth integrands: equispaced trapezoid nodes on circles, and a
Gauss-Legendre (polar) x trapezoid (azimuth) product grid on spheres.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .fields import HarmonicField

# Relative tolerances for quadrature-rule self checks.
SURFACE_MEASURE_RTOL = 1e-12
NODE_ON_BOUNDARY_RTOL = 1e-14

# Default node counts: circles (2D) and polar counts (3D; azimuth = 2x polar).
DEFAULT_CIRCLE_NODES = 128
DEFAULT_SPHERE_POLAR = 24


class ScenarioValidationError(ValueError):
    """A scenario violates one or more geometric admissibility conditions.

    Attributes
    ----------
    violations : list of str
        One entry per failed inequality, naming the region it concerns.
    """

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__(
            "scenario failed validation:\n  " + "\n  ".join(self.violations)
        )


def surface_measure(radius: float, dim: int) -> float:
    """Surface measure of a sphere: 2*pi*r in 2D, 4*pi*r^2 in 3D."""
    if dim == 2:
        return 2.0 * np.pi * radius
    if dim == 3:
        return 4.0 * np.pi * radius**2
    raise ValueError(f"dim must be 2 or 3, got {dim}")


def _as_point(p, dim: int) -> np.ndarray:
    x = np.asarray(p, dtype=float)
    if x.shape != (dim,):
        raise ValueError(f"expected a point of dimension {dim}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class Boundary:
    """A circle (2D) or sphere (3D) boundary.

    Attributes
    ----------
    center : ndarray, shape (dim,)
    radius : float, > 0
    dim : int, 2 or 3
    """

    center: np.ndarray
    radius: float
    dim: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        center = _as_point(self.center, self.dim)
        center.setflags(write=False)
        object.__setattr__(self, "center", center)

    @property
    def measure(self) -> float:
        """Surface measure of the boundary."""
        return surface_measure(self.radius, self.dim)


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature nodes, weights and outward normals on a ball boundary.

    Invariants (enforced by :meth:`validate`): weights sum to the surface
    measure to 1e-12 relative, every node lies on the boundary to
    1e-14 * radius, and every normal equals (node - center) / radius.
    """

    boundary: Boundary
    nodes: np.ndarray    # (n, dim)
    weights: np.ndarray  # (n,)
    normals: np.ndarray  # (n, dim)

    def __post_init__(self):
        for name in ("nodes", "weights", "normals"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self.validate()

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum approximating the surface integral of the values."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.node_count,):
            raise ValueError(
                f"values shape {values.shape} does not match {self.node_count} nodes"
            )
        return float(self.weights @ values)

    def l2_norm(self, values: np.ndarray) -> float:
        """Quadrature-weighted L2 norm of nodal values."""
        values = np.asarray(values, dtype=float)
        return float(np.sqrt(self.weights @ values**2))

    def validate(self) -> None:
        """Check rule integrity. Raises ValueError on failure."""
        n, d = self.nodes.shape
        if d != self.boundary.dim:
            raise ValueError(f"node dimension {d} != boundary dim {self.boundary.dim}")
        if self.weights.shape != (n,):
            raise ValueError(f"weights shape {self.weights.shape} != ({n},)")
        if self.normals.shape != (n, d):
            raise ValueError(f"normals shape {self.normals.shape} != ({n}, {d})")
        if np.any(self.weights <= 0):
            raise ValueError("non-positive quadrature weights")

        total = float(np.sum(self.weights))
        measure = self.boundary.measure
        if abs(total - measure) > SURFACE_MEASURE_RTOL * measure:
            raise ValueError(
                f"weights sum {total!r} != surface measure {measure!r}"
            )
        # Tolerance: 1e-14 * radius plus the float representation error a
        # node "center + r * normal" necessarily carries from |center|.
        eps = np.finfo(float).eps
        center_norm = float(np.linalg.norm(self.boundary.center))
        tol = NODE_ON_BOUNDARY_RTOL * self.boundary.radius + 8 * eps * (center_norm + self.boundary.radius)
        radii = np.linalg.norm(self.nodes - self.boundary.center, axis=1)  # (n,)
        if np.max(np.abs(radii - self.boundary.radius)) > tol:
            raise ValueError("nodes do not lie on the boundary")
        expected = (self.nodes - self.boundary.center) / self.boundary.radius
        if np.max(np.abs(self.normals - expected)) > tol / self.boundary.radius:
            raise ValueError("normals are not outward unit radial vectors")


def make_circle_rule(center, radius: float, n: int) -> QuadratureRule:
    """Equispaced trapezoid rule on a circle.

    Nodes sit at angles 2*pi*j/n, every weight is 2*pi*r/n, normals point
    radially outward.  The rule integrates trigonometric polynomials of
    degree < n exactly, which makes it spectrally accurate for the
    analytic integrands that arise between well separated boundaries.

    Parameters
    ----------
    center : array-like, shape (2,)
    radius : float, > 0
    n : int, >= 4
        Node count.
    """
    if n < 4:
        raise ValueError(f"circle rule needs n >= 4 nodes, got {n}")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    boundary = Boundary(center=_as_point(center, 2), radius=float(radius), dim=2)

    angles = 2.0 * np.pi * np.arange(n) / n  # (n,)
    normals = np.column_stack([np.cos(angles), np.sin(angles)])  # (n, 2)
    nodes = boundary.center + radius * normals  # (n, 2)
    weights = np.full(n, 2.0 * np.pi * radius / n)  # (n,)
    return QuadratureRule(boundary=boundary, nodes=nodes, weights=weights, normals=normals)


def make_sphere_rule(center, radius: float, n_polar: int, n_azimuth: int) -> QuadratureRule:
    """Gauss-Legendre (polar) x trapezoid (azimuth) product rule on a sphere.

    The polar direction uses Gauss-Legendre nodes in cos(theta), the
    azimuth an equispaced grid; weights are r^2 * w_GL * (2*pi/n_azimuth),
    so they sum to 4*pi*r^2 up to roundoff.
    """
    if n_polar < 2:
        raise ValueError(f"sphere rule needs n_polar >= 2, got {n_polar}")
    if n_azimuth < 4:
        raise ValueError(f"sphere rule needs n_azimuth >= 4, got {n_azimuth}")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    boundary = Boundary(center=_as_point(center, 3), radius=float(radius), dim=3)

    t, w_gl = np.polynomial.legendre.leggauss(n_polar)  # cos(theta) nodes, (n_polar,)
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth  # (n_azimuth,)
    sin_theta = np.sqrt(1.0 - t**2)  # (n_polar,)

    # Product grid flattened to (n_polar * n_azimuth, 3).
    st = np.repeat(sin_theta, n_azimuth)
    ct = np.repeat(t, n_azimuth)
    ph = np.tile(phi, n_polar)
    normals = np.column_stack([st * np.cos(ph), st * np.sin(ph), ct])
    nodes = boundary.center + radius * normals
    weights = radius**2 * np.repeat(w_gl, n_azimuth) * (2.0 * np.pi / n_azimuth)
    return QuadratureRule(boundary=boundary, nodes=nodes, weights=weights, normals=normals)


@dataclass(frozen=True)
class Discretization:
    """Node counts per boundary.

    In 2D both entries are circle node counts.  In 3D they are polar
    counts; the azimuth count is fixed at twice the polar count.
    """

    antenna: int
    control: int

    def __post_init__(self):
        if self.antenna < 2 or self.control < 2:
            raise ValueError(
                f"node counts must be >= 2, got {self.antenna}, {self.control}"
            )


def default_discretization(dim: int) -> Discretization:
    if dim == 2:
        return Discretization(DEFAULT_CIRCLE_NODES, DEFAULT_CIRCLE_NODES)
    return Discretization(DEFAULT_SPHERE_POLAR, DEFAULT_SPHERE_POLAR)


@dataclass(frozen=True)
class Region:
    """A target ball with its surrounding control sphere and wanted field.

    ``radius`` is the target-ball radius; ``control_radius`` (strictly
    larger) is the radius of the concentric sphere on which boundary data
    is matched.  ``control_radius=None`` means "fill in the default".
    """

    center: np.ndarray
    radius: float
    target: "HarmonicField"
    control_radius: float | None = None

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        center.setflags(write=False)
        object.__setattr__(self, "center", center)

    @property
    def center_distance(self) -> float:
        return float(np.linalg.norm(self.center))


@dataclass(frozen=True)
class Scenario:
    """Full problem description.

    Attributes
    ----------
    dim : 2 or 3
    delta : float
        Antenna radius; the antenna ball is centred at the origin.
    regions : tuple of Region
    observation_radius : float
        Radius R of the ball outside which the field must match the
        exterior target.
    exterior_target : HarmonicField
        Field wanted outside the observation ball (bounded at infinity in
        2D, decaying in 3D).
    epsilon : float or "auto"
        Accuracy budget for the boundary mismatch; "auto" scales 1e-3 by
        the target-field norms (resolved at load time).
    outer_control_radius : float or None
        Radius R' of the outer control sphere; None means default.
    discretization : Discretization or None
    seed : int
        Seed for the run's sampling diagnostics.
    """

    dim: int
    delta: float
    regions: tuple[Region, ...]
    observation_radius: float
    exterior_target: "HarmonicField"
    epsilon: float | str
    outer_control_radius: float | None = None
    discretization: Discretization | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if self.discretization is None:
            object.__setattr__(self, "discretization", default_discretization(self.dim))

    @property
    def n_regions(self) -> int:
        return len(self.regions)


def with_default_radii(s: Scenario) -> Scenario:
    """Fill in missing control radii.

    Each region's control radius defaults to

        a' = a + min(0.5*a, 0.25*(|x| - a - delta), 0.5*(R - |x| - a))

    and the outer control radius to R' = (R + max_k(|x_k| + a'_k)) / 2.
    The increments are capped by the gaps to the antenna and to the
    observation boundary, so a scenario whose hard data is admissible
    stays admissible after defaulting, while the sup-norm constants on
    both sides of each control sphere remain moderate.
    """
    regions = []
    for r in s.regions:
        if r.control_radius is not None:
            regions.append(r)
            continue
        dist = r.center_distance
        gap_in = dist - r.radius - s.delta
        gap_out = s.observation_radius - dist - r.radius
        bump = min(0.5 * r.radius, 0.25 * gap_in, 0.5 * gap_out)
        regions.append(replace(r, control_radius=r.radius + bump))

    outer = s.outer_control_radius
    if outer is None:
        reach = max(r.center_distance + r.control_radius for r in regions)
        outer = 0.5 * (s.observation_radius + reach)
    return replace(s, regions=tuple(regions), outer_control_radius=outer)


def validate_scenario(s: Scenario) -> Scenario:
    """Check every admissibility inequality; report all violations together.

    Conditions, for every region k with center x_k, radius a_k and control
    radius a'_k, antenna radius delta, outer control radius R' and
    observation radius R:

        a_k < a'_k
        |x_k| > a'_k + delta
        R' > |x_k| + a'_k
        R' < R
        closed target balls pairwise disjoint
        closed target balls disjoint from the closed antenna ball

    Returns the scenario unchanged when all hold.
    """
    bad: list[str] = []
    if s.dim not in (2, 3):
        bad.append(f"dim must be 2 or 3, got {s.dim}")
    if not s.delta > 0:
        bad.append(f"antenna radius must be positive, got {s.delta}")
    if not s.regions:
        bad.append("at least one target region is required")
    if s.outer_control_radius is None:
        bad.append("outer control radius is unset (apply with_default_radii first)")
    if isinstance(s.epsilon, str):
        if s.epsilon != "auto":
            bad.append(f"epsilon must be a positive number or 'auto', got {s.epsilon!r}")
    elif not s.epsilon > 0:
        bad.append(f"epsilon must be positive, got {s.epsilon}")

    for k, r in enumerate(s.regions, start=1):
        if r.center.shape != (s.dim,):
            bad.append(f"region {k}: center has shape {r.center.shape}, expected ({s.dim},)")
            continue
        if not r.radius > 0:
            bad.append(f"region {k}: radius must be positive, got {r.radius}")
        if r.control_radius is None:
            bad.append(f"region {k}: control radius is unset (apply with_default_radii first)")
            continue
        dist = r.center_distance
        if not r.radius < r.control_radius:
            bad.append(
                f"region {k}: a < a' fails ({r.radius} >= {r.control_radius})"
            )
        if not dist > r.control_radius + s.delta:
            bad.append(
                f"region {k}: |x| > a' + delta fails ({dist} <= {r.control_radius + s.delta})"
            )
        if s.outer_control_radius is not None and not s.outer_control_radius > dist + r.control_radius:
            bad.append(
                f"region {k}: R' > |x| + a' fails "
                f"({s.outer_control_radius} <= {dist + r.control_radius})"
            )
        if not dist > r.radius + s.delta:
            bad.append(
                f"region {k}: target ball overlaps the antenna ball "
                f"({dist} <= {r.radius + s.delta})"
            )

    if s.outer_control_radius is not None and not s.outer_control_radius < s.observation_radius:
        bad.append(
            f"R' < R fails ({s.outer_control_radius} >= {s.observation_radius})"
        )

    for i in range(len(s.regions)):
        for j in range(i + 1, len(s.regions)):
            ri, rj = s.regions[i], s.regions[j]
            if ri.center.shape != rj.center.shape:
                continue
            sep = float(np.linalg.norm(ri.center - rj.center))
            if not sep > ri.radius + rj.radius:
                bad.append(
                    f"regions {i + 1} and {j + 1}: closed target balls intersect "
                    f"(center distance {sep} <= {ri.radius + rj.radius})"
                )

    if bad:
        raise ScenarioValidationError(bad)
    return s


def build_rules(s: Scenario) -> tuple[QuadratureRule, list[QuadratureRule]]:
    """Quadrature rules for a validated scenario.

    Returns the antenna rule and the control rules ordered region 1..N,
    then the outer control sphere.
    """
    d = s.discretization
    origin = np.zeros(s.dim)
    if s.dim == 2:
        antenna = make_circle_rule(origin, s.delta, d.antenna)
        controls = [
            make_circle_rule(r.center, r.control_radius, d.control) for r in s.regions
        ]
        controls.append(make_circle_rule(origin, s.outer_control_radius, d.control))
    else:
        antenna = make_sphere_rule(origin, s.delta, d.antenna, 2 * d.antenna)
        controls = [
            make_sphere_rule(r.center, r.control_radius, d.control, 2 * d.control)
            for r in s.regions
        ]
        controls.append(
            make_sphere_rule(origin, s.outer_control_radius, d.control, 2 * d.control)
        )
    return antenna, controls
