"""Harmonic target fields, trace targets and radiated-field evaluation.

A small catalog of closed-form harmonic fields (point/log sources,
dipoles, harmonic polynomials) serves as targets; their traces on the
control spheres, with the exterior target subtracted, form the data the
forward operator must match.  The field the antenna actually radiates is
the double-layer potential of the solved density, evaluated here by the
same quadrature that built the operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .geometry import QuadratureRule, Scenario, make_circle_rule, make_sphere_rule
from .kernels import dlp_kernel

# Evaluation closer than this to a field's singular point is rejected.
SINGULARITY_TOL = 1e-9

# Relative-mismatch denominators are floored at this fraction of the
# region's peak target magnitude (absolute mismatch when the peak is 0).
MISMATCH_FLOOR_REL = 1e-8

MAX_POLY_DEGREE = 3


@dataclass(frozen=True)
class HarmonicField:
    """A closed-form harmonic function.

    Use the module constructors (:func:`zero_field`, :func:`constant_field`,
    :func:`log_source`, :func:`point_source`, :func:`dipole`,
    :func:`harmonic_polynomial`) rather than building instances directly.

    kind is one of ``zero``, ``constant``, ``log-source`` (2D, value
    ln(1/|x-s|)), ``point-source`` (3D, value 1/|x-s|), ``dipole`` (value
    p.(x-s)/|x-s|^d) or ``polynomial``.
    """

    kind: str
    value: float = 0.0
    location: tuple[float, ...] | None = None
    direction: tuple[float, ...] | None = None
    terms: tuple[tuple[tuple[int, ...], float], ...] | None = None

    @property
    def singularity(self) -> np.ndarray | None:
        """The field's singular point, or None for entire fields."""
        if self.kind in ("log-source", "point-source", "dipole"):
            return np.asarray(self.location, dtype=float)
        return None

    def decay_at_infinity(self) -> str:
        """One of 'zero', 'bounded', 'grows' as |x| -> infinity."""
        if self.kind in ("point-source", "dipole"):
            return "zero"
        if self.kind == "zero":
            return "zero"
        if self.kind == "constant":
            return "zero" if self.value == 0.0 else "bounded"
        if self.kind == "log-source":
            return "grows"
        degree = max((sum(p) for p, c in self.terms if c != 0.0), default=-1)
        if degree <= -1:
            return "zero"
        return "bounded" if degree == 0 else "grows"

    def harmonic_on_ball(self, center, radius: float) -> bool:
        """True when the field is harmonic on the closed ball."""
        s = self.singularity
        if s is None:
            return True
        return float(np.linalg.norm(s - np.asarray(center, dtype=float))) > radius


def zero_field() -> HarmonicField:
    return HarmonicField(kind="zero")


def constant_field(value: float) -> HarmonicField:
    return HarmonicField(kind="constant", value=float(value))


def log_source(location) -> HarmonicField:
    """2D field ln(1/|x - s|), harmonic away from s."""
    s = tuple(float(v) for v in location)
    if len(s) != 2:
        raise ValueError(f"log source lives in 2D, got a point of length {len(s)}")
    return HarmonicField(kind="log-source", location=s)


def point_source(location) -> HarmonicField:
    """3D field 1/|x - s|, harmonic away from s and decaying at infinity."""
    s = tuple(float(v) for v in location)
    if len(s) != 3:
        raise ValueError(f"point source lives in 3D, got a point of length {len(s)}")
    return HarmonicField(kind="point-source", location=s)


def dipole(location, direction) -> HarmonicField:
    """Field p.(x - s)/|x - s|^d; works in both dimensions."""
    s = tuple(float(v) for v in location)
    p = tuple(float(v) for v in direction)
    if len(s) != len(p):
        raise ValueError(f"location length {len(s)} != direction length {len(p)}")
    if not any(p):
        raise ValueError("dipole direction must be nonzero")
    return HarmonicField(kind="dipole", location=s, direction=p)


def harmonic_polynomial(terms: Mapping[Iterable[int], float], dim: int) -> HarmonicField:
    """Polynomial field from monomial terms {exponents: coefficient}.

    The total degree must not exceed 3 and the Laplacian must vanish
    identically; both are checked exactly on the monomial coefficients.
    """
    clean: dict[tuple[int, ...], float] = {}
    for powers, coeff in terms.items():
        p = tuple(int(v) for v in powers)
        if len(p) != dim:
            raise ValueError(f"exponent tuple {p} does not have length {dim}")
        if any(v < 0 for v in p):
            raise ValueError(f"negative exponent in {p}")
        if sum(p) > MAX_POLY_DEGREE:
            raise ValueError(
                f"monomial {p} has degree {sum(p)} > {MAX_POLY_DEGREE}"
            )
        clean[p] = clean.get(p, 0.0) + float(coeff)

    # Laplacian of sum c * x^a is sum_i c * a_i (a_i - 1) x^(a - 2 e_i);
    # collect its coefficients and require them all zero.
    lap: dict[tuple[int, ...], float] = {}
    for p, c in clean.items():
        for i, a in enumerate(p):
            if a >= 2:
                q = tuple(v - 2 if j == i else v for j, v in enumerate(p))
                lap[q] = lap.get(q, 0.0) + c * a * (a - 1)
    scale = max((abs(c) for c in clean.values()), default=0.0)
    if any(abs(v) > 1e-12 * max(scale, 1.0) for v in lap.values()):
        raise ValueError("polynomial is not harmonic (its Laplacian does not vanish)")
    return HarmonicField(kind="polynomial", terms=tuple(sorted(clean.items())))


def eval_field(f: HarmonicField, x) -> np.ndarray | float:
    """Evaluate a catalog field at one point or a batch of points.

    Raises when any point comes within 1e-9 of the field's singularity.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    pts = np.atleast_2d(x)  # (p, dim)
    dim = pts.shape[-1]

    s = f.singularity
    if s is not None:
        if s.shape[0] != dim:
            raise ValueError(
                f"field lives in dimension {s.shape[0]}, points have dimension {dim}"
            )
        diff = pts - s  # (p, dim)
        dist = np.linalg.norm(diff, axis=-1)  # (p,)
        if np.any(dist < SINGULARITY_TOL):
            raise ValueError("evaluation at or near the field's singular point")

    if f.kind == "zero":
        out = np.zeros(pts.shape[0])
    elif f.kind == "constant":
        out = np.full(pts.shape[0], f.value)
    elif f.kind == "log-source":
        if dim != 2:
            raise ValueError("log source is a 2D field")
        out = -np.log(dist)
    elif f.kind == "point-source":
        if dim != 3:
            raise ValueError("point source is a 3D field")
        out = 1.0 / dist
    elif f.kind == "dipole":
        p = np.asarray(f.direction, dtype=float)
        out = (diff @ p) / dist**dim
    elif f.kind == "polynomial":
        out = np.zeros(pts.shape[0])
        for powers, coeff in f.terms:
            if len(powers) != dim:
                raise ValueError(
                    f"polynomial lives in dimension {len(powers)}, points have {dim}"
                )
            mono = np.ones(pts.shape[0])
            for i, a in enumerate(powers):
                if a:
                    mono *= pts[:, i] ** a
            out += coeff * mono
    else:
        raise ValueError(f"unknown field kind {f.kind!r}")
    return float(out[0]) if scalar else out


def build_target(s: Scenario, controls: list[QuadratureRule]):
    """Trace target on the control boundaries.

    Block k holds (u_k - u_0) at the nodes of region k's control sphere;
    the outer block is zero (the exterior requirement after subtracting
    the exterior target).  Harmonicity domains are checked first: each
    region target must be harmonic on its closed control ball, and the
    exterior target must be harmonic outside the outer control sphere
    with admissible behavior at infinity.
    """
    from .operator import ControlTrace

    if len(controls) != s.n_regions + 1:
        raise ValueError(
            f"expected {s.n_regions + 1} control rules, got {len(controls)}"
        )

    u0 = s.exterior_target
    decay = u0.decay_at_infinity()
    if s.dim == 2 and decay == "grows":
        raise ValueError("exterior target must stay bounded at infinity in 2D")
    if s.dim == 3 and decay != "zero":
        raise ValueError("exterior target must decay at infinity in 3D")
    s0 = u0.singularity
    if s0 is not None:
        if float(np.linalg.norm(s0)) >= s.outer_control_radius:
            raise ValueError(
                "exterior target's singularity must lie strictly inside the "
                "outer control sphere"
            )
        for k, r in enumerate(s.regions, start=1):
            if not u0.harmonic_on_ball(r.center, r.control_radius):
                raise ValueError(
                    f"exterior target is singular inside region {k}'s control ball"
                )

    blocks = []
    for k, (r, rule) in enumerate(zip(s.regions, controls), start=1):
        if not r.target.harmonic_on_ball(r.center, r.control_radius):
            raise ValueError(
                f"region {k}: target field is singular inside the control ball "
                f"(radius {r.control_radius})"
            )
        traces = np.asarray(eval_field(r.target, rule.nodes), dtype=float)
        traces = traces - np.asarray(eval_field(u0, rule.nodes), dtype=float)
        blocks.append(traces)
    blocks.append(np.zeros(controls[-1].node_count))
    return ControlTrace(blocks=blocks, rules=list(controls))


def eval_double_layer(g, x) -> np.ndarray | float:
    """Field radiated by an antenna density: the double-layer potential.

    Quadrature of the double-layer kernel against the density over the
    antenna boundary.  Evaluation is rejected inside or within a 1e-6
    relative ring of the antenna sphere, where the plain quadrature of the
    singular kernel is meaningless.

    Parameters
    ----------
    g : Density
        Antenna density (see the operator module).
    x : array-like, shape (dim,) or (p, dim)
    """
    rule = g.rule
    dim = rule.boundary.dim
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim}, got {x.shape}")

    rho = np.linalg.norm(pts - rule.boundary.center, axis=-1)
    if np.any(rho < rule.boundary.radius * (1.0 + 1e-6)):
        raise ValueError(
            "double-layer evaluation too close to (or inside) the antenna boundary"
        )
    kernel = dlp_kernel(
        pts[:, None, :], rule.nodes[None, :, :], rule.normals[None, :, :], dim
    )  # (p, n)
    out = kernel @ (rule.weights * g.values)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned evaluation grid: per-axis counts and bounds."""

    shape: tuple[int, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def points(self) -> np.ndarray:
        axes = [
            np.linspace(lo, hi, n) for n, lo, hi in zip(self.shape, self.lo, self.hi)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])


def default_grid(s: Scenario, shape: tuple[int, ...]) -> GridSpec:
    """Grid covering the observation ball plus a 20% exterior margin."""
    if len(shape) != s.dim:
        raise ValueError(f"grid shape {shape} does not match dim {s.dim}")
    half = 1.2 * s.observation_radius
    return GridSpec(shape=tuple(shape), lo=(-half,) * s.dim, hi=(half,) * s.dim)


@dataclass(frozen=True)
class FieldGrid:
    """Sampled total field with per-point target, mismatch and region label.

    Labels: ``region-k`` inside target ball k, ``exterior`` outside the
    observation ball, ``annulus`` elsewhere, ``excluded`` in the ring near
    the antenna where double-layer evaluation is unreliable (values are
    NaN there).  Points inside the closed antenna ball are dropped
    entirely.
    """

    points: np.ndarray    # (p, dim)
    values: np.ndarray    # (p,) total field
    target: np.ndarray    # (p,) wanted field, NaN where undefined
    mismatch: np.ndarray  # (p,) relative mismatch, NaN where undefined
    labels: tuple[str, ...]

    def __post_init__(self):
        n = self.points.shape[0]
        if not (len(self.values) == len(self.target) == len(self.mismatch) == len(self.labels) == n):
            raise ValueError("field grid column lengths do not match")


def eval_on_grid(g, s: Scenario, spec: GridSpec) -> FieldGrid:
    """Total field (exterior target + radiated field) over a grid.

    Inside target ball k the mismatch column holds
    |total - u_k| / max(|u_k|, floor); outside the observation ball it is
    the analogous mismatch against the exterior target.  The floor is
    1e-8 times the peak |target| over the points in that region, falling
    back to absolute mismatch for identically-zero targets.
    """
    pts = spec.points()
    delta = g.rule.boundary.radius
    n_around = g.rule.node_count if s.dim == 2 else 2 * s.discretization.antenna
    exclusion = delta * (1.0 + 2.0 * np.pi / n_around)

    rho = np.linalg.norm(pts, axis=-1)
    pts = pts[rho > delta]  # drop the antenna ball entirely
    rho = np.linalg.norm(pts, axis=-1)
    p = pts.shape[0]

    labels = np.full(p, "annulus", dtype=object)
    labels[rho <= exclusion] = "excluded"
    labels[rho > s.observation_radius] = "exterior"
    for k, r in enumerate(s.regions, start=1):
        inside = np.linalg.norm(pts - r.center, axis=-1) <= r.radius
        labels[inside & (labels == "annulus")] = f"region-{k}"

    # Points where a needed field is singular go into the mask instead of
    # aborting the whole grid.
    def too_close(field_):
        sing = field_.singularity
        if sing is None:
            return np.zeros(p, dtype=bool)
        return np.linalg.norm(pts - sing, axis=-1) < 2 * SINGULARITY_TOL

    bad = too_close(s.exterior_target)
    for k, r in enumerate(s.regions, start=1):
        bad |= too_close(r.target) & (labels == f"region-{k}")
    labels[bad] = "excluded"

    values = np.full(p, np.nan)
    target = np.full(p, np.nan)
    mismatch = np.full(p, np.nan)

    ok = labels != "excluded"
    if np.any(ok):
        u0 = np.asarray(eval_field(s.exterior_target, pts[ok]), dtype=float)
        values[ok] = u0 + eval_double_layer(g, pts[ok])

    targets_by_label = {"exterior": s.exterior_target}
    for k, r in enumerate(s.regions, start=1):
        targets_by_label[f"region-{k}"] = r.target
    for label, field_ in targets_by_label.items():
        sel = labels == label
        if not np.any(sel):
            continue
        t = np.asarray(eval_field(field_, pts[sel]), dtype=float)
        target[sel] = t
        peak = float(np.max(np.abs(t)))
        floor = MISMATCH_FLOOR_REL * peak if peak > 0 else 1.0
        mismatch[sel] = np.abs(values[sel] - t) / np.maximum(np.abs(t), floor)

    return FieldGrid(
        points=pts,
        values=values,
        target=target,
        mismatch=mismatch,
        labels=tuple(str(l) for l in labels),
    )


def write_grid(grid: FieldGrid, path) -> None:
    """Write a field grid as tab-separated text with a format-version line."""
    dim = grid.points.shape[1]
    coord_names = ["x", "y", "z"][:dim]
    with open(path, "w") as fh:
        fh.write("format-version: 1\n")
        fh.write("\t".join(coord_names + ["total", "target", "mismatch", "label"]) + "\n")
        for i in range(grid.points.shape[0]):
            coords = "\t".join(repr(float(c)) for c in grid.points[i])
            fh.write(
                f"{coords}\t{grid.values[i]!r}\t{grid.target[i]!r}"
                f"\t{grid.mismatch[i]!r}\t{grid.labels[i]}\n"
            )


def surface_l2_norm(f: HarmonicField, rule: QuadratureRule) -> float:
    """L2 norm of a field over a sphere, by surface quadrature."""
    vals = np.asarray(eval_field(f, rule.nodes), dtype=float)
    return rule.l2_norm(vals)


def ball_l2_norm(f: HarmonicField, center, radius: float, dim: int,
                 n_shells: int = 32, n_surface: int = 128) -> float:
    """L2 norm of a field over a solid ball, by radial-shell quadrature.

    Gauss-Legendre in the shell radius, the standard surface rule on each
    shell; spectrally accurate for fields smooth on the closed ball.
    """
    t, w = np.polynomial.legendre.leggauss(n_shells)
    radii = 0.5 * radius * (t + 1.0)  # (n_shells,) in (0, radius)
    w = 0.5 * radius * w
    total = 0.0
    for r_shell, w_shell in zip(radii, w):
        if dim == 2:
            rule = make_circle_rule(center, r_shell, n_surface)
        else:
            rule = make_sphere_rule(center, r_shell, n_surface, 2 * n_surface)
        vals = np.asarray(eval_field(f, rule.nodes), dtype=float)
        total += w_shell * float(rule.weights @ vals**2)
    return float(np.sqrt(total))


def auto_epsilon(s: Scenario) -> float:
    """Accuracy budget scaled by the target fields.

    1e-3 times the sum of the region targets' L2 norms over their target
    balls plus the exterior target's L2 norm over the observation
    boundary.
    """
    n_surface = 128 if s.dim == 2 else 32
    total = 0.0
    for r in s.regions:
        total += ball_l2_norm(r.target, r.center, r.radius, s.dim, n_surface=n_surface)
    if s.dim == 2:
        obs = make_circle_rule(np.zeros(2), s.observation_radius, 256)
    else:
        obs = make_sphere_rule(np.zeros(3), s.observation_radius, 32, 64)
    total += surface_l2_norm(s.exterior_target, obs)
    return 1e-3 * total


def resolve_epsilon(s: Scenario) -> Scenario:
    """Replace epsilon == 'auto' with its numeric value."""
    if s.epsilon == "auto":
        from dataclasses import replace

        return replace(s, epsilon=auto_epsilon(s))
    return s
