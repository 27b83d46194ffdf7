"""Ready-made demo scenarios.

Both demos ask the antenna (radius 1 at the origin) to reproduce
closed-form fields in target balls of radius 2 while staying quiet
outside the observation ball of radius 15, with the accuracy budget
scaled automatically from the target-field norms.
"""

from __future__ import annotations

from .fields import dipole, log_source, point_source, zero_field
from .geometry import Region, Scenario, with_default_radii


def make_demo_2d() -> Scenario:
    """Two regions: a log source seen from (0, 12), a dipole field from (10, 0)."""
    s = Scenario(
        dim=2,
        delta=1.0,
        regions=(
            Region(center=(0.0, 12.0), radius=2.0, target=log_source((0.0, 0.0))),
            Region(center=(10.0, 0.0), radius=2.0,
                   target=dipole((0.0, 0.0), (1.0, 0.0))),
        ),
        observation_radius=15.0,
        exterior_target=zero_field(),
        epsilon="auto",
        seed=7,
    )
    return with_default_radii(s)


def make_demo_3d() -> Scenario:
    """One region at (10, 0, 0) asking for the field of a unit point source."""
    s = Scenario(
        dim=3,
        delta=1.0,
        regions=(
            Region(center=(10.0, 0.0, 0.0), radius=2.0,
                   target=point_source((0.0, 0.0, 0.0))),
        ),
        observation_radius=15.0,
        exterior_target=zero_field(),
        epsilon="auto",
        seed=11,
    )
    return with_default_radii(s)
