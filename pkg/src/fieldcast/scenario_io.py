"""Scenario files: YAML documents carrying exactly the Scenario fields.

Schema (see README for the full description)::

    format-version: 1
    dim: 2
    delta: 1.0
    epsilon: auto            # or a positive number
    seed: 7
    discretization: {antenna: 128, control: 128}   # optional
    regions:
      - center: [0.0, 12.0]
        radius: 2.0
        control-radius: 2.5  # optional; defaulted when absent
        field: {kind: log-source, location: [0.0, 0.0]}
    outer:
      observation-radius: 15.0
      control-radius: 14.75  # optional; defaulted when absent
      field: {kind: zero}

Parse errors cite the offending line (syntax) or field path (schema).
"""

from __future__ import annotations

import yaml

from .fields import (
    HarmonicField,
    constant_field,
    dipole,
    harmonic_polynomial,
    log_source,
    point_source,
    zero_field,
)
from .geometry import Discretization, Region, Scenario, with_default_radii

FORMAT_VERSION = 1


class ScenarioFormatError(ValueError):
    """A scenario file is syntactically or structurally invalid."""


def _fail(path: str, message: str):
    raise ScenarioFormatError(f"scenario field '{path}': {message}")


def _get(mapping, key, path, required=True, default=None):
    if not isinstance(mapping, dict):
        _fail(path or key, f"expected a mapping, got {type(mapping).__name__}")
    if key not in mapping:
        if required:
            _fail(f"{path}.{key}" if path else key, "missing")
        return default
    return mapping[key]

def _number(value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, path) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    return value


def _point(value, path, dim) -> list[float]:
    if not isinstance(value, list) or len(value) != dim:
        _fail(path, f"expected a list of {dim} numbers, got {value!r}")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _parse_field(raw, path, dim) -> HarmonicField:
    kind = _get(raw, "kind", path)
    try:
        if kind == "zero":
            return zero_field()
        if kind == "constant":
            return constant_field(_number(_get(raw, "value", path), f"{path}.value"))
        if kind == "log-source":
            return log_source(_point(_get(raw, "location", path), f"{path}.location", dim))
        if kind == "point-source":
            return point_source(_point(_get(raw, "location", path), f"{path}.location", dim))
        if kind == "dipole":
            return dipole(
                _point(_get(raw, "location", path), f"{path}.location", dim),
                _point(_get(raw, "direction", path), f"{path}.direction", dim),
            )
        if kind == "harmonic-polynomial":
            terms_raw = _get(raw, "terms", path)
            if not isinstance(terms_raw, list) or not terms_raw:
                _fail(f"{path}.terms", "expected a nonempty list of terms")
            terms = {}
            for i, term in enumerate(terms_raw):
                powers = _get(term, "powers", f"{path}.terms[{i}]")
                coeff = _number(_get(term, "coeff", f"{path}.terms[{i}]"),
                                f"{path}.terms[{i}].coeff")
                if not isinstance(powers, list) or len(powers) != dim:
                    _fail(f"{path}.terms[{i}].powers", f"expected {dim} integers")
                terms[tuple(_integer(p, f"{path}.terms[{i}].powers") for p in powers)] = coeff
            return harmonic_polynomial(terms, dim)
    except ScenarioFormatError:
        raise
    except ValueError as exc:
        _fail(path, str(exc))
    _fail(f"{path}.kind", f"unknown field kind {kind!r}")


def parse_scenario(text: str) -> Scenario:
    """Parse scenario YAML text; control radii are defaulted when absent."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ScenarioFormatError(f"scenario is not valid YAML{where}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioFormatError("scenario must be a YAML mapping at top level")

    version = _get(raw, "format-version", "")
    if version != FORMAT_VERSION:
        _fail("format-version", f"expected {FORMAT_VERSION}, got {version!r}")

    dim = _integer(_get(raw, "dim", ""), "dim")
    if dim not in (2, 3):
        _fail("dim", f"must be 2 or 3, got {dim}")
    delta = _number(_get(raw, "delta", ""), "delta")

    eps_raw = _get(raw, "epsilon", "")
    if eps_raw == "auto":
        epsilon: float | str = "auto"
    else:
        epsilon = _number(eps_raw, "epsilon")

    seed = _integer(_get(raw, "seed", "", required=False, default=0), "seed")

    disc = None
    disc_raw = _get(raw, "discretization", "", required=False)
    if disc_raw is not None:
        disc = Discretization(
            antenna=_integer(_get(disc_raw, "antenna", "discretization"),
                             "discretization.antenna"),
            control=_integer(_get(disc_raw, "control", "discretization"),
                             "discretization.control"),
        )

    regions_raw = _get(raw, "regions", "")
    if not isinstance(regions_raw, list) or not regions_raw:
        _fail("regions", "expected a nonempty list")
    regions = []
    for i, reg in enumerate(regions_raw):
        path = f"regions[{i}]"
        control_radius = _get(reg, "control-radius", path, required=False)
        regions.append(
            Region(
                center=_point(_get(reg, "center", path), f"{path}.center", dim),
                radius=_number(_get(reg, "radius", path), f"{path}.radius"),
                control_radius=None if control_radius is None
                else _number(control_radius, f"{path}.control-radius"),
                target=_parse_field(_get(reg, "field", path), f"{path}.field", dim),
            )
        )

    outer_raw = _get(raw, "outer", "")
    observation = _number(_get(outer_raw, "observation-radius", "outer"),
                          "outer.observation-radius")
    outer_control = _get(outer_raw, "control-radius", "outer", required=False)

    scenario = Scenario(
        dim=dim,
        delta=delta,
        regions=tuple(regions),
        observation_radius=observation,
        exterior_target=_parse_field(_get(outer_raw, "field", "outer"), "outer.field", dim),
        epsilon=epsilon,
        outer_control_radius=None if outer_control is None
        else _number(outer_control, "outer.control-radius"),
        discretization=disc,
        seed=seed,
    )
    return with_default_radii(scenario)


def load_scenario(path) -> Scenario:
    """Load and parse a scenario file."""
    with open(path) as fh:
        return parse_scenario(fh.read())


def _field_to_raw(f: HarmonicField, path="field"):
    if f.kind == "zero":
        return {"kind": "zero"}
    if f.kind == "constant":
        return {"kind": "constant", "value": f.value}
    if f.kind in ("log-source", "point-source"):
        return {"kind": f.kind, "location": list(f.location)}
    if f.kind == "dipole":
        return {"kind": "dipole", "location": list(f.location),
                "direction": list(f.direction)}
    if f.kind == "polynomial":
        return {"kind": "harmonic-polynomial",
                "terms": [{"powers": list(p), "coeff": c} for p, c in f.terms]}
    raise ValueError(f"cannot serialize field kind {f.kind!r}")


def save_scenario(s: Scenario, path) -> None:
    """Write a scenario as YAML (explicit radii included)."""
    raw = {
        "format-version": FORMAT_VERSION,
        "dim": s.dim,
        "delta": s.delta,
        "epsilon": s.epsilon,
        "seed": s.seed,
        "discretization": {
            "antenna": s.discretization.antenna,
            "control": s.discretization.control,
        },
        "regions": [
            {
                "center": [float(c) for c in r.center],
                "radius": r.radius,
                **({} if r.control_radius is None
                   else {"control-radius": r.control_radius}),
                "field": _field_to_raw(r.target),
            }
            for r in s.regions
        ],
        "outer": {
            "observation-radius": s.observation_radius,
            **({} if s.outer_control_radius is None
               else {"control-radius": s.outer_control_radius}),
            "field": _field_to_raw(s.exterior_target),
        },
    }
    with open(path, "w") as fh:
        yaml.safe_dump(raw, fh, sort_keys=False)
