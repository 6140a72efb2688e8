"""Scenario configs: schema, parsing, and the builtin reproduction catalog.

A scenario file is JSON (human-editable, nested key/value). Top level is
either one scenario object or ``{"id": ..., "suite": [name-or-object, ...]}``
bundling several. Schema (see README for the annotated version):

    {
      "id": str,
      "alpha": float,                 # kernel order, 0 < alpha < dim
      "solver_tol": float,            # relative KKT tolerance (default 1e-8)
      "check_tol": float | null,      # certification tolerance for identity checks
      "geometry": {"kind": ..., ...}, # GeometrySpec fields
      "field": {                      # optional; empty means f = 0
        "psi":   [{"kind": ...}, ...],
        "theta": {"plus": {"points": [[...]], "weights": [...]}, "minus": {...}},
        "omega": {"plus": {...}, "minus": {...}},
        "delta": {"tau": {...}, "sigma": {...}}   # exclusive with the above
      },
      "tasks": [{"type": ...}, ...],
      "output_dir": str | null
    }

Task types: solve_gauss, capacitary, balayage, frostman, representation,
support, monotone_increasing, monotone_decreasing, thinness,
solvability_probe. Task-specific keys are documented in the README schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .fields import FieldSpec, PointMasses, PsiPart
from .geometry import GeometrySpec

_TASK_TYPES = (
    "solve_gauss",
    "capacitary",
    "balayage",
    "frostman",
    "representation",
    "support",
    "monotone_increasing",
    "monotone_decreasing",
    "thinness",
    "solvability_probe",
)


@dataclass
class Scenario:
    id: str
    alpha: float
    geometry: GeometrySpec
    field_spec: FieldSpec
    tasks: list[dict]
    solver_tol: float = 1e-8
    check_tol: float | None = None
    output_dir: str | None = None
    allow_admissibility_warnings: bool = False

    def validate(self) -> None:
        self.geometry.validate()
        self.field_spec.validate()
        if not 0 < self.alpha < self.geometry.dim:
            raise ConfigurationError(
                f"alpha: need 0 < alpha < n = {self.geometry.dim}, got {self.alpha}"
            )
        for t in self.tasks:
            kind = t.get("type")
            if kind not in _TASK_TYPES:
                raise ConfigurationError(f"tasks: unknown task type {kind!r}")
            if kind in ("balayage", "representation") and not self.field_spec.is_delta_form:
                raise ConfigurationError(f"tasks.{kind}: requires a delta-form field")
            if kind == "solvability_probe":
                if not self.field_spec.is_delta_form:
                    raise ConfigurationError(
                        "tasks.solvability_probe: requires a delta-form field (sigma and/or tau)"
                    )
                if len(t.get("radii", [])) < 3:
                    raise ConfigurationError("tasks.solvability_probe: need radii with >= 3 values")


def _point_masses(obj, path: str) -> PointMasses:
    if not isinstance(obj, dict) or "points" not in obj or "weights" not in obj:
        raise ConfigurationError(f"{path}: expected {{points, weights}}")
    try:
        return PointMasses(points=obj["points"], weights=obj["weights"])
    except (ConfigurationError, ValueError, TypeError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def _parse_field(obj: dict | None) -> FieldSpec:
    if not obj:
        return FieldSpec()
    psi = tuple(
        PsiPart(
            kind=p.get("kind", ""),
            value=float(p.get("value", 0.0)),
            coefficient=float(p.get("coefficient", 1.0)),
            exponent=float(p.get("exponent", 2.0)),
            center=tuple(p.get("center", ())),
            region=p.get("region", ""),
        )
        for p in obj.get("psi", [])
    )
    def side(name: str, which: str) -> PointMasses | None:
        grp = obj.get(name)
        if not grp or which not in grp:
            return None
        return _point_masses(grp[which], f"field.{name}.{which}")

    delta = obj.get("delta") or {}
    spec = FieldSpec(
        psi=psi,
        theta_plus=side("theta", "plus"),
        theta_minus=side("theta", "minus"),
        omega_plus=side("omega", "plus"),
        omega_minus=side("omega", "minus"),
        delta_tau=_point_masses(delta["tau"], "field.delta.tau") if "tau" in delta else None,
        delta_sigma=_point_masses(delta["sigma"], "field.delta.sigma") if "sigma" in delta else None,
    )
    spec.validate()
    return spec


def _parse_geometry(obj: dict) -> GeometrySpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigurationError("geometry: expected an object with a 'kind'")
    kwargs = {}
    for key in (
        "kind",
        "dim",
        "n_nodes",
        "radius",
        "inner_radius",
        "outer_radius",
        "profile",
        "profile_exponent",
        "profile_start",
        "truncation_radius",
        "shell_base",
        "mesh_scale",
    ):
        if key in obj:
            kwargs[key] = obj[key]
    if "center" in obj:
        kwargs["center"] = tuple(obj["center"])
    if "half_widths" in obj:
        kwargs["half_widths"] = tuple(obj["half_widths"])
    if "parts" in obj:
        kwargs["parts"] = tuple(_parse_geometry(p) for p in obj["parts"])
    try:
        spec = GeometrySpec(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"geometry: {exc}") from exc
    spec.validate()
    return spec


def parse_scenario(obj: dict) -> Scenario:
    if not isinstance(obj, dict):
        raise ConfigurationError("config: expected a JSON object")
    for key in ("id", "alpha", "geometry", "tasks"):
        if key not in obj:
            raise ConfigurationError(f"config: missing required key {key!r}")
    scn = Scenario(
        id=str(obj["id"]),
        alpha=float(obj["alpha"]),
        geometry=_parse_geometry(obj["geometry"]),
        field_spec=_parse_field(obj.get("field")),
        tasks=[dict(t) for t in obj["tasks"]],
        solver_tol=float(obj.get("solver_tol", 1e-8)),
        check_tol=(None if obj.get("check_tol") is None else float(obj["check_tol"])),
        output_dir=obj.get("output_dir"),
        allow_admissibility_warnings=bool(obj.get("allow_admissibility_warnings", False)),
    )
    scn.validate()
    return scn


def load_config(path: str) -> list[Scenario]:
    """Parse a config file into one or more scenarios (suite files expand)."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    return expand_config(obj)


def expand_config(obj: dict) -> list[Scenario]:
    if isinstance(obj, dict) and "suite" in obj:
        out: list[Scenario] = []
        for i, entry in enumerate(obj["suite"]):
            if isinstance(entry, str):
                cat = builtin_scenarios()
                if entry not in cat:
                    raise ConfigurationError(f"suite[{i}]: unknown builtin scenario {entry!r}")
                out.append(parse_scenario(cat[entry].config))
            else:
                out.append(parse_scenario(entry))
        return out
    return [parse_scenario(obj)]


@dataclass
class BuiltinScenario:
    name: str
    description: str
    tags: tuple[str, ...]
    config: dict = field(default_factory=dict)


def _sigma(points, weights) -> dict:
    return {"points": points, "weights": weights}


def builtin_scenarios() -> dict[str, BuiltinScenario]:
    """Catalog of built-in reproduction scenarios."""
    cat: dict[str, BuiltinScenario] = {}

    def add(name, description, tags, config):
        config = dict(config, id=name)
        cat[name] = BuiltinScenario(name, description, tuple(tags), config)

    add(
        "minimal_two_node",
        "Two antipodal sphere nodes, f = 0; symmetric Gauss minimizer (1/2, 1/2).",
        ("demo", "gauss"),
        {
            "alpha": 2.0,
            "geometry": {"kind": "sphere", "dim": 3, "radius": 1.0, "n_nodes": 2},
            "tasks": [{"type": "solve_gauss"}, {"type": "frostman"}],
        },
    )
    add(
        "sphere_capacity",
        "Unit-sphere capacity two ways: obstacle solve and 1/w from the Gauss problem.",
        ("capacity",),
        {
            "alpha": 2.0,
            "geometry": {"kind": "sphere", "dim": 3, "radius": 1.0, "n_nodes": 2000},
            "tasks": [
                {"type": "solve_gauss"},
                {"type": "capacitary"},
                {"type": "frostman"},
            ],
        },
    )
    add(
        "sphere_capacity_demo",
        "Small unit-sphere capacity run (N = 500) for quick checks.",
        ("demo", "capacity"),
        {
            "alpha": 2.0,
            "geometry": {"kind": "sphere", "dim": 3, "radius": 1.0, "n_nodes": 500},
            "tasks": [
                {"type": "solve_gauss"},
                {"type": "capacitary"},
                {"type": "frostman"},
            ],
        },
    )
    add(
        "balayage_point_to_sphere",
        "Unit point mass at distance 2 swept onto the unit sphere; mass -> 1/2.",
        ("balayage",),
        {
            "alpha": 2.0,
            "geometry": {"kind": "sphere", "dim": 3, "radius": 1.0, "n_nodes": 2000},
            "field": {"delta": {"sigma": _sigma([[2.0, 0.0, 0.0]], [1.0])}},
            "tasks": [
                {"type": "balayage"},
                {"type": "solve_gauss"},
                {"type": "frostman"},
                {"type": "representation"},
            ],
        },
    )
    add(
        "representation_sphere_demo",
        "Representation identity lambda = swept + eta * capacitary on a small sphere.",
        ("demo", "representation"),
        {
            "alpha": 2.0,
            "geometry": {"kind": "sphere", "dim": 3, "radius": 1.0, "n_nodes": 400},
            "field": {"delta": {"sigma": _sigma([[0.0, 0.0, 2.0]], [0.5])}},
            "tasks": [
                {"type": "solve_gauss"},
                {"type": "balayage"},
                {"type": "representation"},
                {"type": "frostman"},
            ],
        },
    )
    add(
        "monotone_ball_increasing",
        "Increasing ball family r in {1/3, 2/3, 1}: w and c nonincreasing, strong convergence.",
        ("monotone", "demo"),
        {
            "alpha": 2.0,
            "geometry": {"kind": "ball", "dim": 3, "radius": 1.0, "n_nodes": 1200},
            "field": {"delta": {"sigma": _sigma([[2.0, 0.0, 0.0]], [1.0])}},
            "tasks": [{"type": "monotone_increasing", "count": 3}],
        },
    )
    add(
        "monotone_annulus_decreasing",
        "Shrinking annulus with a unit charge in the cavity: w nondecreasing, potentials decay.",
        ("monotone",),
        {
            "alpha": 2.0,
            "check_tol": 2e-3,
            "geometry": {
                "kind": "annulus",
                "dim": 3,
                "inner_radius": 0.6,
                "outer_radius": 1.4,
                "n_nodes": 1400,
            },
            "field": {"delta": {"sigma": _sigma([[0.22, 0.0, 0.0]], [1.0])}},
            "tasks": [{"type": "monotone_decreasing", "count": 3}],
        },
    )
    add(
        "thinness_f1",
        "Rotation body rho = x1^-1 (power tail): Wiener series diverges (not 2-thin).",
        ("thinness", "example-suite"),
        {
            "alpha": 2.0,
            "geometry": {
                "kind": "rotation_body",
                "dim": 3,
                "profile": 1,
                "profile_exponent": 1.0,
                "truncation_radius": 64.0,
                "shell_base": 2.0,
                "n_nodes": 3800,
            },
            "tasks": [{"type": "thinness", "q": 2.0, "expect": "diverging"}],
        },
    )
    add(
        "thinness_f2",
        "Rotation body rho = exp(-x1): 2-thin at infinity yet infinite capacity.",
        ("thinness", "example-suite"),
        {
            "alpha": 2.0,
            "geometry": {
                "kind": "rotation_body",
                "dim": 3,
                "profile": 2,
                "profile_exponent": 1.0,
                "truncation_radius": 5.0,
                "shell_base": 1.26,
                "n_nodes": 2600,
            },
            "tasks": [
                {
                    "type": "thinness",
                    "q": 1.26,
                    "expect": "converging",
                    "expect_capacity_growing": True,
                }
            ],
        },
    )
    add(
        "thinness_f3",
        "Rotation body rho = exp(-x1^2): finite capacity, Wiener series converges.",
        ("thinness", "example-suite"),
        {
            "alpha": 2.0,
            "geometry": {
                "kind": "rotation_body",
                "dim": 3,
                "profile": 3,
                "profile_exponent": 2.0,
                "truncation_radius": 5.0,
                "shell_base": 1.26,
                "n_nodes": 2600,
            },
            "tasks": [{"type": "thinness", "q": 1.26, "expect": "converging"}],
        },
    )
    add(
        "example_rotation_suite",
        "All three rotation bodies of the tail-behavior example, as one suite.",
        ("thinness", "example-suite"),
        {"suite": ["thinness_f1", "thinness_f2", "thinness_f3"]},
    )
    add(
        "solvability_f1_half_mass",
        "Attractive mass 0.5 near a non-thin spike: swept mass plateaus below 1.",
        ("solvability",),
        {
            "alpha": 2.0,
            "geometry": {
                "kind": "rotation_body",
                "dim": 3,
                "profile": 1,
                "profile_exponent": 1.0,
                "truncation_radius": 8.0,
                "shell_base": 2.0,
                "mesh_scale": 0.09,
                "n_nodes": 3000,
            },
            "field": {"delta": {"sigma": _sigma([[2.0, 0.65, 0.0]], [0.5])}},
            "tasks": [
                {
                    "type": "solvability_probe",
                    "radii": [8.0, 32.0, 128.0],
                    "hypothesis": "not_thin_at_infinity",
                    "expect": "unsolvable-like",
                }
            ],
        },
    )
    add(
        "solvability_f1_unit_mass",
        "Attractive mass 1 near a non-thin spike: swept mass trends to 1, c trends to 0.",
        ("solvability",),
        {
            "alpha": 2.0,
            "geometry": {
                "kind": "rotation_body",
                "dim": 3,
                "profile": 1,
                "profile_exponent": 1.0,
                "truncation_radius": 8.0,
                "shell_base": 2.0,
                "mesh_scale": 0.09,
                "n_nodes": 3000,
            },
            "field": {"delta": {"sigma": _sigma([[2.0, 0.65, 0.0]], [1.0])}},
            "tasks": [
                {
                    "type": "solvability_probe",
                    "radii": [8.0, 32.0, 128.0],
                    "hypothesis": "not_thin_at_infinity",
                    "expect": "solvable-like",
                }
            ],
        },
    )
    add(
        "solvability_f1_double_mass",
        "Attractive mass 2 off the closure: negative plateauing c, compact support radius.",
        ("solvability",),
        {
            "alpha": 2.0,
            "geometry": {
                "kind": "rotation_body",
                "dim": 3,
                "profile": 1,
                "profile_exponent": 1.0,
                "truncation_radius": 8.0,
                "shell_base": 2.0,
                "mesh_scale": 0.09,
                "n_nodes": 3000,
            },
            "field": {"delta": {"sigma": _sigma([[2.0, 1.5, 0.0]], [2.0])}},
            "tasks": [
                {
                    "type": "solvability_probe",
                    "radii": [8.0, 32.0, 128.0],
                    "hypothesis": "not_thin_at_infinity",
                    "expect": "solvable-like",
                }
            ],
        },
    )
    add(
        "solvability_f2_unit_mass",
        "Attractive mass 1 beside a thin horn: capture stays below 1 (qualitative).",
        ("solvability",),
        {
            "alpha": 2.0,
            "geometry": {
                "kind": "rotation_body",
                "dim": 3,
                "profile": 2,
                "profile_exponent": 1.0,
                "truncation_radius": 3.0,
                "shell_base": 1.26,
                "mesh_scale": 0.05,
                "n_nodes": 2500,
            },
            "field": {"delta": {"sigma": _sigma([[1.0, 2.5, 0.0]], [1.0])}},
            "tasks": [
                {
                    "type": "solvability_probe",
                    "radii": [3.0, 4.0, 5.0],
                    "hypothesis": "thin_at_infinity",
                    "expect": "unsolvable-like",
                }
            ],
        },
    )
    add(
        "support_alpha15_ball",
        "Order 1.5 ball with an outside charge: minimizer charges the whole set.",
        ("support", "demo"),
        {
            "alpha": 1.5,
            "geometry": {"kind": "ball", "dim": 3, "radius": 1.0, "n_nodes": 1200},
            "field": {"delta": {"sigma": _sigma([[2.0, 0.0, 0.0]], [0.5])}},
            "tasks": [
                {"type": "solve_gauss"},
                {"type": "support", "prediction": "full_A", "min_jaccard": 0.95},
            ],
        },
    )
    add(
        "support_alpha2_ball",
        "Newtonian solid ball with an outside charge: minimizer lives on the boundary.",
        ("support",),
        {
            "alpha": 2.0,
            "geometry": {"kind": "ball", "dim": 3, "radius": 1.0, "n_nodes": 1200},
            "field": {"delta": {"sigma": _sigma([[2.2, 0.0, 0.0]], [0.5])}},
            "tasks": [
                {"type": "solve_gauss"},
                {
                    "type": "support",
                    "prediction": "boundary_union",
                    "min_boundary_fraction": 0.99,
                },
            ],
        },
    )
    return cat


def list_catalog(tag: str | None = None) -> list[BuiltinScenario]:
    cat = builtin_scenarios()
    out = [b for b in cat.values() if tag is None or tag in b.tags]
    return sorted(out, key=lambda b: b.name)
