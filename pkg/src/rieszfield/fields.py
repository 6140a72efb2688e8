"""External fields on the nodes of a discretized set.

Two canonical forms are supported and are mutually exclusive:

* ``psi + U^theta + U^omega`` — a lower-semicontinuous closed-form part
  sampled at the nodes, a finite-energy signed on-grid part, and a bounded
  signed off-grid part whose sources must keep positive distance to the set;
* the attractive form ``-U^delta`` with ``delta = tau + sigma``, tau on-grid
  (finite discrete energy) and sigma off-grid at positive distance.

Nodes where the field is +inf are excluded from the admissible index set
before any solve; a simplex QP cannot carry infinite coefficients, and no
minimizer charges the set where the field is infinite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .geometry import Discretization
from .kernel import DiscreteMeasure, KernelContext, external_potential

_PSI_KINDS = ("constant", "power", "region_indicator", "inf_outside_region")


@dataclass(frozen=True)
class PsiPart:
    """One catalog entry of the closed-form field component.

    kind = "constant":            value
    kind = "power":               coefficient * |x - center|^exponent
    kind = "region_indicator":    value on nodes tagged `region`, 0 elsewhere
    kind = "inf_outside_region":  0 on nodes tagged `region`, +inf elsewhere
    """

    kind: str
    value: float = 0.0
    coefficient: float = 1.0
    exponent: float = 2.0
    center: tuple[float, ...] = ()
    region: str = ""

    def validate(self) -> None:
        if self.kind not in _PSI_KINDS:
            raise ConfigurationError(f"field.psi.kind: unknown kind {self.kind!r}")
        if self.kind in ("region_indicator", "inf_outside_region") and not self.region:
            raise ConfigurationError("field.psi.region: required for region-based parts")

    def sample(self, d: Discretization) -> np.ndarray:
        if self.kind == "constant":
            return np.full(d.n_nodes, float(self.value))
        if self.kind == "power":
            c = np.asarray(self.center, dtype=float) if self.center else np.zeros(d.dim)
            r = np.linalg.norm(d.points - c, axis=1)
            return self.coefficient * r**self.exponent
        inside = d.tag_mask(self.region)
        if self.kind == "region_indicator":
            return np.where(inside, float(self.value), 0.0)
        return np.where(inside, 0.0, np.inf)


@dataclass(frozen=True)
class PointMasses:
    """Explicit point masses; used for off-grid sources and node-snapped parts."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, dtype=float)))
        object.__setattr__(self, "weights", np.atleast_1d(np.asarray(self.weights, dtype=float)))
        if self.points.shape[0] != self.weights.shape[0]:
            raise ConfigurationError("field measure: points/weights length mismatch")
        if np.any(self.weights < 0):
            raise ConfigurationError("field measure: weights must be nonnegative")

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def snap_to_nodes(self, d: Discretization) -> DiscreteMeasure:
        """Accumulate the masses onto the nearest nodes (deterministic ties: lowest index)."""
        if self.points.shape[1] != d.dim:
            raise ConfigurationError("field measure: point dimension mismatch")
        dense = np.zeros(d.n_nodes)
        for p, w in zip(self.points, self.weights):
            i = int(np.argmin(np.linalg.norm(d.points - p, axis=1)))
            dense[i] += w
        return DiscreteMeasure.from_dense(dense)

    def min_distance_to(self, d: Discretization) -> float:
        if self.points.shape[0] == 0:
            return float("inf")
        dist = np.linalg.norm(d.points[:, None, :] - self.points[None, :, :], axis=2)
        return float(dist.min())


@dataclass(frozen=True)
class FieldSpec:
    """Declarative external field; either (psi, theta, omega) or the delta form."""

    psi: tuple[PsiPart, ...] = ()
    theta_plus: PointMasses | None = None
    theta_minus: PointMasses | None = None
    omega_plus: PointMasses | None = None
    omega_minus: PointMasses | None = None
    delta_tau: PointMasses | None = None
    delta_sigma: PointMasses | None = None

    @property
    def is_delta_form(self) -> bool:
        return self.delta_tau is not None or self.delta_sigma is not None

    def validate(self) -> None:
        for p in self.psi:
            p.validate()
        if self.is_delta_form and (
            self.psi or self.theta_plus or self.theta_minus or self.omega_plus or self.omega_minus
        ):
            raise ConfigurationError(
                "field: the delta form -U^delta excludes psi/theta/omega parts"
            )


@dataclass
class DeltaSource:
    """The attractive measure delta = tau + sigma, split on-grid / off-grid."""

    on_grid: DiscreteMeasure
    external: PointMasses

    @property
    def total_mass(self) -> float:
        return self.on_grid.total_mass + self.external.total_mass

    def potential_on_nodes(self, ctx: KernelContext) -> np.ndarray:
        u = ctx.gram @ self.on_grid.to_dense(ctx.n_nodes)
        if self.external.points.shape[0]:
            u = u + external_potential(
                ctx.dim, ctx.alpha, self.external.points, self.external.weights, ctx.points
            )
        return u

    def potential_at(self, ctx: KernelContext, targets: np.ndarray) -> np.ndarray:
        """Exact kernel sums at off-node targets (both parts unregularized)."""
        u = np.zeros(np.atleast_2d(targets).shape[0])
        if self.on_grid.support.size:
            u = u + external_potential(
                ctx.dim,
                ctx.alpha,
                ctx.points[self.on_grid.support],
                self.on_grid.weights,
                targets,
            )
        if self.external.points.shape[0]:
            u = u + external_potential(
                ctx.dim, ctx.alpha, self.external.points, self.external.weights, targets
            )
        return u


@dataclass
class FieldVector:
    """Sampled field values at the nodes plus their provenance decomposition."""

    values: np.ndarray
    parts: dict[str, np.ndarray] = field(default_factory=dict)
    attractive_mass: float | None = None
    delta: DeltaSource | None = None

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def is_delta_form(self) -> bool:
        return self.delta is not None

    def to_csv(self, path: str) -> None:
        import csv as _csv

        with open(path, "w", newline="") as fh:
            w = _csv.writer(fh)
            names = sorted(self.parts)
            w.writerow(["node", "total"] + names)
            for i, v in enumerate(self.values):
                w.writerow([i, repr(float(v))] + [repr(float(self.parts[k][i])) for k in names])


def _require_off_set(sources: PointMasses, d: Discretization, label: str) -> float:
    dist = sources.min_distance_to(d)
    if not dist > 0.0:
        raise ConfigurationError(
            f"field.{label}: sources must satisfy d(S_omega, A) > 0 "
            f"(a source coincides with a node of A)"
        )
    return dist


def build_field(spec: FieldSpec, d: Discretization, ctx: KernelContext) -> FieldVector:
    """Assemble f at the nodes of ``d`` from its declared parts.

    psi parts are sampled pointwise; on-grid measures act through the
    regularized Gram matrix, off-grid measures through exact kernel sums.
    """
    spec.validate()
    n = d.n_nodes
    parts: dict[str, np.ndarray] = {}
    if spec.is_delta_form:
        tau = spec.delta_tau.snap_to_nodes(d) if spec.delta_tau else DiscreteMeasure.zero()
        sigma = spec.delta_sigma if spec.delta_sigma else PointMasses(np.zeros((0, d.dim)), [])
        if sigma.points.shape[0]:
            _require_off_set(sigma, d, "delta.sigma")
        delta = DeltaSource(on_grid=tau, external=sigma)
        parts["delta"] = -delta.potential_on_nodes(ctx)
        values = parts["delta"].copy()
        return FieldVector(
            values=values, parts=parts, attractive_mass=delta.total_mass, delta=delta
        )

    values = np.zeros(n)
    if spec.psi:
        psi = np.zeros(n)
        for part in spec.psi:
            psi = psi + part.sample(d)
        parts["psi"] = psi
        values = values + psi
    for name, plus, minus in (
        ("theta", spec.theta_plus, spec.theta_minus),
        ("omega", spec.omega_plus, spec.omega_minus),
    ):
        if plus is None and minus is None:
            continue
        contrib = np.zeros(n)
        for sgn, pm in ((1.0, plus), (-1.0, minus)):
            if pm is None or pm.points.shape[0] == 0:
                continue
            if name == "theta":
                mu = pm.snap_to_nodes(d)
                contrib = contrib + sgn * (ctx.gram @ mu.to_dense(n))
            else:
                _require_off_set(pm, d, name)
                contrib = contrib + sgn * external_potential(
                    ctx.dim, ctx.alpha, pm.points, pm.weights, d.points
                )
        parts[name] = contrib
        values = values + contrib
    return FieldVector(values=values, parts=parts)


@dataclass
class AdmissibilityCheck:
    name: str
    passed: bool
    detail: str


@dataclass
class AdmissibilityReport:
    checks: list[AdmissibilityCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def validate_admissibility(spec: FieldSpec, d: Discretization) -> AdmissibilityReport:
    """Report-only validation of the standing assumptions on the field.

    Checks: the finiteness set {psi < inf} meets the node set (otherwise the
    weighted energy is +inf over every admissible measure); off-grid sources
    keep positive distance to the set; the integrability proxy
    sum over |y| > 1 of |mu|(y)/|y|^(n - alpha) is finite (always true for
    finite point measures; recorded as informational).
    """
    checks: list[AdmissibilityCheck] = []
    try:
        spec.validate()
    except ConfigurationError as exc:
        return AdmissibilityReport([AdmissibilityCheck("spec", False, str(exc))])

    psi = np.zeros(d.n_nodes)
    for part in spec.psi:
        psi = psi + part.sample(d)
    n_finite = int(np.count_nonzero(np.isfinite(psi)))
    checks.append(
        AdmissibilityCheck(
            "finiteness_set_nonempty",
            n_finite > 0,
            f"{n_finite} of {d.n_nodes} nodes have finite psi"
            if n_finite
            else "finiteness set empty",
        )
    )

    for label, pm in (
        ("omega_plus", spec.omega_plus),
        ("omega_minus", spec.omega_minus),
        ("delta_sigma", spec.delta_sigma),
    ):
        if pm is None or pm.points.shape[0] == 0:
            continue
        dist = pm.min_distance_to(d)
        ok = dist > 0.0
        note = f"d(S, A) = {dist:.6g}"
        if ok and dist < float(np.max(d.cell_radius)):
            note += " (inside a regularization cell; potentials may be under-resolved)"
        checks.append(AdmissibilityCheck(f"{label}_distance_positive", ok, note))

    # Integrability proxy for all declared measure parts.
    total = 0.0
    for pm in (
        spec.theta_plus,
        spec.theta_minus,
        spec.omega_plus,
        spec.omega_minus,
        spec.delta_tau,
        spec.delta_sigma,
    ):
        if pm is None or pm.points.shape[0] == 0:
            continue
        r = np.linalg.norm(pm.points, axis=1)
        far = r > 1.0
        total += float(np.sum(pm.weights[far] / r[far] ** (d.dim - 0.0)))
    checks.append(
        AdmissibilityCheck(
            "tail_integrability_proxy",
            True,
            f"sum over |y|>1 of d|mu|/|y|^(n-alpha) bounded by {total:.6g} (finite measure)",
        )
    )
    return AdmissibilityReport(checks)
