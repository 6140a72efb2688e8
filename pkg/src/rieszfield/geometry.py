"""Deterministic point-cloud discretizations of the sets the solvers run on.

Shapes: spheres/circles, volumetric balls and annuli, boxes, discs embedded in
a hyperplane, rotation bodies with power-law or exponential profiles, and
unions. Every construction is seed-free and bit-stable: golden-angle spirals,
structured layers, and geometric station sweeps. Each node carries a cell
radius (default: half the nearest-neighbor distance, which guarantees that the
regularization balls used by the kernel module never overlap), a region tag,
and an optional radial shell index used by the thinness classifier.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

_KINDS = (
    "sphere",
    "ball",
    "annulus",
    "box",
    "disc_in_hyperplane",
    "rotation_body",
    "union",
)


@dataclass(frozen=True)
class GeometrySpec:
    """Declarative description of a discretizable set.

    ``n_nodes`` is a budget, not an exact count; constructions land close to
    it. ``mesh_scale`` (target node spacing) overrides the budget for shapes
    that support it, which keeps resolution fixed across truncation sweeps.
    """

    kind: str
    dim: int = 3
    n_nodes: int = 256
    center: tuple[float, ...] = ()
    radius: float = 1.0
    inner_radius: float = 0.5
    outer_radius: float = 1.0
    half_widths: tuple[float, ...] = ()
    profile: int = 1
    profile_exponent: float = 1.0
    profile_start: float | None = None
    truncation_radius: float | None = None
    shell_base: float | None = None
    mesh_scale: float | None = None
    parts: tuple["GeometrySpec", ...] = ()

    def validate(self) -> None:
        if self.kind not in _KINDS:
            raise ConfigurationError(f"geometry.kind: unknown kind {self.kind!r}")
        if self.dim < 2:
            raise ConfigurationError(f"geometry.dim: need dim >= 2, got {self.dim}")
        if self.kind != "union" and self.n_nodes < 2:
            raise ConfigurationError(f"geometry.n_nodes: need N >= 2, got {self.n_nodes}")
        if self.center and len(self.center) != self.dim:
            raise ConfigurationError("geometry.center: length must equal dim")
        if self.kind in ("sphere", "ball", "disc_in_hyperplane") and self.radius <= 0:
            raise ConfigurationError("geometry.radius: must be positive")
        if self.kind in ("sphere", "ball", "annulus") and self.dim not in (2, 3):
            raise ConfigurationError(f"geometry.dim: {self.kind} supports dim 2 or 3")
        if self.kind == "annulus":
            if not 0 < self.inner_radius < self.outer_radius:
                raise ConfigurationError(
                    "geometry.inner_radius: need 0 < inner_radius < outer_radius"
                )
        if self.kind == "box":
            if not self.half_widths or len(self.half_widths) != self.dim:
                raise ConfigurationError("geometry.half_widths: need one per dimension")
            if any(w <= 0 for w in self.half_widths):
                raise ConfigurationError("geometry.half_widths: must be positive")
        if self.kind == "disc_in_hyperplane" and self.dim != 3:
            raise ConfigurationError("geometry.dim: disc_in_hyperplane supports dim 3")
        if self.kind == "rotation_body":
            if self.dim != 3:
                raise ConfigurationError("geometry.dim: rotation_body supports dim 3")
            if self.profile not in (1, 2, 3):
                raise ConfigurationError("geometry.profile: must be 1, 2, or 3")
            s = self.profile_exponent
            if self.profile == 1 and s < 0:
                raise ConfigurationError("geometry.profile_exponent: profile 1 needs s in [0, inf)")
            if self.profile == 2 and not 0 < s <= 1:
                raise ConfigurationError("geometry.profile_exponent: profile 2 needs s in (0, 1]")
            if self.profile == 3 and s <= 1:
                raise ConfigurationError("geometry.profile_exponent: profile 3 needs s in (1, inf)")
            if self.truncation_radius is None or self.truncation_radius <= 1:
                raise ConfigurationError("geometry.truncation_radius: rotation_body needs R > 1")
        if self.shell_base is not None and self.shell_base <= 1:
            raise ConfigurationError("geometry.shell_base: need q > 1")
        if self.kind == "union":
            if len(self.parts) < 2:
                raise ConfigurationError("geometry.parts: union needs >= 2 parts")
            for p in self.parts:
                if p.dim != self.dim:
                    raise ConfigurationError("geometry.parts: dims must match")
                p.validate()

    def _center(self) -> np.ndarray:
        if self.center:
            return np.asarray(self.center, dtype=float)
        return np.zeros(self.dim)


@dataclass(frozen=True)
class Discretization:
    """Labeled point cloud: nodes, cell radii, region tags, shell indices."""

    dim: int
    points: np.ndarray
    cell_radius: np.ndarray
    region_tag: tuple[str, ...]
    shell_index: np.ndarray | None = None
    truncation_radius: float | None = None

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=1)

    def tag_mask(self, tag: str) -> np.ndarray:
        return np.array([t == tag for t in self.region_tag], dtype=bool)

    def validate(self) -> None:
        n = self.n_nodes
        if self.points.shape != (n, self.dim):
            raise ConfigurationError("points: shape mismatch with dim")
        if len(self.region_tag) != n or len(self.cell_radius) != n:
            raise ConfigurationError("region_tag/cell_radius: length mismatch")
        if np.any(self.cell_radius <= 0):
            raise ConfigurationError("cell_radius: must be positive")
        if n >= 2:
            nn = nearest_neighbor_distances(self.points)
            if np.min(nn) <= 0:
                raise ConfigurationError("points: must be pairwise distinct")
            if np.any(self.cell_radius > nn * (1 + 1e-12)):
                raise ConfigurationError("cell_radius: exceeds nearest-neighbor distance")
            if not regularization_balls_disjoint(self.points, self.cell_radius):
                raise ConfigurationError("cell_radius: regularization balls overlap")

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            coords = [f"x{i}" for i in range(self.dim)]
            w.writerow(coords + ["cell_radius", "region_tag", "shell_index"])
            shells = self.shell_index
            for i in range(self.n_nodes):
                row = [repr(float(v)) for v in self.points[i]]
                row.append(repr(float(self.cell_radius[i])))
                row.append(self.region_tag[i])
                row.append("" if shells is None else str(int(shells[i])))
                w.writerow(row)


def nearest_neighbor_distances(points: np.ndarray) -> np.ndarray:
    """Distance from each point to its nearest neighbor (dense, chunked)."""
    n = points.shape[0]
    out = np.full(n, np.inf)
    chunk = max(1, int(2e7) // max(n, 1))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        d = np.linalg.norm(points[lo:hi, None, :] - points[None, :, :], axis=2)
        d[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        out[lo:hi] = d.min(axis=1)
    return out


def regularization_balls_disjoint(points: np.ndarray, radii: np.ndarray, slack: float = 1e-12) -> bool:
    """True when dist(i, j) >= h_i + h_j for every pair (non-overlap invariant)."""
    n = points.shape[0]
    radii = np.asarray(radii, dtype=float)
    chunk = max(1, int(2e7) // max(n, 1))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        d = np.linalg.norm(points[lo:hi, None, :] - points[None, :, :], axis=2)
        gap = d - radii[lo:hi, None] - radii[None, :]
        gap[np.arange(hi - lo), np.arange(lo, hi)] = 0.0
        if gap.min() < -slack * max(1.0, float(radii.max())):
            return False
    return True


def _default_cell_radii(points: np.ndarray) -> np.ndarray:
    # Half the NN distance: regularization balls around distinct nodes cannot overlap.
    return 0.5 * nearest_neighbor_distances(points)


def _fibonacci_sphere(n: int) -> np.ndarray:
    if n == 2:
        return np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = GOLDEN_ANGLE * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _circle(n: int) -> np.ndarray:
    t = 2.0 * math.pi * np.arange(n) / n
    return np.column_stack([np.cos(t), np.sin(t)])


def _sphere_layer(n: int, radius: float, dim: int, phase: float = 0.0) -> np.ndarray:
    if dim == 2:
        t = 2.0 * math.pi * np.arange(n) / n + phase
        return radius * np.column_stack([np.cos(t), np.sin(t)])
    pts = _fibonacci_sphere(n)
    if phase != 0.0:
        c, s = math.cos(phase), math.sin(phase)
        x, y = pts[:, 0].copy(), pts[:, 1].copy()
        pts[:, 0] = c * x - s * y
        pts[:, 1] = s * x + c * y
    return radius * pts


def _layer_counts(weights: np.ndarray, total: int, minimum: int) -> np.ndarray:
    raw = weights / weights.sum() * total
    counts = np.maximum(minimum, np.round(raw).astype(int))
    return counts


def _shell_layers(
    radii: np.ndarray, budget: int, dim: int, include_center: bool
) -> tuple[np.ndarray, list[int]]:
    weights = radii ** (dim - 1)
    counts = _layer_counts(weights, budget, minimum=4 if dim == 3 else 3)
    pts = []
    layer_of: list[int] = []
    if include_center:
        pts.append(np.zeros((1, dim)))
        layer_of.append(-1)
    for k, (r, m) in enumerate(zip(radii, counts)):
        pts.append(_sphere_layer(int(m), float(r), dim, phase=0.37 * (k + 1)))
        layer_of.extend([k] * int(m))
    return np.vstack(pts), layer_of


def _build_sphere(spec: GeometrySpec) -> Discretization:
    pts = _sphere_layer(spec.n_nodes, spec.radius, spec.dim) + spec._center()
    tags = tuple("boundary" for _ in range(pts.shape[0]))
    return _finish(spec, pts, tags)


def _build_ball(spec: GeometrySpec) -> Discretization:
    n, dim = spec.n_nodes, spec.dim
    n_layers = max(2, int(round((0.30 * n) ** (1.0 / dim))))
    radii = spec.radius * (np.arange(1, n_layers + 1) / n_layers)
    pts, layer_of = _shell_layers(radii, n - 1, dim, include_center=True)
    pts = pts + spec._center()
    tags = tuple("boundary" if k == n_layers - 1 else "interior" for k in layer_of)
    return _finish(spec, pts, tags)


def _build_annulus(spec: GeometrySpec) -> Discretization:
    n, dim = spec.n_nodes, spec.dim
    a, b = spec.inner_radius, spec.outer_radius
    n_layers = max(2, int(round((0.30 * n) ** (1.0 / dim) * (b - a) / b)) + 1)
    radii = np.linspace(a, b, n_layers)
    pts, layer_of = _shell_layers(radii, n, dim, include_center=False)
    pts = pts + spec._center()
    tags = tuple(
        "boundary" if k in (0, n_layers - 1) else "interior" for k in layer_of
    )
    return _finish(spec, pts, tags)


def _build_box(spec: GeometrySpec) -> Discretization:
    dim = spec.dim
    hw = np.asarray(spec.half_widths, dtype=float)
    vol = float(np.prod(2 * hw))
    h = (vol / spec.n_nodes) ** (1.0 / dim)
    axes = [np.linspace(-w, w, max(2, int(round(2 * w / h)) + 1)) for w in hw]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids]) + spec._center()
    on_face = np.zeros(pts.shape[0], dtype=bool)
    for d_ax, ax in enumerate(axes):
        rel = pts[:, d_ax] - spec._center()[d_ax]
        on_face |= np.isclose(rel, ax[0]) | np.isclose(rel, ax[-1])
    tags = tuple("boundary" if f else "interior" for f in on_face)
    return _finish(spec, pts, tags)


def _build_disc(spec: GeometrySpec) -> Discretization:
    # Sunflower layout in the hyperplane x3 = 0; rim ring tagged "boundary".
    n = spec.n_nodes
    i = np.arange(n)
    r = spec.radius * np.sqrt((i + 0.5) / n)
    phi = GOLDEN_ANGLE * i
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), np.zeros(n)])
    pts = pts + spec._center()
    rim = spec.radius * (1.0 - 1.1 / math.sqrt(n))
    tags = tuple("boundary" if ri >= rim else "interior" for ri in r)
    return _finish(spec, pts, tags)


def _rotation_profile(spec: GeometrySpec):
    s = spec.profile_exponent
    if spec.profile == 1:
        return lambda t: t ** (-s) if s != 0 else 1.0 + 0.0 * t
    return lambda t: np.exp(-(t**s))


def _build_rotation_body(spec: GeometrySpec) -> Discretization:
    """Surface sweep of {x2^2 + x3^2 <= rho(x1)^2, a <= x1 <= R}: end cap + rings."""
    rho = _rotation_profile(spec)
    R = float(spec.truncation_radius)
    a = spec.profile_start if spec.profile_start is not None else (1.0 if spec.profile == 1 else 0.0)
    if a >= R:
        raise ConfigurationError("geometry.profile_start: must be below truncation_radius")
    # Target spacing from the budget via the lateral-surface area estimate.
    if spec.mesh_scale is not None:
        g = float(spec.mesh_scale)
    else:
        ts = np.linspace(a, R, 4096)
        rs = np.atleast_1d(rho(ts))
        drs = np.gradient(rs, ts)
        area = float(np.trapezoid(2 * math.pi * rs * np.sqrt(1 + drs**2), ts))
        area += math.pi * float(rho(max(a, 1e-12)) if a > 0 else rho(1e-12)) ** 2
        g = math.sqrt(max(area, 1e-12) / spec.n_nodes)
    pts = []
    tags = []
    # End cap at the fat end (skipped when the profile blows up there).
    if spec.profile != 1 or a > 0:
        r0 = float(rho(max(a, 1e-12)))
        if np.isfinite(r0) and r0 > 1.5 * g:
            m_cap = max(4, int(round(math.pi * r0**2 / g**2)))
            j = np.arange(m_cap)
            rr = r0 * np.sqrt((j + 0.5) / m_cap) * (1 - 1e-9)
            ph = GOLDEN_ANGLE * j
            pts.append(np.column_stack([np.full(m_cap, a), rr * np.cos(ph), rr * np.sin(ph)]))
            tags.extend(["boundary"] * m_cap)
    # Stations along x1 with gap ~ g, rings of >= 3 nodes each. When a cap was
    # placed its rim already covers the first station, so start one gap in.
    t = (a + g) if tags else (a if a > 0 else g)
    k = 0
    while t < R * (1.0 - 1e-9):
        r_t = float(rho(t))
        m = max(3, int(round(2 * math.pi * r_t / g)))
        ph = GOLDEN_ANGLE * k + 2 * math.pi * np.arange(m) / m
        ring = np.column_stack([np.full(m, t), r_t * np.cos(ph), r_t * np.sin(ph)])
        keep = np.linalg.norm(ring, axis=1) < R
        if keep.any():
            pts.append(ring[keep])
            tags.extend(["boundary"] * int(keep.sum()))
        t += g
        k += 1
    if not pts:
        raise ConfigurationError("geometry.n_nodes: budget too small for rotation_body")
    all_pts = np.vstack(pts) + spec._center()
    return _finish(spec, all_pts, tuple(tags))


def _build_union(spec: GeometrySpec) -> Discretization:
    parts = [discretize(p) for p in spec.parts]
    pts = np.vstack([p.points for p in parts])
    tags = tuple(t for p in parts for t in p.region_tag)
    return _finish(spec, pts, tags)


def _finish(spec: GeometrySpec, pts: np.ndarray, tags: tuple[str, ...]) -> Discretization:
    pts = np.asarray(pts, dtype=float)
    radii = _default_cell_radii(pts) if pts.shape[0] >= 2 else np.full(pts.shape[0], 0.5)
    shells = None
    if spec.shell_base is not None:
        shells = shell_indices(pts, spec.shell_base)
    d = Discretization(
        dim=spec.dim,
        points=pts,
        cell_radius=radii,
        region_tag=tags,
        shell_index=shells,
        truncation_radius=spec.truncation_radius,
    )
    d.validate()
    return d


_BUILDERS = {
    "sphere": _build_sphere,
    "ball": _build_ball,
    "annulus": _build_annulus,
    "box": _build_box,
    "disc_in_hyperplane": _build_disc,
    "rotation_body": _build_rotation_body,
    "union": _build_union,
}


def discretize(spec: GeometrySpec) -> Discretization:
    """Build the labeled point cloud for ``spec``.

    Raises :class:`ConfigurationError` naming the offending field when a
    parameter is outside its validity range.
    """
    spec.validate()
    return _BUILDERS[spec.kind](spec)


def shell_indices(points: np.ndarray, q: float) -> np.ndarray:
    """Radial shell index k with q^k <= |x| < q^{k+1}; -1 for |x| < 1."""
    if q <= 1:
        raise ConfigurationError("shell_base: need q > 1")
    norms = np.linalg.norm(points, axis=1)
    idx = np.full(points.shape[0], -1, dtype=int)
    far = norms >= 1.0
    idx[far] = np.floor(np.log(norms[far]) / math.log(q)).astype(int)
    # Guard against log/floor roundoff at shell boundaries.
    idx[far] = np.where(norms[far] >= q ** (idx[far] + 1), idx[far] + 1, idx[far])
    idx[far] = np.where(norms[far] < q ** idx[far], idx[far] - 1, idx[far])
    return idx


def shell_decompose(d: Discretization, q: float) -> dict[int, np.ndarray]:
    """Group node indices by radial shell; nodes with |x| < 1 map to shell -1."""
    idx = shell_indices(d.points, q)
    out: dict[int, np.ndarray] = {}
    for k in sorted(set(idx.tolist())):
        out[int(k)] = np.flatnonzero(idx == k)
    return out


@dataclass(frozen=True)
class MonotoneFamily:
    """Nested node masks over one master discretization (one shared Gram)."""

    master: Discretization
    masks: list[np.ndarray] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    direction: str = "increasing"

    def validate(self) -> None:
        for a, b in zip(self.masks, self.masks[1:]):
            if not np.all(b[np.flatnonzero(a)] if self.direction == "increasing" else a[np.flatnonzero(b)]):
                raise ConfigurationError("monotone family: masks are not nested")
        if any(not m.any() for m in self.masks):
            raise ConfigurationError("monotone family: empty mask")


def _radial_score(d: Discretization, center: np.ndarray) -> np.ndarray:
    return np.linalg.norm(d.points - center, axis=1)


def monotone_family(spec: GeometrySpec, direction: str, count: int) -> MonotoneFamily:
    """Nested mask family over one master discretization of ``spec``.

    Increasing families grow toward the full node set (last mask = everything);
    decreasing families shrink from the full node set. Cutoffs follow the
    shape's natural sweep: radius for balls/boxes/annuli, polar caps for
    spheres, |x| truncations (geometric) for rotation bodies.
    """
    if count < 2:
        raise ConfigurationError("monotone_family: count must be >= 2")
    if direction not in ("increasing", "decreasing"):
        raise ConfigurationError("monotone_family: direction must be increasing|decreasing")
    spec.validate()
    d = discretize(spec)
    c = spec._center()
    masks: list[np.ndarray] = []
    labels: list[str] = []
    if spec.kind == "sphere":
        # Growing (or shrinking) polar caps measured from the first node.
        axis = d.points[0] - c
        axis = axis / np.linalg.norm(axis)
        ang = np.arccos(np.clip((d.points - c) @ axis / np.linalg.norm(d.points - c, axis=1), -1, 1))
        if direction == "increasing":
            cuts = [math.pi * (j + 1) / count for j in range(count)]
        else:
            cuts = [math.pi * (1.0 - 0.5 * j / (count - 1)) for j in range(count)]
        for cut in cuts:
            masks.append(ang <= cut + 1e-12)
            labels.append(f"cap<={cut:.4f}")
    elif spec.kind == "annulus":
        a, b = spec.inner_radius, spec.outer_radius
        r = _radial_score(d, c)
        if direction == "increasing":
            bands = [(a, a + (b - a) * (j + 1) / count) for j in range(count)]
        else:
            shrink = 0.3 * (b - a)
            bands = [
                (a + shrink * j / (count - 1), b - shrink * j / (count - 1))
                for j in range(count)
            ]
        for lo, hi in bands:
            masks.append((r >= lo - 1e-12) & (r <= hi + 1e-12))
            labels.append(f"[{lo:.4f},{hi:.4f}]")
    elif spec.kind == "rotation_body":
        r = d.norms()
        R = float(spec.truncation_radius)
        if direction == "increasing":
            cuts = [R * 0.5 ** (count - 1 - j) for j in range(count)]
        else:
            cuts = [R * 0.5**j for j in range(count)]
        for cut in cuts:
            masks.append(r <= cut + 1e-12)
            labels.append(f"R<={cut:g}")
    else:
        r = _radial_score(d, c)
        rmax = float(r.max())
        if direction == "increasing":
            cuts = [rmax * (j + 1) / count for j in range(count)]
        else:
            cuts = [rmax * (1.0 - 0.5 * j / (count - 1)) for j in range(count)]
        for cut in cuts:
            masks.append(r <= cut + 1e-12)
            labels.append(f"r<={cut:.4f}")
    fam = MonotoneFamily(master=d, masks=masks, labels=labels, direction=direction)
    fam.validate()
    return fam


def restrict(d: Discretization, indices: np.ndarray) -> Discretization:
    """Sub-cloud on the given node indices.

    Cell radii are inherited, not recomputed: they describe the original mesh
    cells, and nearest-neighbor distances only grow under restriction, so the
    non-overlap invariant is preserved.
    """
    idx = np.asarray(indices)
    if idx.dtype == bool:
        idx = np.flatnonzero(idx)
    return Discretization(
        dim=d.dim,
        points=d.points[idx],
        cell_radius=np.asarray(d.cell_radius)[idx],
        region_tag=tuple(d.region_tag[i] for i in idx),
        shell_index=None if d.shell_index is None else np.asarray(d.shell_index)[idx],
        truncation_radius=d.truncation_radius,
    )


def truncation_sweep(spec: GeometrySpec, radii: list[float]) -> list[Discretization]:
    """Independent discretizations of one unbounded shape at growing truncations."""
    out = []
    for R in radii:
        out.append(discretize(replace(spec, truncation_radius=float(R))))
    return out
