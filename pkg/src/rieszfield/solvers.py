"""Convex programs on the discrete energy form.

Three problem families, all with the (regularized) Gram matrix K as the
quadratic form:

* the Gauss problem  min x'Kx + 2 f'x  over the probability simplex;
* obstacle-class problems  min x'Kx  over {x >= 0, (Kx)_i >= b_i on a mask}
  (the capacitary measure for b = 1, the swept-measure class for b = U^delta);
* balayage as cone projection  min ||x - delta||_K^2  over {x >= 0 on a mask}.

The backend is projected gradient with Barzilai-Borwein steps plus an
active-set polish that solves the reduced KKT system on the detected support
and certifies the residuals. Obstacle-class problems are solved by a separate
block-pivoting active-set method, so the projection and class formulations
cross-validate each other rather than sharing one code path.

All solves are deterministic: fixed starts, index-ordered pivot rules, no RNG.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UnsolvableError
from .kernel import DiscreteMeasure, KernelContext

DEFAULT_TOL_REL = 1e-8
_MAX_ITER = 2000
_POLISH_EVERY = 20


@dataclass(frozen=True)
class KKTResiduals:
    """Certified first-order residuals, in potential units.

    stationarity: max deviation of the (weighted) potential from its level on
    the support; complementarity: worst violation of the inequality side off
    the support; feasibility: constraint violation of the iterate itself.
    """

    stationarity: float
    complementarity: float
    feasibility: float

    @property
    def max(self) -> float:
        return max(self.stationarity, self.complementarity, self.feasibility)

    def within(self, tol: float) -> bool:
        return self.max <= tol


@dataclass
class SolveReport:
    minimizer: DiscreteMeasure
    objective: float
    kkt: KKTResiduals
    iterations: int
    converged: bool
    tolerance_used: float
    robin_constant: float | None = None
    eta: float | None = None
    capacity: float | None = None
    extras: dict = field(default_factory=dict)


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1} (sort-based, exact)."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.flatnonzero(u * np.arange(1, y.size + 1) > css)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def resolve_tolerance(gram: np.ndarray, tol_rel: float) -> float:
    """Absolute KKT tolerance: tol_rel times the median Gram diagonal."""
    return float(tol_rel) * float(np.median(np.diag(gram)))


def _as_indices(mask, n: int) -> np.ndarray:
    m = np.asarray(mask)
    if m.dtype == bool:
        if m.shape != (n,):
            raise ConfigurationError("mask: boolean mask length mismatch")
        return np.flatnonzero(m)
    idx = m.astype(int)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ConfigurationError("mask: node index out of range")
    return idx


# ---------------------------------------------------------------------------
# KKT residuals
# ---------------------------------------------------------------------------


def _kkt_simplex(K: np.ndarray, f: np.ndarray, x: np.ndarray) -> tuple[KKTResiduals, float]:
    h = K @ x + f
    c_est = float(x @ h)  # support level; exact multiplier at the optimum
    supp = x > 0
    stat = float(np.max(np.abs(h[supp] - c_est))) if supp.any() else 0.0
    compl = float(max(0.0, c_est - np.min(h)))
    feas = float(abs(x.sum() - 1.0) + max(0.0, -x.min()))
    return KKTResiduals(stat, compl, feas), c_est


def _kkt_cone(K: np.ndarray, c: np.ndarray, x: np.ndarray) -> KKTResiduals:
    h = K @ x - c
    supp = x > 0
    stat = float(np.max(np.abs(h[supp]))) if supp.any() else 0.0
    compl = float(max(0.0, -np.min(h)))
    feas = float(max(0.0, -x.min()))
    return KKTResiduals(stat, compl, feas)


# ---------------------------------------------------------------------------
# Projected Barzilai-Borwein gradient with active-set polish
# ---------------------------------------------------------------------------


def _support_guess(x: np.ndarray) -> np.ndarray:
    top = float(x.max(initial=0.0))
    if top <= 0.0:
        return np.zeros(x.size, dtype=bool)
    return x > 1e-12 * top


def _polish_simplex(K, f, support, tol):
    """One-shot reduced-KKT solve on `support`; None if it fails to certify."""
    idx = np.flatnonzero(support)
    m = idx.size
    if m == 0:
        return None
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = K[np.ix_(idx, idx)]
    A[:m, m] = -1.0
    A[m, :m] = 1.0
    rhs = np.concatenate([-f[idx], [1.0]])
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return None
    xs = sol[:m]
    if xs.min(initial=0.0) < -1e-12 * max(1.0, xs.max(initial=0.0)):
        return None
    x = np.zeros(K.shape[0])
    x[idx] = np.maximum(xs, 0.0)
    x /= x.sum()
    kkt, c_est = _kkt_simplex(K, f, x)
    if kkt.within(tol):
        return x, kkt, c_est
    return None


def _polish_cone(K, c, support, tol):
    idx = np.flatnonzero(support)
    x = np.zeros(K.shape[0])
    if idx.size:
        try:
            xs = np.linalg.solve(K[np.ix_(idx, idx)], c[idx])
        except np.linalg.LinAlgError:
            return None
        if xs.min(initial=0.0) < -1e-12 * max(1.0, abs(xs).max(initial=0.0)):
            return None
        x[idx] = np.maximum(xs, 0.0)
    kkt = _kkt_cone(K, c, x)
    if kkt.within(tol):
        return x, kkt
    return None


def _bb_loop(K, grad_lin, project, x0, tol, max_iter, polish):
    """Minimize x'Kx + 2 grad_lin'x over the projected set; returns final state.

    `polish` is called on the current support guess; when it certifies, the
    loop exits with the polished point.
    """
    x = project(np.asarray(x0, dtype=float))
    h = K @ x + grad_lin
    step = 1.0 / max(float(np.median(np.diag(K))), 1e-300)
    for it in range(1, max_iter + 1):
        if it % _POLISH_EVERY == 0 or it == 1:
            out = polish(_support_guess(x))
            if out is not None:
                return out[0], it, True
        x_new = project(x - step * h)
        h_new = K @ x_new + grad_lin
        dx = x_new - x
        dh = h_new - h
        denom = float(dx @ dh)
        if denom > 0:
            step = float(dx @ dx) / denom
        x, h = x_new, h_new
    out = polish(_support_guess(x))
    if out is not None:
        return out[0], max_iter, True
    return x, max_iter, False


def qp_solve(
    K: np.ndarray,
    lin: np.ndarray,
    constraint: str = "simplex",
    tol: float = 1e-10,
    max_iter: int = _MAX_ITER,
    x0: np.ndarray | None = None,
):
    """Projected-gradient QP backend: min x'Kx + 2 lin'x over the constraint set.

    Parameters
    ----------
    K : (m, m) symmetric positive definite matrix.
    lin : (m,) linear coefficient (the field for the Gauss problem, minus the
        obstacle data for cone problems).
    constraint : "simplex" for {x >= 0, sum x = 1}; "nonneg" for {x >= 0};
        "nonneg_obstacle" accepts `lin = -obstacle` and is algebraically the
        same cone problem (kept for the record: obstacle QPs reduce to cone
        projections of a virtual source, see solve_min_energy_in_class).
    tol : absolute KKT tolerance (potential units).
    max_iter : projected-gradient iteration cap.
    x0 : optional feasible start.

    Returns
    -------
    x, kkt, iterations, converged
    """
    m = K.shape[0]
    if constraint == "simplex":
        start = np.full(m, 1.0 / m) if x0 is None else project_simplex(x0)
        polish = lambda s: _polish_simplex(K, lin, s, tol)
        x, it, _ = _bb_loop(K, lin, project_simplex, start, tol, max_iter, polish)
        kkt, _ = _kkt_simplex(K, lin, x)
        return x, kkt, it, kkt.within(tol)
    if constraint in ("nonneg", "nonneg_obstacle"):
        c = -lin
        start = np.maximum(c / np.diag(K), 0.0) if x0 is None else np.maximum(x0, 0.0)
        proj = lambda v: np.maximum(v, 0.0)
        polish = lambda s: _polish_cone(K, c, s, tol)
        x, it, _ = _bb_loop(K, lin, proj, start, tol, max_iter, polish)
        kkt = _kkt_cone(K, c, x)
        return x, kkt, it, kkt.within(tol)
    raise ConfigurationError(f"qp_solve: unknown constraint set {constraint!r}")


# ---------------------------------------------------------------------------
# Block-pivoting active set for the obstacle-class problems
# ---------------------------------------------------------------------------


def _active_set_nnq(K: np.ndarray, c: np.ndarray, tol: float, max_rounds: int = 120):
    """min x'Kx - 2 c'x over x >= 0 by block principal pivoting.

    The passive set starts full; infeasible primal entries (x < 0) and dual
    entries ((Kx - c) < 0) are exchanged in blocks, falling back to
    single-index (lowest-index) moves if the infeasibility count stalls.
    Finite termination for positive definite K.
    """
    m = K.shape[0]
    passive = np.ones(m, dtype=bool)
    x = np.zeros(m)
    # `tol` lives in potential units; primal weights live in mass units.
    tol_x = tol / max(float(np.median(np.diag(K))), 1e-300)
    last_count = np.inf
    stall = 0
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        idx = np.flatnonzero(passive)
        x = np.zeros(m)
        if idx.size:
            try:
                x[idx] = np.linalg.solve(K[np.ix_(idx, idx)], c[idx])
            except np.linalg.LinAlgError:
                x[idx] = np.linalg.lstsq(K[np.ix_(idx, idx)], c[idx], rcond=None)[0]
        h = K @ x - c
        bad_x = passive & (x < -tol_x)
        bad_h = ~passive & (h < -tol)
        count = int(bad_x.sum() + bad_h.sum())
        if count == 0:
            x = np.maximum(x, 0.0)
            return x, rounds, True
        if count >= last_count:
            stall += 1
        else:
            stall = 0
        last_count = count
        if stall >= 3:
            # Murty's rule: move only the lowest violated index.
            cand = np.flatnonzero(bad_x | bad_h)
            j = int(cand[0])
            passive[j] = not passive[j]
        else:
            passive[bad_x] = False
            passive[bad_h] = True
    return np.maximum(x, 0.0), rounds, False


# ---------------------------------------------------------------------------
# Problem-level solvers
# ---------------------------------------------------------------------------


def solve_gauss(
    ctx: KernelContext,
    mask,
    field=None,
    tol_rel: float = DEFAULT_TOL_REL,
    max_iter: int = _MAX_ITER,
    x0: np.ndarray | None = None,
) -> SolveReport:
    """Minimize the weighted energy x'Kx + 2 f'x over probability vectors on the mask.

    Nodes where the field is +inf are removed from the admissible index set
    before solving. Raises :class:`UnsolvableError` when nothing remains (the
    infimum over the empty class is +inf). The report carries the optimal
    value w_f, the equilibrium (Robin) constant c = w_f - f'x*, and certified
    KKT residuals: (Kx* + f) >= c on the mask with equality on the support —
    the Frostman conditions.
    """
    idx = _as_indices(mask, ctx.n_nodes)
    if field is None:
        f_full = np.zeros(ctx.n_nodes)
    elif hasattr(field, "values"):
        f_full = np.asarray(field.values, dtype=float)
    else:
        f_full = np.asarray(field, dtype=float)
    idx = idx[np.isfinite(f_full[idx])]
    if idx.size == 0:
        raise UnsolvableError("w_f(A) = +inf: empty admissible class after removing f = +inf nodes")
    K = ctx.gram[np.ix_(idx, idx)]
    f = f_full[idx]
    tol = resolve_tolerance(K, tol_rel)
    x, kkt, iters, ok = qp_solve(K, f, "simplex", tol, max_iter, x0)
    w = float(x @ (K @ x) + 2.0 * f @ x)
    robin = w - float(f @ x)
    keep = x > 0
    mu = DiscreteMeasure(support=idx[keep], weights=x[keep])
    return SolveReport(
        minimizer=mu,
        objective=w,
        kkt=kkt,
        iterations=iters,
        converged=ok,
        tolerance_used=tol,
        robin_constant=robin,
        extras={"admissible_nodes": int(idx.size)},
    )


def solve_capacitary(
    ctx: KernelContext,
    mask,
    tol_rel: float = DEFAULT_TOL_REL,
) -> SolveReport:
    """Minimize the energy subject to potential >= 1 at every mask node.

    The minimizer's total mass is the discrete capacity, and at the exact
    optimum energy = mass (complementary slackness), which the report records
    as `identity_gap`.
    """
    idx = _as_indices(mask, ctx.n_nodes)
    if idx.size == 0:
        raise UnsolvableError("capacitary problem: empty mask")
    K = ctx.gram[np.ix_(idx, idx)]
    tol = resolve_tolerance(K, tol_rel)
    ones = np.ones(idx.size)
    x, rounds, ok = _active_set_nnq(K, ones, tol)
    kkt = _kkt_cone(K, ones, x)
    en = float(x @ (K @ x))
    mass = float(x.sum())
    keep = x > 0
    mu = DiscreteMeasure(support=idx[keep], weights=x[keep])
    return SolveReport(
        minimizer=mu,
        objective=en,
        kkt=kkt,
        iterations=rounds,
        converged=ok and kkt.within(tol),
        tolerance_used=tol,
        capacity=mass,
        extras={"identity_gap": abs(en - mass)},
    )


def _delta_data(ctx: KernelContext, delta):
    """(potential at all nodes, total mass, dense on-grid vector or None)."""
    if isinstance(delta, DiscreteMeasure):
        dense = delta.to_dense(ctx.n_nodes)
        return ctx.gram @ dense, delta.total_mass, dense
    # DeltaSource from the fields module (on-grid + external parts).
    u = delta.potential_on_nodes(ctx)
    dense = delta.on_grid.to_dense(ctx.n_nodes) if delta.on_grid.support.size else None
    if delta.external.points.shape[0] == 0 and dense is not None:
        return u, delta.total_mass, dense
    return u, delta.total_mass, None


def solve_balayage(
    ctx: KernelContext,
    delta,
    mask,
    tol_rel: float = DEFAULT_TOL_REL,
    max_iter: int = _MAX_ITER,
    x0: np.ndarray | None = None,
) -> SolveReport:
    """Sweep delta onto the mask: energy-orthogonal projection onto the cone
    of nonnegative measures supported there.

    Solved by projected gradient on ||nu - delta||_K^2 (equivalently, on the
    reduced form I(nu) - 2 <U^delta, nu>). KKT certifies U^nu >= U^delta at
    every mask node with equality on the support of nu. Extras record the
    swept-to-original mass ratio (<= 1 up to tolerance for sane geometry) and
    the worst excess U^nu - U^delta over nodes outside the mask; the excess is
    a report, not an assertion — pointwise domination off the set is a
    property of orders alpha <= 2.
    """
    idx = _as_indices(mask, ctx.n_nodes)
    if idx.size == 0:
        raise UnsolvableError("balayage: empty mask")
    u_delta, d_mass, dense_delta = _delta_data(ctx, delta)
    K = ctx.gram[np.ix_(idx, idx)]
    c = u_delta[idx]
    tol = resolve_tolerance(K, tol_rel)
    x, kkt, iters, ok = qp_solve(K, -c, "nonneg", tol, max_iter, x0)
    keep = x > 0
    mu = DiscreteMeasure(support=idx[keep], weights=x[keep])
    dense_nu = mu.to_dense(ctx.n_nodes)
    if dense_delta is not None:
        diff = dense_nu - dense_delta
        objective = float(diff @ (ctx.gram @ diff))
        distance = float(np.sqrt(max(0.0, objective)))
    else:
        # External sources have no finite discrete self-energy; report the
        # reduced objective I(nu) - 2 int U^delta d nu (same minimizer).
        objective = float(x @ (K @ x) - 2.0 * c @ x)
        distance = None
    u_nu = ctx.gram @ dense_nu
    off = np.ones(ctx.n_nodes, dtype=bool)
    off[idx] = False
    extras = {
        "mass": mu.total_mass,
        "mass_ratio": (mu.total_mass / d_mass) if d_mass > 0 else None,
        "off_mask_excess": float(np.max(u_nu[off] - u_delta[off])) if off.any() else None,
        "distance": distance,
    }
    return SolveReport(
        minimizer=mu,
        objective=objective,
        kkt=kkt,
        iterations=iters,
        converged=ok,
        tolerance_used=tol,
        extras=extras,
    )


def solve_min_energy_in_class(
    ctx: KernelContext,
    obstacle: np.ndarray,
    mask,
    search_support=None,
    tol_rel: float = DEFAULT_TOL_REL,
) -> SolveReport:
    """Minimize the energy over {nu >= 0: U^nu >= obstacle at every mask node}.

    Solved by block-pivoting active set on the equivalent complementarity
    system: at the optimum the primal weights coincide with the obstacle
    multipliers, so the solution is supported in the mask even when
    `search_support` is a strict superset (extra candidate nodes carry zero
    weight and zero multiplier; allowing them cannot lower the energy).
    """
    idx = _as_indices(mask, ctx.n_nodes)
    if idx.size == 0:
        raise UnsolvableError("class problem: empty mask")
    if search_support is not None:
        sidx = _as_indices(search_support, ctx.n_nodes)
        if np.setdiff1d(idx, sidx).size:
            raise ConfigurationError("search_support must contain the obstacle mask")
    b_full = np.asarray(obstacle, dtype=float)
    b = b_full[idx] if b_full.size == ctx.n_nodes else b_full
    if b.size != idx.size:
        raise ConfigurationError("obstacle: length must match the mask or the full node set")
    if not np.all(np.isfinite(b)):
        raise ConfigurationError("obstacle: entries must be finite")
    K = ctx.gram[np.ix_(idx, idx)]
    tol = resolve_tolerance(K, tol_rel)
    x, rounds, ok = _active_set_nnq(K, b, tol)
    kkt = _kkt_cone(K, b, x)
    keep = x > 0
    mu = DiscreteMeasure(support=idx[keep], weights=x[keep])
    return SolveReport(
        minimizer=mu,
        objective=float(x @ (K @ x)),
        kkt=kkt,
        iterations=rounds,
        converged=ok and kkt.within(tol),
        tolerance_used=tol,
        extras={"mass": mu.total_mass, "obstacle_slack": float(np.min(K @ x - b))},
    )
