"""Config-driven entry point: geometry -> kernel -> field -> solve -> diagnose.

Exit status: 0 when every certified check passed, 1 on solver
non-convergence or failed certificates, 2 on config/parse/admissibility
errors. A machine-readable summary.json is written for every scenario that
reaches the run stage, regardless of outcome.

Heavy imports happen inside functions so that --threads can pin the BLAS
thread pools before numpy loads (fixed thread count is the determinism
contract: re-running an unchanged config reproduces byte-identical
summaries).
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _set_threads(n: int) -> None:
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ[var] = str(n)


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if v != v:
            return "nan"
        if v in (float("inf"), float("-inf")):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in row])


def _kkt_dict(kkt) -> dict:
    return {
        "stationarity": kkt.stationarity,
        "complementarity": kkt.complementarity,
        "feasibility": kkt.feasibility,
    }


def _solve_payload(rep) -> dict:
    out = {
        "objective": rep.objective,
        "kkt": _kkt_dict(rep.kkt),
        "iterations": rep.iterations,
        "converged": rep.converged,
        "tolerance_used": rep.tolerance_used,
        "mass": rep.minimizer.total_mass,
        "support_size": int(rep.minimizer.support.size),
        "weights": {
            "support": rep.minimizer.support,
            "weights": rep.minimizer.weights,
        },
    }
    for key in ("robin_constant", "eta", "capacity"):
        val = getattr(rep, key)
        if val is not None:
            out[key] = val
    out.update(rep.extras)
    return out


class _Runner:
    """Executes one scenario's tasks with shared geometry/kernel/field state."""

    def __init__(self, scn, tol_override=None):
        import numpy as np

        from .fields import build_field, validate_admissibility
        from .geometry import discretize
        from .kernel import assemble_gram

        from .errors import ConfigurationError

        self.scn = scn
        self.tol_rel = tol_override if tol_override is not None else scn.solver_tol
        self.d = discretize(scn.geometry)
        self.ctx = assemble_gram(self.d, scn.alpha)
        self.fv = build_field(scn.field_spec, self.d, self.ctx)
        adm = validate_admissibility(scn.field_spec, self.d)
        self.admissibility = adm
        if not adm.passed and not scn.allow_admissibility_warnings:
            reasons = "; ".join(c.detail for c in adm.checks if not c.passed)
            raise ConfigurationError(f"admissibility: {reasons}")
        self.full_mask = np.arange(self.d.n_nodes)
        self._cache: dict = {}

    def gauss(self):
        from .solvers import solve_gauss

        if "gauss" not in self._cache:
            self._cache["gauss"] = solve_gauss(self.ctx, self.full_mask, self.fv, tol_rel=self.tol_rel)
        return self._cache["gauss"]

    def capacitary(self):
        from .solvers import solve_capacitary

        if "capacitary" not in self._cache:
            self._cache["capacitary"] = solve_capacitary(self.ctx, self.full_mask, tol_rel=self.tol_rel)
        return self._cache["capacitary"]

    def balayage(self):
        from .solvers import solve_balayage

        if "balayage" not in self._cache:
            self._cache["balayage"] = solve_balayage(
                self.ctx, self.fv.delta, self.full_mask, tol_rel=self.tol_rel
            )
        return self._cache["balayage"]

    # -- task handlers: return (payload dict, passed bool, csv files dict) --

    def run_task(self, task: dict):
        kind = task["type"]
        return getattr(self, f"_task_{kind}")(task)

    def _task_solve_gauss(self, task):
        rep = self.gauss()
        return _solve_payload(rep), rep.converged, {}

    def _task_capacitary(self, task):
        rep = self.capacitary()
        return _solve_payload(rep), rep.converged, {}

    def _task_balayage(self, task):
        rep = self.balayage()
        return _solve_payload(rep), rep.converged, {}

    def _task_frostman(self, task):
        from .diagnostics import check_frostman

        rep = self.gauss()
        tol = task.get("tol", self.scn.check_tol)
        fr = check_frostman(self.ctx, self.full_mask, self.fv, rep.minimizer, tol=tol)
        payload = {
            "c1": fr.c1,
            "c2": fr.c2,
            "min_over_A": fr.min_over_A,
            "max_dev_on_support": fr.max_dev_on_support,
            "tolerance": fr.tolerance,
            "passed": fr.passed,
        }
        return payload, fr.passed, {}

    def _task_representation(self, task):
        from .diagnostics import check_characterization_iii, check_representation

        lam = self.gauss().minimizer
        tol = task.get("tol", self.scn.check_tol) or 1e-6
        rep = check_representation(
            self.ctx,
            self.full_mask,
            self.fv.delta,
            lam,
            tol=tol,
            tol_rel=self.tol_rel,
            precomputed=(self.balayage(), self.capacitary()),
        )
        lvl = check_characterization_iii(
            self.ctx, self.full_mask, self.fv.delta, lam, tol=max(tol, 10 * self.gauss().tolerance_used), eta=rep.eta
        )
        payload = {
            "residual": rep.residual,
            "rel_residual": rep.rel_residual,
            "eta": rep.eta,
            "robin_gap": rep.robin_gap,
            "balayage_mass": rep.balayage_mass,
            "capacity": rep.capacity,
            "constant_level_max_dev": lvl.max_abs_deviation,
            "tolerance": rep.tolerance,
            "passed": rep.passed and lvl.passed,
        }
        return payload, payload["passed"], {}

    def _task_support(self, task):
        from .diagnostics import support_report

        rep = self.gauss()
        sr = support_report(rep.minimizer, self.d, task.get("prediction", "full_A"), mask=self.full_mask)
        passed = True
        if "min_jaccard" in task:
            passed = passed and sr.jaccard >= float(task["min_jaccard"])
        if "min_boundary_fraction" in task:
            passed = passed and sr.boundary_fraction >= float(task["min_boundary_fraction"])
        payload = {
            "prediction": sr.prediction,
            "jaccard": sr.jaccard,
            "boundary_fraction": sr.boundary_fraction,
            "support_size": int(sr.support_nodes.size),
            "predicted_size": int(sr.predicted_nodes.size),
            "mass_radius": sr.mass_radius,
            "passed": passed,
        }
        return payload, passed, {}

    def _monotone(self, task, direction):
        from .experiments import run_monotone_decreasing, run_monotone_increasing
        from .fields import build_field
        from .geometry import monotone_family
        from .kernel import assemble_gram

        fam = monotone_family(self.scn.geometry, direction, int(task.get("count", 3)))
        ctx = assemble_gram(fam.master, self.scn.alpha)
        fv = build_field(self.scn.field_spec, fam.master, ctx)
        run = run_monotone_increasing if direction == "increasing" else run_monotone_decreasing
        trace = run(fam, ctx, fv, check_tol=self.scn.check_tol, tol_rel=self.tol_rel)
        payload = {
            "labels": trace.labels,
            "w_values": trace.w_values,
            "c_values": trace.c_values,
            "energy_dists": trace.energy_dists,
            "mass_of_balayage": trace.mass_of_balayage,
            "tail_mass_fraction": trace.tail_mass_fraction,
            "checks": trace.checks,
            "details": trace.details,
            "passed": trace.passed,
        }
        rows = []
        for i, lab in enumerate(trace.labels):
            rows.append(
                [
                    lab,
                    trace.w_values[i],
                    trace.c_values[i],
                    trace.energy_dists[i],
                    None if trace.mass_of_balayage is None else trace.mass_of_balayage[i],
                    None if trace.tail_mass_fraction is None else trace.tail_mass_fraction[i],
                ]
            )
        csvs = {
            f"monotone_{direction}.csv": (
                ["label", "w", "c", "energy_dist", "balayage_mass", "tail_mass_fraction"],
                rows,
            )
        }
        return payload, trace.passed, csvs

    def _task_monotone_increasing(self, task):
        return self._monotone(task, "increasing")

    def _task_monotone_decreasing(self, task):
        return self._monotone(task, "decreasing")

    def _task_thinness(self, task):
        from .experiments import classify_thinness

        q = float(task.get("q", self.scn.geometry.shell_base or 2.0))
        rep = classify_thinness(self.d, self.scn.alpha, q, tol_rel=self.tol_rel)
        passed = rep.verdict == task["expect"] if "expect" in task else rep.verdict != "inconclusive"
        if task.get("expect_capacity_growing"):
            # Infinite-capacity signature: the outermost shell still contributes
            # a material fraction of the largest shell capacity.
            passed = passed and (rep.capacity_tail_ratio or 0.0) >= 0.1
        payload = {
            "q": rep.q,
            "shell_ids": rep.shell_ids,
            "shell_capacities": rep.shell_capacities,
            "summands": rep.summands,
            "partial_sums": rep.partial_sums,
            "pairwise_slopes": rep.pairwise_slopes,
            "slope_stat": rep.slope_stat,
            "verdict": rep.verdict,
            "capacity_partial_sums": rep.capacity_partial_sums,
            "capacity_tail_ratio": rep.capacity_tail_ratio,
            "passed": passed,
        }
        rows = [
            [k, rep.shell_capacities[i], rep.summands[i], rep.partial_sums[i]]
            for i, k in enumerate(rep.shell_ids)
        ]
        return payload, passed, {"thinness.csv": (["shell", "capacity", "summand", "partial_sum"], rows)}

    def _task_solvability_probe(self, task):
        import numpy as np

        from .experiments import probe_solvability
        from .fields import PointMasses

        sigma = self.scn.field_spec.delta_sigma
        if sigma is None:
            sigma = PointMasses(np.zeros((0, self.scn.geometry.dim)), [])
        rep = probe_solvability(
            self.scn.geometry,
            sigma,
            [float(r) for r in task["radii"]],
            self.scn.alpha,
            tol_rel=self.tol_rel,
            hypothesis=task.get("hypothesis"),
            tau=self.scn.field_spec.delta_tau,
        )
        passed = rep.verdict == task["expect"] if "expect" in task else rep.verdict != "inconclusive"
        payload = {
            "radii": rep.radii,
            "delta_mass": rep.delta_mass,
            "balayage_masses": rep.balayage_masses,
            "c_values": rep.c_values,
            "tail_fractions": rep.tail_fractions,
            "mass_radii": rep.mass_radii,
            "mass_limit_est": rep.mass_limit_est,
            "verdict": rep.verdict,
            "flags": rep.flags,
            "hypothesis": rep.hypothesis,
            "passed": passed,
        }
        rows = [
            [
                rep.radii[i],
                rep.balayage_masses[i],
                rep.c_values[i],
                rep.tail_fractions[i],
                rep.mass_radii[i],
            ]
            for i in range(len(rep.radii))
        ]
        return (
            payload,
            passed,
            {"solvability.csv": (["R", "balayage_mass", "c", "tail_fraction", "mass_radius"], rows)},
        )


def _np_linalg_error():
    import numpy as np

    return np.linalg.LinAlgError


def run_scenario(scn, out_root: str, tol_override=None, emit_gram: bool = False) -> tuple[dict, bool]:
    """Run all tasks of one scenario; write reports; return (summary, all_passed)."""
    from .errors import UnsolvableError
    from .kernel import gram_to_csv

    out_dir = os.path.join(out_root, scn.id)
    os.makedirs(out_dir, exist_ok=True)
    runner = _Runner(scn, tol_override)
    runner.d.to_csv(os.path.join(out_dir, "geometry.csv"))
    if runner.fv.parts:
        runner.fv.to_csv(os.path.join(out_dir, "field.csv"))
    if emit_gram:
        gram_to_csv(runner.ctx, os.path.join(out_dir, "gram.csv"))
    summary_tasks = {}
    all_passed = True
    seen: dict[str, int] = {}
    for task in scn.tasks:
        kind = task["type"]
        seen[kind] = seen.get(kind, 0) + 1
        name = kind if seen[kind] == 1 else f"{kind}_{seen[kind]}"
        try:
            payload, passed, csvs = runner.run_task(task)
        except UnsolvableError as exc:
            payload, passed, csvs = {"error": str(exc)}, False, {}
        except _np_linalg_error() as exc:
            payload, passed, csvs = {"error": f"linear algebra failure: {exc}"}, False, {}
        _write_json(os.path.join(out_dir, f"{name}.json"), payload)
        for fname, (header, rows) in csvs.items():
            _write_csv(os.path.join(out_dir, fname), header, rows)
        entry = {"passed": passed}
        for key in ("objective", "robin_constant", "capacity", "mass", "verdict", "rel_residual",
                    "jaccard", "boundary_fraction", "eta", "error"):
            if key in payload:
                entry[key] = payload[key]
        summary_tasks[name] = entry
        all_passed = all_passed and passed
    summary = {
        "scenario": scn.id,
        "alpha": scn.alpha,
        "n_nodes": runner.d.n_nodes,
        "solver_tol": runner.tol_rel,
        "admissibility": {
            "passed": runner.admissibility.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in runner.admissibility.checks
            ],
        },
        "tasks": summary_tasks,
        "all_passed": all_passed,
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary, all_passed


def _cmd_run(args) -> int:
    from .errors import ConfigurationError
    from .scenarios import builtin_scenarios, expand_config, load_config

    try:
        if args.builtin:
            cat = builtin_scenarios()
            if args.builtin not in cat:
                raise ConfigurationError(f"unknown builtin scenario {args.builtin!r}")
            scenarios = expand_config(cat[args.builtin].config)
        else:
            scenarios = load_config(args.config)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    status = 0
    for scn in scenarios:
        out_root = args.out or scn.output_dir or "out"
        try:
            summary, ok = run_scenario(scn, out_root, tol_override=args.tol, emit_gram=args.emit_gram)
        except ConfigurationError as exc:
            print(f"[{scn.id}] configuration error: {exc}", file=sys.stderr)
            return 2
        for name, entry in summary["tasks"].items():
            flag = "PASS" if entry["passed"] else "FAIL"
            print(f"[{scn.id}] {name}: {flag}")
        if not ok:
            status = 1
    return status


def _cmd_list(args) -> int:
    from .scenarios import list_catalog

    for b in list_catalog(args.tag):
        print(f"{b.name:32s} [{', '.join(b.tags)}] {b.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rieszfield",
        description="Discrete minimum-energy problems with external fields for Riesz kernels.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config (JSON) or a builtin")
    run.add_argument("config", nargs="?", help="path to the scenario config file")
    run.add_argument("--builtin", help="name of a builtin scenario (see `list`)")
    run.add_argument("--out", help="output root directory (default: scenario output_dir or ./out)")
    run.add_argument("--tol", type=float, help="override the scenario's relative solver tolerance")
    run.add_argument("--threads", type=int, help="pin BLAS/OpenMP thread count (set before numpy loads)")
    run.add_argument("--emit-gram", action="store_true", help="dump the Gram matrix as CSV")
    lst = sub.add_parser("list", help="list builtin reproduction scenarios")
    lst.add_argument("--tag", help="filter by tag")
    lst.add_argument("--threads", type=int, help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None):
        _set_threads(args.threads)
    if args.command == "list":
        return _cmd_list(args)
    if not args.config and not args.builtin:
        print("run: provide a config path or --builtin NAME", file=sys.stderr)
        return 2
    return _cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
