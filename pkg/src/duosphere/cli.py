"""Command-line front end.

Subcommands: constants, shoot, nodal, eigen, bifurcate, verify.  Problem
parameters come from flags or a JSON config file (--config; flags win);
every output file echoes the resolved configuration.  Results are JSON for
structure, CSV for trajectories and diagrams, SVG path data for plots.
Exit status is 0 only when everything requested passed its checks, 1 when a
certification or build fell short, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import bifurcation, eigen, nodal, verify
from .artifacts import (
    provenance_header,
    svg_document,
    svg_path,
    trajectory_from_csv,
    trajectory_to_csv,
    write_csv_table,
    write_json,
)
from .errors import (
    CatalogIncompleteError,
    DuosphereError,
    InvalidParameterError,
    MalformedInputError,
)
from .params import (
    ProblemParams,
    bifurcation_lambda,
    critical_exponent,
    derive_constants,
    yamabe_parameters,
)
from .shooter import IntegratorConfig, integrate_half

OUT_DIR_ENV = "DUOSPHERE_OUT"


@dataclass(frozen=True)
class RunConfig:
    """Resolved options for one CLI invocation; echoed into every output."""

    command: str
    n: int = 2
    delta: float = 1.0
    p: float | None = None
    lam: float | None = None
    yamabe: bool = False
    k: int | None = None
    k_max: int = 3
    alpha: float = 2.0
    alpha_max: float | None = None
    resolution: int = 64
    grid_n: int = 400
    lambda_ceiling: float = 40.0
    at_lambda: float | None = None
    samples: int = 100
    h_step: float = 1e-3
    eps_start: float = 1e-4
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    seed: int = 7
    tol_ode: float = 1e-6
    formats: str = "json,csv"
    out_dir: str = "out"
    solution_file: str | None = None

    def problem(self) -> ProblemParams:
        if self.yamabe:
            lam, p = yamabe_parameters(self.n, self.delta)
            return ProblemParams(n=self.n, delta=self.delta, p=p, lam=lam)
        if self.p is None or self.lam is None:
            raise InvalidParameterError("need --yamabe or both --p and --lambda")
        return ProblemParams(n=self.n, delta=self.delta, p=self.p, lam=self.lam)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(eps_start=self.eps_start, rel_tol=self.rel_tol,
                                abs_tol=self.abs_tol)

    def wants(self, fmt: str) -> bool:
        return fmt in {f.strip() for f in self.formats.split(",")}

    def header(self, params: ProblemParams) -> dict:
        head = provenance_header(params, asdict(self))
        head["timestamp"] = datetime.now(timezone.utc).isoformat()
        return head


_CONFIG_KEYS = {f.name for f in fields(RunConfig)} - {"command"}


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    base = RunConfig(command=args.command)
    merged = {}
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except Exception as exc:
            raise MalformedInputError(f"config file {args.config}: {exc}") from exc
        unknown = set(loaded) - _CONFIG_KEYS
        if unknown:
            raise MalformedInputError(f"config file has unknown keys: {sorted(unknown)}")
        merged.update(loaded)
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if "out_dir" not in merged:
        merged["out_dir"] = os.environ.get(OUT_DIR_ENV, "out")
    return replace(base, **merged)


def _add_problem_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--n", type=int, help="sphere dimension (default 2)")
    sp.add_argument("--delta", type=float, help="second-factor metric scale (default 1)")
    sp.add_argument("--p", type=float, help="nonlinearity exponent in (2, p_crit]")
    sp.add_argument("--lambda", dest="lam", type=float, help="equation coefficient lambda")
    sp.add_argument("--yamabe", action="store_true", default=None,
                    help="use the critical exponent and Yamabe lambda for (n, delta)")
    sp.add_argument("--config", type=str, help="JSON config file (flags override it)")
    sp.add_argument("--out-dir", dest="out_dir", type=str,
                    help=f"output directory (default $" + OUT_DIR_ENV + " or ./out)")
    sp.add_argument("--formats", type=str, help="comma list of json,csv,svg (default json,csv)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="duosphere",
        description="invariant Yamabe-type equations on S^n x S^n: shooting, "
                    "nodal catalogs, eigenfunctions, bifurcation branches")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("constants", help="derived constants and lambda_k table")
    _add_problem_flags(sp)
    sp.add_argument("--k-max", dest="k_max", type=int, help="bifurcation indices to tabulate")
    sp.set_defaults(handler=cmd_constants)

    sp = sub.add_parser("shoot", help="single-alpha shot diagnostic")
    _add_problem_flags(sp)
    sp.add_argument("--alpha", type=float, help="initial value w(0)")
    sp.set_defaults(handler=cmd_shoot)

    sp = sub.add_parser("nodal", help="certified nodal solution catalog")
    _add_problem_flags(sp)
    sp.add_argument("--k-max", dest="k_max", type=int, help="largest zero count to certify")
    sp.add_argument("--alpha-max", dest="alpha_max", type=float, help="fixed scan ceiling")
    sp.add_argument("--resolution", type=int, help="initial scan resolution")
    sp.set_defaults(handler=cmd_nodal)

    sp = sub.add_parser("eigen", help="polynomial eigenfunction table")
    _add_problem_flags(sp)
    sp.add_argument("--k-max", dest="k_max", type=int, help="largest mode index")
    sp.set_defaults(handler=cmd_eigen)

    sp = sub.add_parser("bifurcate", help="trace positive-solution branches")
    _add_problem_flags(sp)
    sp.add_argument("--k", type=int, help="single branch index")
    sp.add_argument("--k-max", dest="k_max", type=int, help="branches 1..k_max")
    sp.add_argument("--grid-n", dest="grid_n", type=int, help="grid intervals (default 400)")
    sp.add_argument("--lambda-ceiling", dest="lambda_ceiling", type=float)
    sp.add_argument("--at-lambda", dest="at_lambda", type=float,
                    help="also report distinct positive solutions at this lambda")
    sp.set_defaults(handler=cmd_bifurcate)

    sp = sub.add_parser("verify", help="independent residual checks of a solution file")
    _add_problem_flags(sp)
    sp.add_argument("solution_file", type=str, help="trajectory CSV to verify")
    sp.add_argument("--samples", type=int, help="random product points for the PDE check")
    sp.add_argument("--h-step", dest="h_step", type=float, help="FD step (rerun at h/2 implied)")
    sp.add_argument("--tol-ode", dest="tol_ode", type=float, help="pass gate for the sup residual")
    sp.set_defaults(handler=cmd_verify)
    return ap


def cmd_constants(cfg: RunConfig) -> int:
    params = cfg.problem()
    consts = derive_constants(params)
    lam_y, p_crit = yamabe_parameters(cfg.n, cfg.delta)
    lam_table = []
    if params.p < p_crit:
        lam_table = [(k, bifurcation_lambda(cfg.n, k, cfg.delta, params.p))
                     for k in range(1, cfg.k_max + 1)]
    print(f"n={params.n} delta={params.delta} p={params.p} lambda={params.lam}")
    print(f"mu={consts.mu!r} a2n={consts.a2n!r} p2n={consts.p2n!r} "
          f"scal={consts.scal!r} alpha_threshold={consts.alpha_threshold!r}")
    print(f"yamabe: lambda_Y={lam_y!r} p_crit={p_crit!r}")
    for k, lk in lam_table:
        print(f"lambda_{k} = {lk!r}")
    if cfg.wants("json"):
        payload = cfg.header(params)
        payload.update({
            "kind": "constants",
            "yamabe": {"lambda_Y": lam_y, "p_crit": p_crit},
            "lambda_k": {str(k): v for k, v in lam_table},
        })
        write_json(Path(cfg.out_dir) / "constants.json", payload)
    if cfg.wants("csv") and lam_table:
        write_csv_table(Path(cfg.out_dir) / "lambda_k.csv", ["k", "lambda_k"], lam_table)
    return 0


def cmd_shoot(cfg: RunConfig) -> int:
    params = cfg.problem()
    shot = integrate_half(params, cfg.integrator(), cfg.alpha)
    print(f"alpha={shot.alpha} zeros_half={shot.zeros_half} "
          f"w_mid={shot.w_mid!r} wp_mid={shot.wp_mid!r} "
          f"ambiguous_midzero={shot.ambiguous_midzero}")
    out = Path(cfg.out_dir)
    if cfg.wants("csv"):
        trajectory_to_csv(out / "shot.csv", shot.trajectory)
    if cfg.wants("json"):
        payload = cfg.header(params)
        payload.update({
            "kind": "shot",
            "alpha": shot.alpha,
            "zeros_half": shot.zeros_half,
            "zeros": list(shot.zeros),
            "w_mid": shot.w_mid,
            "wp_mid": shot.wp_mid,
            "ambiguous_midzero": shot.ambiguous_midzero,
            "energy_initial": float(shot.trajectory.energy[0]),
        })
        write_json(out / "shot.json", payload)
    if cfg.wants("svg"):
        doc = svg_document([svg_path(shot.trajectory.grid, shot.trajectory.w)])
        (out / "shot.svg").write_text(doc)
    return 0


def _write_catalog(cfg: RunConfig, params, catalog, status: int) -> int:
    out = Path(cfg.out_dir)
    entries = []
    for e in catalog.entries:
        traj_file = f"nodal_k{e.k}.csv"
        if cfg.wants("csv"):
            trajectory_to_csv(out / traj_file, e.trajectory,
                              header_extra={"k": e.k, "symmetry": e.symmetry})
        if cfg.wants("svg"):
            doc = svg_document([svg_path(e.trajectory.grid, e.trajectory.w)])
            (out / f"nodal_k{e.k}.svg").write_text(doc)
        entries.append({
            "k": e.k,
            "alpha": e.alpha,
            "symmetry": e.symmetry,
            "zeros": list(e.zeros),
            "residual_mid": e.residual_mid,
            "residual_boundary": e.residual_boundary,
            "residual_ode_sup": e.residual_ode_sup,
            "trajectory_file": traj_file if cfg.wants("csv") else None,
        })
    payload = cfg.header(params)
    payload.update({
        "kind": "nodal_catalog",
        "complete": status == 0,
        "entries": entries,
        "scan": {"alpha_max": catalog.alpha_max, "resolution": catalog.resolution,
                 "tolerances": catalog.tolerances},
    })
    write_json(out / "catalog.json", payload)
    return status


def cmd_nodal(cfg: RunConfig) -> int:
    params = cfg.problem()
    print(f"building nodal catalog k=1..{cfg.k_max} "
          f"(n={params.n}, delta={params.delta}, p={params.p}, lambda={params.lam})")
    try:
        catalog = nodal.build_catalog(params, cfg.integrator(), cfg.k_max,
                                      alpha_max=cfg.alpha_max,
                                      initial_resolution=cfg.resolution)
    except CatalogIncompleteError as exc:
        print(f"catalog incomplete: {exc}", file=sys.stderr)
        return _write_catalog(cfg, params, exc.partial, 1)
    for e in catalog.entries:
        print(f"k={e.k} alpha={e.alpha!r} symmetry={e.symmetry} "
              f"mid={e.residual_mid:.2e} ode={e.residual_ode_sup:.2e}")
    return _write_catalog(cfg, params, catalog, 0)


def cmd_eigen(cfg: RunConfig) -> int:
    rows = []
    table = []
    for k in range(1, cfg.k_max + 1):
        poly = eigen.eigenpoly(cfg.n, k)
        count, roots = eigen.zero_count(poly)
        print(f"k={k} beta={poly.beta} roots={count}")
        rows.append((k, poly.beta, ";".join(repr(float(c)) for c in poly.coeffs),
                     ";".join(repr(float(r)) for r in roots)))
        table.append({"k": k, "beta": poly.beta,
                      "coefficients": [float(c) for c in poly.coeffs],
                      "roots": [float(r) for r in roots]})
    out = Path(cfg.out_dir)
    if cfg.wants("json"):
        payload = {
            "schema_version": "1",
            "kind": "eigen_table",
            "config": asdict(cfg),
            "n": cfg.n,
            "modes": table,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        write_json(out / "eigen.json", payload)
    if cfg.wants("csv"):
        write_csv_table(out / "eigen.csv", ["k", "beta", "coefficients", "roots"], rows)
    return 0


def cmd_bifurcate(cfg: RunConfig) -> int:
    if cfg.yamabe:
        raise InvalidParameterError("bifurcate needs a subcritical exponent, not the Yamabe case")
    params = cfg.problem()
    p_crit = critical_exponent(cfg.n)
    if not params.p < p_crit:
        raise InvalidParameterError(
            f"bifurcate needs subcritical p < {p_crit}, got p={params.p}")
    grid = bifurcation.BvpGrid(n=cfg.n, delta=cfg.delta, p=params.p,
                               n_intervals=cfg.grid_n)
    cont = bifurcation.ContinuationConfig(lambda_ceiling=cfg.lambda_ceiling)
    ks = [cfg.k] if cfg.k is not None else list(range(1, cfg.k_max + 1))
    out = Path(cfg.out_dir)
    status = 0
    for k in ks:
        try:
            branch = bifurcation.branch_from(k, grid, cont)
        except DuosphereError as exc:
            print(f"branch {k} failed: {exc}", file=sys.stderr)
            status = 1
            continue
        print(f"branch {k}: {len(branch.points)} points, termination={branch.termination}")
        pts = [{"lambda": q.lam, "sup_deviation": q.sup_deviation,
                "zero_count": q.zero_count, "positive": q.positive}
               for q in branch.points]
        payload = cfg.header(params)
        payload.update({"kind": "branch", "k": k, "lambda_k": branch.lambda_k,
                        "termination": branch.termination, "points": pts})
        if cfg.wants("json"):
            write_json(out / f"branch_k{k}.json", payload)
        if cfg.wants("csv"):
            write_csv_table(out / f"diagram_k{k}.csv", ["lambda", "sup_deviation"],
                            [(q.lam, q.sup_deviation) for q in branch.points])
        if cfg.wants("svg"):
            doc = svg_document([svg_path([q.lam for q in branch.points],
                                         [q.sup_deviation for q in branch.points])])
            (out / f"diagram_k{k}.svg").write_text(doc)

    if cfg.at_lambda is not None:
        sols = bifurcation.solutions_at(cfg.at_lambda, grid, max(ks), cont)
        report = []
        for i, s in enumerate(sols):
            rec = {"k": s.k, "side": s.side, "lambda": s.solution.lam,
                   "sup_deviation": s.solution.sup_deviation,
                   "zero_count": s.zero_count, "positive": s.solution.positive}
            if s.polished is not None:
                rep = verify.ode_residual(s.polished)
                rec["residual_ode_sup"] = rep.sup_residual
                rec["pass"] = rep.sup_residual <= cfg.tol_ode
                if cfg.wants("csv"):
                    fname = f"solution_lam{cfg.at_lambda:g}_{i}.csv"
                    trajectory_to_csv(out / fname, s.polished,
                                      header_extra={"k": s.k, "side": s.side})
                    rec["trajectory_file"] = fname
            else:
                rec["pass"] = False
            report.append(rec)
        n_pass = sum(1 for r in report if r.get("pass"))
        print(f"at lambda={cfg.at_lambda}: {len(report)} distinct positive "
              f"nontrivial solutions, {n_pass} verified")
        payload = cfg.header(params)
        payload.update({"kind": "solutions_at", "lambda": cfg.at_lambda,
                        "solutions": report})
        write_json(out / f"solutions_at_{cfg.at_lambda:g}.json", payload)
        if any(not r.get("pass") for r in report):
            status = 1
    return status


def cmd_verify(cfg: RunConfig) -> int:
    traj = trajectory_from_csv(Path(cfg.solution_file))
    params = traj.params
    rep_ode = verify.ode_residual(traj)
    rep_t = verify.t_equation_residual(traj)
    rep_pde = verify.pde_residual_sampled(traj, params, m=cfg.samples,
                                          h=cfg.h_step, seed=cfg.seed)
    ok_ode = rep_ode.sup_residual <= cfg.tol_ode
    slope_ok = rep_pde.slope is not None and 1.5 <= rep_pde.slope <= 2.5
    print(f"ode sup-residual {rep_ode.sup_residual:.3e} (gate {cfg.tol_ode:g}): "
          f"{'pass' if ok_ode else 'FAIL'}")
    print(f"t-equation sup-residual {rep_t.sup_residual:.3e}")
    print(f"pde sup-residual {rep_pde.sup_residual:.3e} at h={rep_pde.h:g}, "
          f"slope {rep_pde.slope:.2f}: {'pass' if slope_ok else 'FAIL'}")
    payload = cfg.header(params)
    payload.update({
        "kind": "residual_report",
        "solution_file": str(cfg.solution_file),
        "ode": asdict(rep_ode),
        "t_equation": asdict(rep_t),
        "pde": asdict(rep_pde),
        "pass": bool(ok_ode and slope_ok),
    })
    write_json(Path(cfg.out_dir) / "verify_report.json", payload)
    return 0 if (ok_ode and slope_ok) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return args.handler(cfg)
    except (InvalidParameterError, MalformedInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DuosphereError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
