"""Command-line driver: ``magelastic {solve,verify,convergence,genmesh}``.

Exit codes: 0 success, 1 failed verification, 2 configuration error,
3 ill-posed problem, 4 no convergence.
"""
import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import ConfigError, DegenerateElement, IllPosedLoad, MagelasticError, NoConvergence, StrainTooLarge

log = logging.getLogger("magelastic")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_ILL_POSED, EXIT_NO_CONVERGENCE = 0, 1, 2, 3, 4
STUDIES = ("manufactured", "uniform_b", "slab", "config")


@dataclass
class RunConfig:
    """Resolved command-line request."""

    command: str
    config: str | None = None
    mesh: str | None = None
    out: str | None = None
    coupling: str | None = None
    tol: float | None = None
    levels: tuple = ()
    seed: int = 42
    verbosity: int = logging.INFO

    def check_paths(self):
        for label, path in (("config", self.config), ("mesh", self.mesh)):
            if path is not None and not os.path.isfile(path):
                raise ConfigError(f"{label} file not found: {path}")
        if self.out is not None:
            target = self.out if self.command != "genmesh" else (os.path.dirname(os.path.abspath(self.out)))
            os.makedirs(target, exist_ok=True)
            if not os.access(target, os.W_OK):
                raise ConfigError(f"output location not writable: {target}")


def parse_levels(text):
    try:
        levels = tuple(int(s) for s in str(text).replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"--levels expects integers, got {text!r}") from None
    if any(n < 1 for n in levels):
        raise ConfigError("--levels must be positive")
    return levels


def build_parser():
    p = argparse.ArgumentParser(prog="magelastic", description="Magneto-elastic finite-element solver.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        sp.add_argument("-q", "--quiet", action="store_true", help="warnings only")
        sp.add_argument("--seed", type=int, default=42, help="seed for randomized parts (default 42)")

    s = sub.add_parser("solve", help="solve the problem described by a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--mesh", help="mesh3d file overriding the config's mesh section")
    s.add_argument("--out", default="run", help="output directory (default ./run)")
    s.add_argument("--coupling", choices=("none", "model_a", "model_b", "model_b_linearized"))
    s.add_argument("--tol", type=float, help="linear solver tolerance")
    common(s)

    v = sub.add_parser("verify", help="run the self-verification suite")
    v.add_argument("--level", choices=("fast", "full"), default="fast")
    v.add_argument("--mutate", action="store_true", help=argparse.SUPPRESS)
    v.add_argument("--out", help="write results as JSON into this directory")
    common(v)

    c = sub.add_parser("convergence", help="refinement study with observed orders")
    c.add_argument("--study", choices=STUDIES, help="default: 'config' with --config, else 'manufactured'")
    c.add_argument("--config")
    c.add_argument("--levels", default=None, help="divisions per level, e.g. 8,16,32")
    c.add_argument("--coupling", choices=("none", "model_a", "model_b", "model_b_linearized"))
    c.add_argument("--tol", type=float)
    c.add_argument("--out", help="write convergence.json into this directory")
    common(c)

    g = sub.add_parser("genmesh", help="write a tetrahedral box mesh in mesh3d format")
    g.add_argument("--out", required=True, help="mesh file to write")
    g.add_argument("--config", help="take the box description from a config's mesh section")
    g.add_argument("--levels", help="divisions: n or nx,ny,nz")
    g.add_argument("--extent", default="1,1,1")
    g.add_argument("--jitter", type=float, default=0.0)
    common(g)
    return p


def _setup_logging(args, log_file=None):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    log.setLevel(logging.DEBUG)
    for h in list(log.handlers):
        log.removeHandler(h)
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(level)
    console.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(console)
    if log_file:
        fh = logging.FileHandler(log_file, mode="w")
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        log.addHandler(fh)
    log.propagate = False
    return level


def _close_logging():
    for h in list(log.handlers):
        h.close()
        log.removeHandler(h)


def _dispatch(spec, config):
    from .solvers import solve, solve_decoupled, solve_elastic, solve_magnetostatic
    if spec.coupling != "none":
        return solve(spec)
    if not config.is_magnetic:
        return solve_elastic(spec)
    if not spec.body_regions:
        return solve_magnetostatic(spec)
    return solve_decoupled(spec)


def cmd_solve(run):
    from .io import build_problem, parse_config, write_report, write_vtk
    from .mesh import read_mesh
    config = parse_config(run.config)
    mesh = read_mesh(run.mesh) if run.mesh else None
    spec = build_problem(config, mesh=mesh, coupling=run.coupling, tol=run.tol)
    log.info("mesh: %d vertices, %d tets; coupling %s", spec.mesh.n_vertices, spec.mesh.n_tets, spec.coupling)
    t0 = time.perf_counter()
    report = _dispatch(spec, config)
    elapsed = time.perf_counter() - t0
    for w in report.warnings:
        log.warning(w)
    for key, val in report.energies.items():
        log.info("energy %s = %.10g", key, val)
    for key, val in report.residuals.items():
        log.info("residual %s = %.3e", key, val)
    write_vtk(os.path.join(run.out, "fields.vtk"), spec.mesh, report)
    write_report(os.path.join(run.out, "report.json"), report,
                 {"config": config.data, "seconds": elapsed, "seed": run.seed})
    log.info("wrote fields.vtk, report.json, log.txt to %s (%.2f s)", run.out, elapsed)
    return EXIT_OK


def cmd_verify(run, level, mutate=False):
    from .verify import format_table, run_checks
    results = run_checks(level, seed=run.seed, mutate=mutate)
    print(format_table(results))
    if run.out:
        with open(os.path.join(run.out, "verify.json"), "w") as fh:
            json.dump([r.__dict__ for r in results], fh, indent=2)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def _orders(h, errors):
    h, e = np.asarray(h, float), np.asarray(errors, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


def convergence_table(study, levels, run=None):
    """Rows ``(n, h, error)`` and observed orders of a refinement study."""
    from .solvers import magnetic_force_load, solve_coupled_model_a, solve_magnetostatic
    from .solvers.problems import (slab_analytic_force, slab_problem, slab_top_indicator, uniform_b_problem)
    from .verify import manufactured_study
    if len(levels) < 2:
        raise ConfigError("a convergence study needs at least 2 levels")
    if study == "manufactured":
        errors, _ = manufactured_study(levels)
        quantity = "L2 displacement error"
    elif study == "uniform_b":
        errors = []
        for n in levels:
            rep = solve_magnetostatic(uniform_b_problem(n, jitter=0.2, seed=run.seed if run else 42))
            errors.append(float(np.abs(rep.b.components - [1.0, 0.0, 0.0]).max()))
        quantity = "max |b - dx^dy|"
    elif study == "slab":
        if any(n % 8 for n in levels):
            raise ConfigError("slab levels must be multiples of 8 so the layer faces lie on mesh planes")
        errors = []
        exact = slab_analytic_force()
        for n in levels:
            spec = slab_problem(n)
            rep = solve_coupled_model_a(spec)
            force = magnetic_force_load(spec, rep.magnetic_stress) @ slab_top_indicator(spec).ravel()
            errors.append(abs(force - exact) / exact)
        quantity = "relative interface-force error"
    else:
        errors = _config_study(run, levels)
        quantity = "|total energy - finest-level energy|"
    h = [1.0 / n for n in levels]
    return quantity, list(zip(levels, h, errors)), _orders(h, errors)


def _config_study(run, levels):
    from .io import build_problem, parse_config
    if run is None or run.config is None:
        raise ConfigError("the 'config' study needs --config")
    config = parse_config(run.config)
    energies = []
    for n in levels:
        spec = build_problem(config, coupling=run.coupling, tol=run.tol, divisions=n)
        report = _dispatch(spec, config)
        total = report.energies.get("total", sum(v for k, v in report.energies.items() if k != "coupling"))
        energies.append(total)
        log.info("level %d: total energy %.12g", n, total)
    # the finest level is the reference, so its own error row is zero
    return [abs(e - energies[-1]) for e in energies]


def cmd_convergence(run, study):
    quantity, rows, orders = convergence_table(study, run.levels, run)
    print(f"study: {study}  quantity: {quantity}")
    print(f"{'n':>5} {'h':>10} {'error':>12} {'order':>7}")
    for k, (n, h, e) in enumerate(rows):
        order = "" if k == 0 or not np.isfinite(orders[k - 1]) else f"{orders[k - 1]:.3f}"
        print(f"{n:>5} {h:>10.4g} {e:>12.4e} {order:>7}")
    if run.out:
        with open(os.path.join(run.out, "convergence.json"), "w") as fh:
            json.dump({"study": study, "quantity": quantity,
                       "levels": [{"n": n, "h": h, "error": e} for n, h, e in rows],
                       "orders": [None if not np.isfinite(o) else float(o) for o in orders]}, fh, indent=2)
    return EXIT_OK


def cmd_genmesh(run, extent, jitter):
    from .io import mesh_from_config, parse_config
    from .mesh import generate_box_mesh, write_mesh
    div = None
    if run.levels:
        div = run.levels * 3 if len(run.levels) == 1 else run.levels
        if len(div) != 3:
            raise ConfigError("--levels for genmesh takes n or nx,ny,nz")
    if run.config:
        mesh = mesh_from_config(parse_config(run.config), divisions=div)
    else:
        try:
            ext = [float(s) for s in extent.split(",")]
        except ValueError:
            raise ConfigError(f"--extent expects three numbers, got {extent!r}") from None
        if len(ext) != 3:
            raise ConfigError("--extent expects three numbers")
        if not 0 <= jitter < 0.25:
            raise ConfigError("--jitter must lie in [0, 0.25)")
        mesh = generate_box_mesh(ext, div or (4, 4, 4), jitter=jitter, seed=run.seed)
    write_mesh(mesh, run.out)
    print(f"wrote {run.out}: {mesh.n_vertices} vertices, {mesh.n_tets} tets")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        levels = parse_levels(args.levels) if getattr(args, "levels", None) else ()
        run = RunConfig(args.command, getattr(args, "config", None), getattr(args, "mesh", None),
                        getattr(args, "out", None), getattr(args, "coupling", None), getattr(args, "tol", None),
                        levels, args.seed)
        run.check_paths()
    except ConfigError as exc:
        _setup_logging(args)
        log.error("config error: %s", exc)
        _close_logging()
        return EXIT_CONFIG
    log_file = os.path.join(run.out, "log.txt") if args.command == "solve" else None
    _setup_logging(args, log_file)
    try:
        if args.command == "solve":
            return cmd_solve(run)
        if args.command == "verify":
            return cmd_verify(run, args.level, args.mutate)
        if args.command == "convergence":
            study = args.study or ("config" if run.config else "manufactured")
            if not run.levels:
                run.levels = (8, 16, 32) if study != "config" else (4, 8, 16)
            return cmd_convergence(run, study)
        return cmd_genmesh(run, args.extent, args.jitter)
    except (ConfigError, DegenerateElement) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (IllPosedLoad, StrainTooLarge) as exc:
        log.error("ill-posed problem: %s", exc)
        return EXIT_ILL_POSED
    except NoConvergence as exc:
        log.error("no convergence: %s", exc)
        return EXIT_NO_CONVERGENCE
    except MagelasticError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FAILED
    finally:
        _close_logging()


if __name__ == "__main__":
    sys.exit(main())
