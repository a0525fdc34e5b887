"""Command-line front end.

Usage::

    zaremba <command> --config <path> [--out <dir>] [--svg]

``command`` is one of ``capacity``, ``barrier``, ``solve``, ``chain``,
``growth``, ``dichotomy``. The config is a JSON object; see the README for
the schema and defaults. Exit status is 0 on success, 2 when the config
fails validation and 1 when the pipeline raises. Failures write
``error.json`` to the output directory and print the same record to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import barrier as barrier_mod
from . import capacity as capacity_mod
from . import chains as chains_mod
from . import coeffs
from . import fdsolver
from . import geometry
from . import io
from .errors import ZarembaError

COMMANDS = ("capacity", "barrier", "solve", "chain", "growth", "dichotomy")


class ConfigError(Exception):
    """Validation failure; ``errors`` maps field paths to messages."""

    def __init__(self, errors):
        super().__init__("; ".join(f"{k}: {v}" for k, v in errors.items()))
        self.errors = errors


# ---------------------------------------------------------------------------
# Validation helpers


class _Reader:
    """Typed access to a config dict that collects field-level errors."""

    def __init__(self, data, prefix=""):
        self.data = data if isinstance(data, dict) else {}
        self.prefix = prefix
        self.errors = {}

    def _key(self, name):
        return f"{self.prefix}{name}"

    def number(self, name, default=None, lo=None, hi=None, strict_lo=False, required=False):
        if name not in self.data:
            if required:
                self.errors[self._key(name)] = "required"
            return default
        v = self.data[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.errors[self._key(name)] = "must be a finite number"
            return default
        if lo is not None and (v <= lo if strict_lo else v < lo):
            self.errors[self._key(name)] = f"must be {'>' if strict_lo else '>='} {lo}"
        if hi is not None and v > hi:
            self.errors[self._key(name)] = f"must be <= {hi}"
        return float(v)

    def integer(self, name, default=None, lo=None):
        if name not in self.data:
            return default
        v = self.data[name]
        if isinstance(v, bool) or not isinstance(v, int):
            self.errors[self._key(name)] = "must be an integer"
            return default
        if lo is not None and v < lo:
            self.errors[self._key(name)] = f"must be >= {lo}"
        return v

    def vector(self, name, n=None, default=None, required=False):
        if name not in self.data:
            if required:
                self.errors[self._key(name)] = "required"
            return default
        v = self.data[name]
        if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                              for x in v):
            self.errors[self._key(name)] = "must be a list of numbers"
            return default
        if n is not None and len(v) != n:
            self.errors[self._key(name)] = f"must have length {n}"
            return default
        return np.asarray(v, dtype=float)

    def choice(self, name, options, default=None):
        v = self.data.get(name, default)
        if v not in options:
            self.errors[self._key(name)] = f"must be one of {list(options)}"
            return default
        return v

    def boolean(self, name, default=False):
        v = self.data.get(name, default)
        if not isinstance(v, bool):
            self.errors[self._key(name)] = "must be true or false"
            return default
        return v

    def section(self, name, required=False):
        if name not in self.data:
            if required:
                self.errors[self._key(name)] = "required"
            return _Reader({}, self._key(name) + ".")
        v = self.data[name]
        if not isinstance(v, dict):
            self.errors[self._key(name)] = "must be an object"
            v = {}
        return _Reader(v, self._key(name) + ".")

    def merge(self, other):
        self.errors.update(other.errors)


def _domain(cfg, errors_into, n=3):
    r = cfg.section("domain")
    preset = r.data.get("preset", "halfspace")
    extent = r.number("extent", None, lo=0, strict_lo=True)
    depth = r.number("depth", None, lo=0, strict_lo=True)
    obstacles = []
    for i, ob in enumerate(r.data.get("obstacles", [])):
        o = _Reader(ob, f"domain.obstacles[{i}].")
        kind = o.choice("type", ("ball", "disk"), "ball")
        c = o.vector("center", n, required=True)
        rad = o.number("radius", lo=0, strict_lo=True, required=True)
        th = o.number("thickness", 0.0, lo=0)
        label = ob.get("label", "obstacle") if isinstance(ob, dict) else "obstacle"
        r.merge(o)
        if c is not None and rad is not None:
            obstacles.append(geometry.BallObstacle(c, rad, label) if kind == "ball"
                             else geometry.DiskObstacle(c, rad, th, label))
    dom = None
    if not isinstance(preset, str):
        r.errors["domain.preset"] = "must be a string"
    elif preset == "halfspace":
        dom = lambda: geometry.halfspace(n, obstacles, extent, depth)
    elif preset.startswith("cone"):
        try:
            L = float(preset.split("=", 1)[1])
            if L < 0:
                raise ValueError
            dom = lambda: geometry.cone(L, n, obstacles, extent, depth)
        except (IndexError, ValueError):
            r.errors["domain.preset"] = "cone preset must read 'cone L=<nonnegative value>'"
    elif preset == "slit":
        rad = r.number("radius", 0.25, lo=0, strict_lo=True)
        cd = r.number("center_depth", 0.5, lo=0, strict_lo=True)
        th = r.number("thickness", 0.0, lo=0)
        dom = lambda: geometry.slit(rad, cd, th, n, extent, depth, obstacles)
    elif preset == "disk-stack":
        Q = r.number("Q", 2.0, lo=1, strict_lo=True)
        mm = r.integer("m_max", 8, lo=0)
        src = r.number("source_radius", None, lo=0, strict_lo=True)
        dom = lambda: geometry.disk_stack(Q=Q, m_max=mm, n=n, extent=extent or 2.0, depth=depth or 2.0,
                                          source_radius=src)
    elif preset == "pl-graph":
        samples = r.data.get("samples")
        if not isinstance(samples, list) or len(samples) < n + 1:
            r.errors["domain.samples"] = f"need at least {n + 1} rows of (x', f(x'))"
        else:
            arr = np.asarray(samples, dtype=float)
            dom = lambda: geometry.pl_graph(arr[:, :-1], arr[:, -1], n, obstacles, extent, depth)
    else:
        r.errors["domain.preset"] = "unknown preset (halfspace, cone L=<v>, slit, disk-stack, pl-graph)"
    errors_into.merge(r)
    return dom


def _field(cfg, errors_into, n=3):
    spec = cfg.data.get("coefficients", "identity")
    try:
        return coeffs.parse_field(spec, n) if isinstance(spec, str) else None
    except ZarembaError as exc:
        errors_into.errors["coefficients"] = str(exc)
    if not isinstance(spec, str):
        errors_into.errors["coefficients"] = "must be a preset string"
    return None


def _ell(cfg, errors_into, n=3):
    r = cfg.section("vector_field")
    d = r.vector("direction", n, np.eye(n)[-1])
    eps = r.number("epsilon", math.pi / 4, lo=0, strict_lo=True)
    errors_into.merge(r)
    if d is None or eps is None or not np.any(d):
        errors_into.errors.setdefault("vector_field.direction", "must be a nonzero vector")
        return None
    return geometry.VectorField.constant(d, eps)


def _data(cfg, errors_into, dom_factory):
    r = cfg.section("data")

    def value(name):
        v = r.data.get(name, 0.0)
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return float(v)
        if isinstance(v, dict) and isinstance(v.get("labels", {}), dict):
            labels = {str(k): float(x) for k, x in v.get("labels", {}).items()}
            default = float(v.get("default", 0.0))
            return ("labels", labels, default)
        r.errors[f"data.{name}"] = "must be a number or {'labels': {...}, 'default': x}"
        return 0.0

    phi, psi, g = value("phi"), value("psi"), value("g")
    errors_into.merge(r)

    def make(dom):
        f = phi
        if isinstance(phi, tuple):
            f = fdsolver.BoundaryData.piecewise(dom, phi[1], phi[2])
        return fdsolver.BoundaryData(f, psi, g)

    return make


# ---------------------------------------------------------------------------
# Pipelines; each returns a list of written files


def _run_capacity(cfg, out, svg):
    r = _Reader(cfg)
    s = r.number("s", 1.0, lo=0, strict_lo=True)
    cl = r.section("cloud", required=True)
    kind = cl.choice("type", ("sphere", "disk", "ball", "csv"), "sphere")
    n_atoms = cl.integer("n_atoms", 2000, lo=1)
    radius = cl.number("radius", 1.0, lo=0, strict_lo=True)
    center = cl.vector("center", 3, np.zeros(3))
    spacing = cl.number("spacing", 0.05, lo=0, strict_lo=True)
    path = cl.data.get("path")
    method = r.choice("method", ("auto", "highs", "ipm"), "auto")
    cons_path = r.data.get("constraints")
    r.merge(cl)
    if kind == "csv" and not isinstance(path, str):
        r.errors["cloud.path"] = "required for csv clouds"
    if r.errors:
        raise ConfigError(r.errors)

    def go():
        if kind == "sphere":
            H = capacity_mod.sphere_cloud(n_atoms, radius, center)
        elif kind == "ball":
            H = capacity_mod.ball_cloud(center, radius, n_atoms)
        elif kind == "disk":
            H = capacity_mod.disk_cloud(center, radius, spacing)
        else:
            H, _ = io.read_points(path)
        cons = io.read_points(cons_path)[0] if isinstance(cons_path, str) else None
        prob = capacity_mod.CapacityProblem(H, s, cons, method=method)
        value, witness = capacity_mod.capacity_estimate(prob)
        files = [io.write_csv(out / "capacity.csv", ["set_id", "s", "value", "n_atoms", "n_constraints"],
                              [[cfg.get("set_id", kind), s, value, len(H), len(prob.constraint_points)]]),
                 io.write_points(out / "witness.csv", witness.atoms, witness.masses)]
        return files

    return go


def _barrier_setup(cfg, r):
    L = r.number("L", 0.0, lo=0)
    eps = r.number("epsilon", math.pi / 4, lo=0, strict_lo=True)
    alpha = r.number("alpha", 0.25, lo=0, strict_lo=True, hi=0.5)
    s = r.number("s", 1.0, lo=0, strict_lo=True)
    R = r.number("R", 1.0, lo=0, strict_lo=True)
    budget = r.integer("sample_budget", 4000, lo=16)
    if alpha is not None and alpha >= 0.5:
        r.errors["alpha"] = "must be < 0.5"
    return L, eps, alpha, s, R, budget


def _run_barrier(cfg, out, svg):
    r = _Reader(cfg)
    L, eps, alpha, s, R, budget = _barrier_setup(cfg, r)
    field_ = _field(r, r)
    ell_cfg = dict(cfg.get("vector_field", {})) if isinstance(cfg.get("vector_field", {}), dict) else {}
    ell_cfg.setdefault("epsilon", eps)
    rr = _Reader({"vector_field": ell_cfg})
    ell = _ell(rr, r)
    has_domain = "domain" in cfg
    dom_factory = _domain(r, r) if has_domain else None
    if r.errors:
        raise ConfigError(r.errors)

    def go():
        a, et = barrier_mod.compute_a(L, eps)
        center = np.array([0.0, 0.0, -R])
        spec = barrier_mod.BarrierSpec(s, alpha, a, R, center)
        if dom_factory is not None:
            dom = dom_factory()
        else:
            ob = geometry.BallObstacle(center, alpha * R, "core")
            dom = geometry.cone(L, 3, [ob]) if L > 0 else geometry.halfspace(3, [ob])
        rep = barrier_mod.verify_barrier(spec, dom, field_, ell, budget)
        header = ["L", "epsilon", "alpha", "s", "R", "a", "eps_tilde", "sub_elliptic_ok",
                  "dirichlet_bound_ok", "oblique_sign_ok", "outer_zero_ok", "lower_bound_ok", "eta0",
                  "worst_violation"]
        row = [L, eps, alpha, s, R, a, et, rep.sub_elliptic_ok, rep.dirichlet_bound_ok,
               rep.oblique_sign_ok, rep.outer_zero_ok, rep.lower_bound_ok, rep.eta0, rep.worst_violation]
        return [io.write_csv(out / "barrier.csv", header, [row])]

    return go


def _grid_box(r, dom):
    g = r.section("grid")
    h = g.number("h", 1.0 / 32, lo=0, strict_lo=True)
    lo = g.vector("lo", 3)
    hi = g.vector("hi", 3)
    r.merge(g)
    return h, lo, hi


def _solve_common(cfg, r):
    dom_factory = _domain(r, r)
    field_ = _field(r, r)
    ell = _ell(r, r)
    data_factory = _data(r, r, dom_factory)
    h, lo, hi = _grid_box(r, None)
    tol = r.number("tol", 1e-10, lo=0, strict_lo=True)
    method = r.choice("method", ("amg", "gauss_seidel"), "amg")
    return dom_factory, field_, ell, data_factory, h, lo, hi, tol, method


def _solve(dom, field_, ell, data, h, lo, hi, tol, method):
    if lo is None or hi is None:
        lo2, hi2 = fdsolver.domain_box(dom)
        lo = lo2 if lo is None else lo
        hi = hi2 if hi is None else hi
    grid = fdsolver.build_grid(dom, lo, hi, h)
    system = fdsolver.assemble(dom, field_, grid, ell, data)
    return fdsolver.solve(system, tol=tol, method=method)


def _run_solve(cfg, out, svg):
    r = _Reader(cfg)
    dom_factory, field_, ell, data_factory, h, lo, hi, tol, method = _solve_common(cfg, r)
    if r.errors:
        raise ConfigError(r.errors)

    def go():
        dom = dom_factory()
        sol = _solve(dom, field_, ell, data_factory(dom), h, lo, hi, tol, method)
        files = [io.write_solution(out / "solution.csv", sol),
                 io.write_csv(out / "summary.csv", ["nodes", "residual", "iterations", "min", "max"],
                              [[int(np.sum(sol.grid.kinds != 0)), sol.residual, sol.iterations,
                                float(np.nanmin(sol.flat)), float(np.nanmax(sol.flat))]])]
        if svg:
            files.append(io.svg_contour_slice(out / "solution.svg", sol, axis=1, value=0.0))
        return files

    return go


def _layer(r, a_default):
    lr = r.section("layer")
    q = lr.vector("q", 5, np.array([1.0, 2.0, 2.5, 3.0, 4.0]))
    R = lr.number("R", 1.0, lo=0, strict_lo=True)
    theta = lr.number("theta", 0.25, lo=0, strict_lo=True)
    delta = lr.number("delta", 0.1, lo=0, strict_lo=True, hi=0.5)
    kappa = lr.number("kappa", 0.05, lo=0, strict_lo=True)
    a = lr.number("a", a_default, lo=1, strict_lo=True)
    r.merge(lr)
    if r.errors:
        return None
    try:
        return chains_mod.LayerSpec(*q, R, theta, delta, kappa, a)
    except ZarembaError as exc:
        r.errors["layer"] = str(exc)
        return None


def _run_chain(cfg, out, svg):
    r = _Reader(cfg)
    dom_factory = _domain(r, r)
    s = r.number("s", 1.0, lo=0, strict_lo=True)
    density = r.integer("candidate_density", 2, lo=1)
    relaxed = r.boolean("relaxed", False)
    layer = _layer(r, barrier_mod.compute_a(0.0, math.pi / 4)[0])
    if r.errors:
        raise ConfigError(r.errors)

    def go():
        dom = dom_factory()
        chain = chains_mod.build_chain(dom, layer, s, candidate_density=density, relaxed=relaxed)
        rep = chains_mod.verify_chain(dom, chain, layer, s)
        files = [io.write_chain(out / "chain.csv", chain),
                 io.write_csv(out / "chain_report.csv",
                              ["N", "kappa_measured", "capacity_ok", "avoidance_ok", "connectivity_ok",
                               "cover_ok", "structure_ok", "capacity_ratio", "avoidance_margin",
                               "overlap_margin", "uncovered"],
                              [[chain.N, chain.kappa_measured, rep.capacity_ok, rep.avoidance_ok,
                                rep.connectivity_ok, rep.cover_ok, rep.structure_ok, rep.capacity_ratio,
                                rep.avoidance_margin, rep.overlap_margin, rep.uncovered]])]
        return files

    return go


def _run_growth(cfg, out, svg):
    from .experiments import growth_via_barrier, growth_via_capacity

    r = _Reader(cfg)
    mode = r.choice("mode", ("barrier", "capacity"), "barrier")
    dom_factory, field_, ell, data_factory, h, lo, hi, tol, method = _solve_common(cfg, r)
    L, eps, alpha, s, R, _ = _barrier_setup(cfg, r)
    center = r.vector("center", 3, np.array([0.0, 0.0, -(R or 1.0)]))
    a_cap = r.number("a", 2.0, lo=1, strict_lo=True)
    if r.errors:
        raise ConfigError(r.errors)

    def go():
        dom = dom_factory()
        sol = _solve(dom, field_, ell, data_factory(dom), h, lo, hi, tol, method)
        if mode == "barrier":
            a, _ = barrier_mod.compute_a(L, eps)
            spec = barrier_mod.BarrierSpec(s, alpha, a, R, center)
            res = growth_via_barrier(dom, field_, ell, spec, sol)
        else:
            spacing = R / 16
            H = dom.gamma1_cloud(geometry.Ball(center, R), spacing)
            H = H[np.linalg.norm(H - center, axis=1) <= R] if len(H) else H
            res = growth_via_capacity(dom, field_, sol, H, s, R, a_cap, center)
        header = ["mode", "sup_small", "sup_big", "ratio", "predicted_lower", "implied_eta", "passed"]
        return [io.write_csv(out / "growth.csv", header,
                             [[mode, res.sup_small, res.sup_big, res.ratio, res.predicted_lower,
                               res.implied_eta, res.passed]])]

    return go


def _run_dichotomy(cfg, out, svg):
    from .experiments import DichotomyConfig, dichotomy_run

    r = _Reader(cfg)
    preset = r.choice("preset", ("decay", "growth"), "decay")
    dr = r.section("dichotomy")
    Q = dr.number("Q", 2.0, lo=1, strict_lo=True)
    layers = dr.integer("M_layers", 5, lo=2)
    ppr = dr.integer("points_per_R", 32, lo=32)
    half = dr.integer("half_width", 47, lo=4)
    root_h = dr.number("root_h", 1.0 / 16, lo=0, strict_lo=True)
    check = dr.boolean("check_chains", True)
    r.merge(dr)
    field_ = _field(r, r)
    ell = _ell(r, r)
    if r.errors:
        raise ConfigError(r.errors)

    def go():
        a, _ = barrier_mod.compute_a(0.0, math.pi / 4)
        conf = DichotomyConfig(Q=Q, M_layers=layers, points_per_R=ppr, half_width=half, root_h=root_h,
                               a=a, check_chains=check)
        last_R = conf.R(conf.indices[-1])
        if preset == "decay":
            dom = geometry.disk_stack(Q=Q)
            data = fdsolver.BoundaryData(phi=fdsolver.BoundaryData.piecewise(dom, {"walls": 1.0}))
            exempt = None
        else:
            src = 0.25 * last_R
            dom = geometry.disk_stack(Q=Q, source_radius=src)
            data = fdsolver.BoundaryData(phi=fdsolver.BoundaryData.piecewise(dom, {"junction": 1.0}))
            reach = src + conf.R(conf.N0) / ppr + 1e-12
            exempt = lambda p: np.linalg.norm(p, axis=1) <= reach
        series = dichotomy_run(conf, dom, field_, ell, data, junction_exempt=exempt)
        files = [io.write_csv(out / "series.csv", ["m", "M", "capacity", "partial_sum", "recursion_eta"],
                              series.rows()),
                 io.write_csv(out / "dichotomy.csv", ["classification", "N1", "eta_fit", "r_squared",
                                                      "eta_stderr"],
                              [[series.classification, "" if series.N1 is None else series.N1,
                                series.eta_fit, series.r_squared, series.eta_stderr]])]
        if svg:
            files.append(io.svg_series(out / "series.svg", series.m, series.M, series.partial_sums))
        return files

    return go


PIPELINES = {"capacity": _run_capacity, "barrier": _run_barrier, "solve": _run_solve,
             "chain": _run_chain, "growth": _run_growth, "dichotomy": _run_dichotomy}


def _fail(out, code, record):
    text = json.dumps(record, sort_keys=True)
    print(text, file=sys.stderr)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(text + "\n", encoding="utf-8")
    except OSError:
        pass
    return code


def run(argv=None):
    """Entry point; returns the exit status."""
    parser = argparse.ArgumentParser(prog="zaremba", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--svg", action="store_true", help="also emit SVG plots")
    args = parser.parse_args(argv)
    out = Path(args.out)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = json.loads(text) if text.strip() else None
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(out, 2, {"status": "invalid", "errors": {"config": str(exc)}})
    if not isinstance(cfg, dict) or not cfg:
        return _fail(out, 2, {"status": "invalid", "errors": {"config": "empty or not a JSON object"}})
    if "command" in cfg and cfg["command"] != args.command:
        return _fail(out, 2, {"status": "invalid",
                              "errors": {"command": f"config is for {cfg['command']!r}, not {args.command!r}"}})
    try:
        job = PIPELINES[args.command](cfg, out, args.svg)
    except ConfigError as exc:
        return _fail(out, 2, {"status": "invalid", "errors": exc.errors})
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = job()
    except ZarembaError as exc:
        return _fail(out, 1, {"status": "error", "type": type(exc).__name__, "message": str(exc)})
    io.write_manifest(out, args.command, cfg, files, __version__)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
