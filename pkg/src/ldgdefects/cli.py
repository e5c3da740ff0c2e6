"""Command-line driver: `ldgdefects run CONFIG` and `ldgdefects sweep CONFIG --eps ...`.

Configuration files are INI-style with sections [material], [scenario],
[solver], [outputs] and [verify]. Exit codes: 0 success, 2 configuration
error, 3 solver error (including non-convergence), 4 failed check.
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from . import defect, io, scenario, verify
from .errors import ConfigError, LdgError, SolverError
from .field import write_vtk
from .potential import MaterialParams
from .solver import SolveConfig, relax

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4

SCENARIOS = ("disk", "disk_trivial", "cylinder", "hedgehog", "torus", "dumbbell")
CHECKS = ("el_residual", "pohozaev", "monotonicity", "star_bound", "stress_energy")

_SCHEMA = {
    "material": {"a": float, "b": float, "c": float},
    "scenario": {"name": str, "epsilon": float, "resolution": int, "k": float, "L": float, "r": float,
                 "R": float, "height": float, "threshold": float, "seed": int, "init": str},
    "solver": {"dt_safety": float, "max_iters": int, "grad_tol": float, "linfty_projection": bool,
               "log_every": int},
    "outputs": {"dir": str, "vtk": bool, "trace": bool},
    "verify": {"checks": str, "center": str, "radius": float, "radii": str, "box": str},
}

_DEFAULTS = {
    "material": {"a": 1.0, "b": 1.0, "c": 1.0},
    "scenario": {"k": 0.5, "L": 6.0, "r": 0.3, "R": 1.0, "height": 1.2, "threshold": 0.3, "seed": 0,
                 "init": ""},
    "solver": {"dt_safety": 0.9, "max_iters": 200000, "grad_tol": 1e-4, "linfty_projection": True,
               "log_every": 100},
    "outputs": {"dir": "out", "vtk": True, "trace": True},
    "verify": {"checks": "el_residual", "center": "", "radius": 0.5, "radii": "", "box": ""},
}


@dataclass
class RunConfig:
    values: dict = dc_field(default_factory=dict)

    def __getitem__(self, key):
        sec, _, name = key.partition(".")
        return self.values[sec][name]

    def flat(self) -> dict:
        return {f"{s}.{k}": self.values[s][k] for s in _SCHEMA for k in _SCHEMA[s] if k in self.values[s]}

    def with_epsilon(self, eps: float) -> "RunConfig":
        """Same run at another eps, keeping eps/h fixed."""
        vals = {s: dict(v) for s, v in self.values.items()}
        e0 = vals["scenario"]["epsilon"]
        vals["scenario"]["resolution"] = int(round(vals["scenario"]["resolution"] * e0 / eps))
        vals["scenario"]["epsilon"] = float(eps)
        return RunConfig(vals)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    unknown = set(cp.sections()) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    values = {}
    for sec, schema in _SCHEMA.items():
        out = dict(_DEFAULTS.get(sec, {}))
        if cp.has_section(sec):
            for key, raw in cp.items(sec):
                if key not in schema:
                    raise ConfigError(f"unknown key {sec}.{key}")
                conv = _parse_bool if schema[key] is bool else schema[key]
                try:
                    out[key] = conv(raw.strip())
                except ValueError as exc:
                    raise ConfigError(f"bad value for {sec}.{key}: {raw!r}") from exc
        values[sec] = out
    sc = values["scenario"]
    for key in ("name", "epsilon", "resolution"):
        if key not in sc:
            raise ConfigError(f"missing scenario.{key}")
    if sc["name"] not in SCENARIOS:
        raise ConfigError(f"unknown scenario {sc['name']!r}; choose from {SCENARIOS}")
    checks = [c.strip() for c in values["verify"]["checks"].split(",") if c.strip()]
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown checks {bad}")
    return RunConfig(values)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def build_scenario(cfg: RunConfig) -> scenario.Scenario:
    m = cfg.values["material"]
    try:
        params = MaterialParams(m["a"], m["b"], m["c"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    s = cfg.values["scenario"]
    name, eps, res = s["name"], s["epsilon"], s["resolution"]
    try:
        if name in ("disk", "disk_trivial"):
            sc = scenario.disk_scenario(params, eps, res, k=s["k"], R=s["R"], trivial=name == "disk_trivial")
        elif name == "cylinder":
            sc = scenario.cylinder_scenario(params, eps, res, k=s["k"], R=s["R"], height=s["height"])
        elif name == "hedgehog":
            sc = scenario.hedgehog_scenario(params, eps, res)
        elif name == "torus":
            sc = scenario.torus_scenario(params, eps, res)
        else:
            sc = scenario.dumbbell_scenario(params, s["L"], s["r"], eps, res)
    except LdgError as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from exc
    if s["init"]:
        sc.init = s["init"]
    return sc


def _default_center(sc: scenario.Scenario):
    if sc.name == "torus":
        return (scenario.TORUS_MAJOR, 0.0)
    return tuple([0.0] * sc.domain.dim)


def _run_checks(cfg: RunConfig, sc, field, params, report) -> list:
    v = cfg.values["verify"]
    names = [c.strip() for c in v["checks"].split(",") if c.strip()]
    center = tuple(_floats(v["center"])) if v["center"] else _default_center(sc)
    out = []
    for name in names:
        if name == "el_residual":
            out.append(verify.check_el_residual(field, params, cfg["solver.grad_tol"]))
        elif name == "pohozaev":
            out.append(verify.check_pohozaev(field, params, center, v["radius"]))
        elif name == "monotonicity":
            radii = _floats(v["radii"]) if v["radii"] else [0.2, 0.3, 0.4, 0.5]
            out.append(verify.check_monotonicity(field, params, center, radii))
        elif name == "star_bound":
            out.append(verify.check_star_bound(field, params, center, v["radius"]))
        elif name == "stress_energy":
            box = _floats(v["box"]) if v["box"] else [-0.5, 0.5]
            d = sc.domain.dim
            lo = [box[0]] * d if len(box) == 2 else box[:d]
            hi = [box[1]] * d if len(box) == 2 else box[d:]
            out.append(verify.check_stress_energy(field, params, lo, hi, seed=cfg["scenario.seed"]))
    return out


@dataclass
class RunResult:
    energy: float
    converged: bool
    iterations: int
    defects: defect.DefectSet
    checks: list
    out_dir: Path


def execute(cfg: RunConfig, out_dir: Path) -> RunResult:
    """Solve one configuration and write trace, defect report and checks."""
    sc = build_scenario(cfg)
    params = sc.params
    s = cfg.values["solver"]
    scfg = SolveConfig(dt_safety=s["dt_safety"], max_iters=s["max_iters"], grad_tol=s["grad_tol"],
                       linfty_projection=s["linfty_projection"], seed=cfg["scenario.seed"],
                       log_every=s["log_every"])
    meta = cfg.flat()
    meta["resolved.h"] = sc.domain.h
    init = sc.initial_field(seed=cfg["scenario.seed"])
    field, rep = relax(init, params, scfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg["outputs.trace"]:
        rep.write_trace(out_dir / "trace.csv", meta)
    ds = defect.extract_defects(field, params, cfg["scenario.threshold"])
    defect.annotate_topology(ds, field, params)
    ds.write_report(out_dir / "defects.csv", meta)
    try:
        checks = _run_checks(cfg, sc, field, params, rep)
    except ValueError as exc:
        raise ConfigError(f"[verify] {exc}") from exc
    verify.write_reports(out_dir / "checks.csv", checks, meta)
    if cfg["outputs.vtk"]:
        write_vtk(out_dir / "field.vtk", field, params)
    io.write_csv(out_dir / "summary.csv",
                 ("scenario", "eps", "h", "iterations", "converged", "elastic", "bulk", "total", "residual"),
                 [(sc.name, sc.epsilon, sc.domain.h, rep.iterations, rep.converged, rep.energy.elastic,
                   rep.energy.bulk, rep.energy.total, rep.residual)], meta)
    return RunResult(rep.energy.total, rep.converged, rep.iterations, ds, checks, out_dir)


def _set_threads(n: int | None):
    if n is None:
        return
    import numba
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or cfg["outputs.dir"])
    res = execute(cfg, out)
    for c in res.checks:
        print(c.summary())
    print(f"energy={res.energy:.10g} iterations={res.iterations} converged={res.converged} "
          f"defects={[c.kind for c in res.defects.components]}")
    if not res.converged:
        print("solver did not reach the residual tolerance", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK if all(c.passed for c in res.checks) else EXIT_CHECK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    try:
        eps_list = _floats(args.eps)
    except ValueError as exc:
        raise ConfigError(f"bad --eps list: {args.eps!r}") from exc
    if not eps_list:
        raise ConfigError("empty --eps list")
    if any(not 0 < e < 1 for e in eps_list):
        raise ConfigError("--eps values must lie in (0, 1)")
    out = Path(args.out or cfg["outputs.dir"])
    rows, energies, converged = [], {}, True
    for eps in eps_list:
        sub = cfg.with_epsilon(eps)
        res = execute(sub, out / f"eps_{eps:g}")
        energies[eps] = res.energy
        converged &= res.converged
        first = res.defects.components[0].centroid if res.defects.components else []
        cen = list(first) + [math.nan] * (3 - len(first))
        rows.append((eps, build_scenario(sub).domain.h, res.energy, res.energy / abs(math.log(eps)),
                     len(res.defects.components), *cen, res.iterations, res.converged))
    meta = cfg.flat()
    io.write_csv(out / "sweep.csv", ("eps", "h", "energy", "energy_per_log", "components", "centroid_x",
                                    "centroid_y", "centroid_z", "iterations", "converged"), rows, meta)
    checks = []
    name = cfg["scenario.name"]
    if name in ("disk", "disk_trivial") and len(eps_list) >= verify.TOLERANCES["kappa_min_points"]:
        params = build_scenario(cfg).params
        target = params.kappa_star if name == "disk" else 0.0
        kw = {"abs_tol": 0.35} if name == "disk_trivial" else {}
        checks.append(verify.kappa_sweep(lambda e: energies[e], eps_list, target, **kw))
        verify.write_reports(out / "sweep_checks.csv", checks, meta)
        for c in checks:
            print(c.summary())
    for r in rows:
        print(",".join(io.fmt(v) for v in r))
    if not converged:
        return EXIT_SOLVER
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ldgdefects", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None, help="number of compute threads")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="solve one configuration")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory (overrides [outputs] dir)")
    r.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    s = sub.add_parser("sweep", help="repeat a configuration over several eps values")
    s.add_argument("config")
    s.add_argument("--eps", required=True, help="comma-separated eps values")
    s.add_argument("--out", default=None)
    s.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _set_threads(args.threads)
        return cmd_run(args) if args.command == "run" else cmd_sweep(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except LdgError as exc:
        print(f"check error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
