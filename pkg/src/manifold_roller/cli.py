"""Command line front end: ``manifold-roller <command> [flags]``.

Every command takes an optional YAML (or JSON) config file; flags override
the file, and the file overrides built-in defaults. Outputs go to ``--out``
together with ``metadata.json`` (config echo, config hash, versions). The
config hash covers everything except the execution-only keys ``out`` and
``threads``, so reruns with another thread count or output directory give
byte-identical files.

Exit codes: 0 success, 1 a check failed, 2 bad configuration or input.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import io
from .connection import default_rule, parse_rule
from .frames import Frame, standard_frame
from .holonomy import latitude_holonomy, loop_holonomy
from .integrals import coordinate_form, ito_integral, metric_tensor, quadratic_variation, stratonovich_integral
from .manifolds import GeometryError, Point, Sphere, parse_manifold
from .martingale import SphereMartingaleExperiment, martingale_test
from .parallel import chunked_map
from .paths import (DriverPath, PathError, RngConfig, RolledPath, compensate, gen_brownian,
                    gen_compound_poisson, half_ball_sampler, superpose, uniform_ball_sampler,
                    uniform_grid, validate_rolled)
from .rolling import SchemeConfig, antidevelop, convergence_study, develop_many, horizontal_lift, sup_error

COMMANDS = ("develop", "lift", "antidevelop", "roundtrip", "holonomy", "convergence", "integrate",
            "martingale-test", "gen-driver")
EXECUTION_KEYS = ("out", "threads")

DEFAULTS = {
    "manifold": "sphere:2",
    "seed": 0,
    "paths": 1,
    "steps": 1000,
    "horizon": 1.0,
    "rule": None,
    "scheme": "euler",
    "out": "out",
    "threads": None,
    "z_threshold": 4.0,
    "format": "jsonl",
    "start": None,
    "input": None,
    "driver": {"sigma": 1.0, "rate": 0.0, "law": "ball", "radius": 1.0, "compensated": False, "file": None},
    "roundtrip": {"tolerance": None, "error_constant": 5.0},
    "holonomy": {"loop": "octant", "legs": "exact", "points_per_leg": 1000, "colatitude": 1.0, "tolerance": None},
    "convergence": {"levels": 4, "bridge_sigma": None, "min_order": None, "max_order": None},
    "integrate": {"stratonovich": True, "qv": True},
    "martingale": {"rate": 2.0, "law": "ball", "radius": 1.0, "sigma": 1.0, "compensated": True,
                   "correct_jumps": True, "checks": 5, "chunk_size": 512},
}

# Keys whose default is None still need a type.
NULLABLE_TYPES = {
    "rule": str, "threads": int, "start": list, "input": str, "driver.file": str,
    "roundtrip.tolerance": float, "holonomy.tolerance": float, "convergence.bridge_sigma": float,
    "convergence.min_order": float, "convergence.max_order": float,
}
CHOICES = {
    "scheme": ("euler", "heun"), "rule": ("euclid", "proj", "geo"), "format": ("jsonl", "csv"),
    "driver.law": ("ball", "half-ball"), "martingale.law": ("ball", "half-ball"),
    "holonomy.loop": ("octant", "latitude"), "holonomy.legs": ("exact", "discretized"),
}


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ config

def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}:{where}: {getattr(exc, 'problem', None) or exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _coerce(key, value, default):
    if value is None:
        return None
    typ = type(default) if default is not None else NULLABLE_TYPES.get(key)
    try:
        if typ is bool:
            if not isinstance(value, bool):
                raise TypeError
        elif typ is int:
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            value = int(value)
        elif typ is float:
            if isinstance(value, bool):
                raise TypeError
            value = float(value)
        elif typ is str:
            value = str(value)
        elif typ is list:
            value = [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"field '{key}': expected {typ.__name__}, got {value!r}") from None
    if key in CHOICES and value not in CHOICES[key]:
        raise ConfigError(f"field '{key}': must be one of {', '.join(CHOICES[key])}, got {value!r}")
    return value


def merge(base: dict, override: dict, prefix="") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        name = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown field '{name}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"field '{name}': expected a mapping")
            out[key] = merge(base[key], value, name + ".")
        else:
            out[key] = _coerce(name, value, base[key])
    return out


FLAG_KEYS = ("seed", "paths", "steps", "horizon", "manifold", "rule", "scheme", "out", "threads",
             "z_threshold", "format", "input")


def resolve_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        cfg = merge(cfg, load_config_file(args.config))
    flags = {k: getattr(args, k) for k in FLAG_KEYS if getattr(args, k, None) is not None}
    cfg = merge(cfg, flags)
    for key in ("paths", "steps"):
        if cfg[key] < 1:
            raise ConfigError(f"field '{key}': must be >= 1")
    if cfg["horizon"] <= 0:
        raise ConfigError("field 'horizon': must be > 0")
    if cfg["seed"] < 0 or cfg["seed"] >= 2 ** 64:
        raise ConfigError("field 'seed': must be an unsigned 64-bit integer")
    try:
        parse_manifold(cfg["manifold"])
    except (ValueError, GeometryError) as exc:
        raise ConfigError(f"field 'manifold': {exc}") from None
    return cfg


def hashed_config(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in EXECUTION_KEYS}


# ------------------------------------------------------------------ context

class Run:
    """Resolved configuration plus the objects every command needs."""

    def __init__(self, command: str, cfg: dict):
        self.command = command
        self.cfg = cfg
        self.manifold = parse_manifold(cfg["manifold"])
        try:
            self.rule = parse_rule(cfg["rule"]) if cfg["rule"] else default_rule(self.manifold)
            self.rule.check_manifold(self.manifold)
        except (ValueError, GeometryError) as exc:
            raise ConfigError(f"field 'rule': {exc}") from None
        self.scheme = SchemeConfig.parse(cfg["scheme"])
        self.out = Path(cfg["out"])
        self.hash = io.config_hash({"command": command, **hashed_config(cfg)})
        self.x0 = self._start()
        self.u0 = standard_frame(self.x0)
        self.grid = uniform_grid(cfg["horizon"], cfg["steps"])

    def _start(self):
        m = self.manifold
        if self.cfg["start"] is not None:
            try:
                return m.point(np.asarray(self.cfg["start"]))
            except (ValueError, GeometryError) as exc:
                raise ConfigError(f"field 'start': {exc}") from None
        x = np.zeros(m.ambient_dim)
        if isinstance(m, Sphere):
            x[-1] = 1.0
        return m.point(x)

    # -- drivers
    def _law(self, name, radius):
        return uniform_ball_sampler(radius) if name == "ball" else half_ball_sampler(radius)

    def driver(self, index: int) -> DriverPath:
        dc = self.cfg["driver"]
        d = self.manifold.dim
        if dc["file"]:
            W, _ = self._read(dc["file"], DriverPath)
            if W.dim != d:
                raise ConfigError(f"field 'driver.file': driver has dimension {W.dim}, manifold needs {d}")
            return W
        g = RngConfig(self.cfg["seed"]).child(index).generator()
        times = self.grid
        jumps = None
        if dc["rate"] > 0:
            law = self._law(dc["law"], dc["radius"])
            jumps = gen_compound_poisson(self.grid, d, dc["rate"], law, g)
            if dc["compensated"]:
                jumps = compensate(jumps, dc["rate"] * np.asarray(law.mean(d)))
            times = jumps.times
        W = gen_brownian(times, d, g, dc["sigma"])
        return superpose(W, jumps) if jumps is not None else W

    def _read(self, path, kind):
        try:
            obj, _ = io.read_path(path)
        except (OSError, PathError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        if not isinstance(obj, kind):
            raise ConfigError(f"{path} holds a {type(obj).__name__}, expected a {kind.__name__}")
        return obj, _

    def input_path(self) -> RolledPath | None:
        if not self.cfg["input"]:
            return None
        X, _ = self._read(self.cfg["input"], RolledPath)
        if X.manifold != self.manifold:
            raise ConfigError(f"input lives on {X.manifold.name}, config says {self.manifold.name}")
        return X

    def map_paths(self, fn):
        """fn(list of indices) -> list of results, over all paths, in index order."""
        parts = chunked_map(lambda idx: fn([int(i) for i in idx]), self.cfg["paths"], self.cfg["threads"],
                            chunk_size=64)
        return [r for part in parts for r in part]

    # -- outputs
    def meta(self, **extra):
        return {"command": self.command, "seed": self.cfg["seed"], "manifold": self.manifold.name,
                "scheme": self.scheme.scheme.value, "rule": self.rule.label, **extra}

    def fname(self, stem, index=None, ext=None):
        ext = ext or self.cfg["format"]
        return self.out / (f"{stem}_{index:05d}.{ext}" if index is not None else f"{stem}.{ext}")

    def write_path(self, stem, index, obj, **meta):
        io.write_path(self.fname(stem, index), obj, metadata=self.meta(path_index=index, **meta),
                      config_hash_value=self.hash)

    def finish(self, report: dict | None = None, passed: bool = True) -> int:
        self.out.mkdir(parents=True, exist_ok=True)
        io.write_metadata(self.out / "metadata.json", {"command": self.command, **hashed_config(self.cfg)})
        if report is not None:
            report = {"command": self.command, "config_hash": self.hash, "passed": passed, **report}
            (self.out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True,
                                                             default=io._json_default) + "\n")
        return 0 if passed else 1


# ------------------------------------------------------------------ commands

def _developed(run: Run, indices):
    drivers = [run.driver(i) for i in indices]
    return list(zip(drivers, develop_many(drivers, run.x0, run.u0, run.scheme)))


def cmd_gen_driver(run: Run) -> int:
    run.out.mkdir(parents=True, exist_ok=True)
    drivers = run.map_paths(lambda idx: [run.driver(i) for i in idx])
    for i, W in enumerate(drivers):
        run.write_path("driver", i, W)
    jumps = [len(W.jump_index) for W in drivers]
    print(f"wrote {len(drivers)} driver path(s) to {run.out} ({sum(jumps)} jumps)")
    return run.finish({"paths": len(drivers), "jumps": jumps})


def cmd_develop(run: Run) -> int:
    run.out.mkdir(parents=True, exist_ok=True)
    pairs = run.map_paths(lambda idx: _developed(run, idx))
    worst, ok = 0.0, True
    for i, (W, X) in enumerate(pairs):
        run.write_path("driver", i, W)
        run.write_path("rolled", i, X)
        rep = validate_rolled(X)
        worst, ok = max(worst, rep.max_error), ok and rep.passed
    print(f"developed {len(pairs)} path(s) on {run.manifold.name}; max jump/frame residual {worst:.3e}")
    return run.finish({"paths": len(pairs), "max_residual": worst}, ok)


def cmd_lift(run: Run) -> int:
    run.out.mkdir(parents=True, exist_ok=True)
    X = run.input_path()
    if X is not None:
        u0 = standard_frame(Point(X.points[0], X.manifold)) if not X.has_frames else \
            Frame(Point(X.points[0], X.manifold), X.frames[0])
        L = horizontal_lift(X, u0, run.rule)
        run.write_path("lifted", None, L)
        rep = validate_rolled(L)
        print(f"lifted input path; residual {rep.max_error:.3e}")
        return run.finish({"max_residual": rep.max_error}, rep.passed)
    pairs = run.map_paths(lambda idx: _developed(run, idx))
    diffs, ok = [], True
    for i, (_, X) in enumerate(pairs):
        L = horizontal_lift(X.strip_frames(), run.u0, run.rule)
        run.write_path("lifted", i, L)
        diffs.append(float(np.max(np.abs(L.frames - X.frames))))
        ok = ok and validate_rolled(L).passed
    print(f"lifted {len(pairs)} developed path(s); max frame difference to development {max(diffs):.3e}")
    return run.finish({"frame_difference": diffs}, ok)


def cmd_antidevelop(run: Run) -> int:
    run.out.mkdir(parents=True, exist_ok=True)
    X = run.input_path()
    if X is not None:
        if not X.has_frames:
            X = horizontal_lift(X, standard_frame(Point(X.points[0], X.manifold)), run.rule)
        run.write_path("antidevelopment", None, antidevelop(X, run.rule))
        print("anti-developed input path")
        return run.finish({})
    pairs = run.map_paths(lambda idx: _developed(run, idx))
    errs = []
    for i, (W, X) in enumerate(pairs):
        V = antidevelop(X, run.rule)
        run.write_path("antidevelopment", i, V)
        errs.append(sup_error(W, V))
    print(f"anti-developed {len(pairs)} path(s); max sup error to the driver {max(errs):.3e}")
    return run.finish({"sup_error": errs})


def cmd_roundtrip(run: Run) -> int:
    pairs = run.map_paths(lambda idx: _developed(run, idx))
    errs = [sup_error(W, antidevelop(X, run.rule)) for W, X in pairs]
    h = run.cfg["horizon"] / run.cfg["steps"]
    tol = run.cfg["roundtrip"]["tolerance"]
    if tol is None:
        if run.manifold.is_flat:
            tol = 1e-11
        elif run.rule.is_minimal_geodesic:
            tol = 1e-9
        else:
            tol = run.cfg["roundtrip"]["error_constant"] * h
    worst = max(errs)
    passed = worst <= tol
    print(f"round trip on {run.manifold.name} with rule {run.rule.label}: max sup error {worst:.3e} "
          f"(tolerance {tol:.1e}) {'PASS' if passed else 'FAIL'}")
    return run.finish({"sup_error": errs, "max_error": worst, "tolerance": tol, "step": h}, passed)


def cmd_holonomy(run: Run) -> int:
    hc = run.cfg["holonomy"]
    if not (isinstance(run.manifold, Sphere) and run.manifold.dim == 2):
        raise ConfigError("holonomy presets live on sphere:2")
    if hc["loop"] == "octant":
        ppl = None if hc["legs"] == "exact" else hc["points_per_leg"]
        res = loop_holonomy(points_per_leg=ppl, rule=run.rule)
        default_tol = 1e-6 if ppl is None else 2e-3
    else:
        res = latitude_holonomy(hc["colatitude"], hc["points_per_leg"], run.rule)
        default_tol = 2e-3
    tol = hc["tolerance"] if hc["tolerance"] is not None else default_tol
    passed = res.error <= tol
    print(f"holonomy ({hc['loop']}, {res.method}): angle {res.angle:.12f}, expected {res.expected:.12f}, "
          f"error {res.error:.3e} {'PASS' if passed else 'FAIL'}")
    return run.finish({**res.to_dict(), "tolerance": tol}, passed)


def cmd_convergence(run: Run) -> int:
    cc = run.cfg["convergence"]
    bridge = cc["bridge_sigma"] if cc["bridge_sigma"] is not None else run.cfg["driver"]["sigma"]
    rng = RngConfig(run.cfg["seed"], 1).generator()
    table = convergence_study(run.driver(0), run.x0, run.u0, cc["levels"], rng, bridge, run.scheme)
    print(table.to_text())
    run.out.mkdir(parents=True, exist_ok=True)
    io.write_table_csv(run.fname("convergence", ext="csv"), ["h", "point_error", "frame_error", "order"],
                       ([h, e, f, "" if math.isnan(p) else p] for h, e, f, p in table.rows()), metadata=run.meta(), config_hash_value=run.hash)
    orders = [p for p in table.orders if math.isfinite(p)]
    passed = True
    if cc["min_order"] is not None:
        passed = passed and bool(orders) and min(orders) >= cc["min_order"]
    if cc["max_order"] is not None:
        passed = passed and bool(orders) and max(orders) <= cc["max_order"]
    return run.finish({"step_sizes": table.step_sizes, "point_errors": table.point_errors,
                       "frame_errors": table.frame_errors, "orders": table.orders}, passed)


def cmd_integrate(run: Run) -> int:
    run.out.mkdir(parents=True, exist_ok=True)
    ic = run.cfg["integrate"]
    X_in = run.input_path()
    paths = [X_in] if X_in is not None else [X for _, X in run.map_paths(lambda idx: _developed(run, idx))]
    m = run.manifold
    forms = [coordinate_form(m, k) for k in range(m.ambient_dim)]
    summary = []
    for i, X in enumerate(paths):
        idx = None if X_in is not None else i
        row = {}
        for k, form in enumerate(forms):
            ito = ito_integral(form, X, run.rule)
            run.write_path(f"ito_x{k + 1}", idx, ito)
            row[f"ito_x{k + 1}"] = float(ito.right_values[-1, 0])
            if ic["stratonovich"]:
                st = stratonovich_integral(form, X, run.rule)
                run.write_path(f"strat_x{k + 1}", idx, st)
                row[f"strat_x{k + 1}"] = float(st.right_values[-1, 0])
        if ic["qv"]:
            qv = quadratic_variation(metric_tensor(m), X, run.rule)
            qpath = DriverPath(X.times, qv.continuous_increments[:, None], qv.jump_index, qv.jump_terms[:, None])
            run.write_path("qv", idx, qpath)
            row["qv"] = qv.total
        summary.append(row)
    print(f"integrated {len(paths)} path(s); terminal values of path 0: "
          + ", ".join(f"{k}={v:.6g}" for k, v in summary[0].items()))
    return run.finish({"terminal": summary})


def martingale_experiment(run: Run) -> SphereMartingaleExperiment:
    if not isinstance(run.manifold, Sphere):
        raise ConfigError("martingale-test runs on sphere:d")
    mc = run.cfg["martingale"]
    law = uniform_ball_sampler(mc["radius"]) if mc["law"] == "ball" else half_ball_sampler(mc["radius"])
    if mc["radius"] > 1 and mc["correct_jumps"]:
        raise ConfigError("field 'martingale.radius': jumps must satisfy |dZ| <= 1")
    return SphereMartingaleExperiment(
        dim=run.manifold.dim, horizon=run.cfg["horizon"], steps=run.cfg["steps"], rate=mc["rate"],
        jump_law=law, sigma=mc["sigma"], compensated=mc["compensated"], correct_jumps=mc["correct_jumps"],
        n_checks=mc["checks"], cfg=run.scheme,
        label=f"{mc['law']}{'' if mc['compensated'] else ', uncompensated'}"
              f"{'' if mc['correct_jumps'] else ', no jump correction'}")


def cmd_martingale(run: Run) -> int:
    exp = martingale_experiment(run)
    rep = martingale_test(exp, run.cfg["paths"], run.cfg["seed"], run.cfg["z_threshold"], run.cfg["threads"],
                          run.cfg["martingale"]["chunk_size"])
    print(rep.table())
    run.out.mkdir(parents=True, exist_ok=True)
    rows = ([name, t, rep.means[j, k], rep.std_errors[j, k], rep.z_scores[j, k]]
            for k, name in enumerate(rep.names) for j, t in enumerate(rep.check_times))
    io.write_table_csv(run.fname("martingale", ext="csv"), ["functional", "t", "mean", "std_error", "z"], rows,
                       metadata=run.meta(), config_hash_value=run.hash)
    return run.finish(rep.to_dict(), rep.passed)


HANDLERS = {
    "develop": cmd_develop, "lift": cmd_lift, "antidevelop": cmd_antidevelop, "roundtrip": cmd_roundtrip,
    "holonomy": cmd_holonomy, "convergence": cmd_convergence, "integrate": cmd_integrate,
    "martingale-test": cmd_martingale, "gen-driver": cmd_gen_driver,
}


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML or JSON config file; flags override it")
    common.add_argument("--seed", type=int, metavar="U64")
    common.add_argument("--paths", type=int, metavar="N", help="number of independent paths")
    common.add_argument("--steps", type=int, metavar="N", help="grid steps on [0, T]")
    common.add_argument("--horizon", type=float, metavar="T")
    common.add_argument("--manifold", metavar="{flat:d|sphere:d}")
    common.add_argument("--rule", choices=("euclid", "proj", "geo"))
    common.add_argument("--scheme", choices=("euler", "heun"))
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--threads", type=int, metavar="N",
                        help="worker threads (default: $MANIFOLD_ROLLER_THREADS, else all cores)")
    common.add_argument("--z-threshold", dest="z_threshold", type=float, metavar="F")
    common.add_argument("--format", choices=("jsonl", "csv"), help="path file format")
    common.add_argument("--input", metavar="PATH", help="rolled path file (lift, antidevelop, integrate)")
    parser = argparse.ArgumentParser(prog="manifold-roller",
                                     description="Roll jump paths onto flat space and spheres.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "develop": "develop driver paths into manifold and frame paths",
        "lift": "horizontal lift of a manifold path",
        "antidevelop": "read a manifold path back into R^d",
        "roundtrip": "develop then anti-develop; compare with the driver",
        "holonomy": "frame rotation around a closed loop on S^2",
        "convergence": "error table under step refinement",
        "integrate": "Ito / Stratonovich integrals of coordinate forms and the quadratic variation",
        "martingale-test": "Monte Carlo test that a sphere construction has no drift",
        "gen-driver": "generate and save driver paths",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        run = Run(args.command, cfg)
        return HANDLERS[args.command](run)
    except ConfigError as exc:
        print(f"manifold-roller: configuration error: {exc}", file=sys.stderr)
        return 2
    except (PathError, GeometryError) as exc:
        print(f"manifold-roller: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
