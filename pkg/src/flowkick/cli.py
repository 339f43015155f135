"""Command-line front end.

``flowkick simulate|equilibria|branch|bifcurve|grid|models``. Every output
file starts with the tool version and a hash of the run configuration, and
identical configurations produce byte-identical CSV and JSON.

Exit codes: 0 success, 2 usage error, 3 numeric failure.
"""

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .continuation import (StepControl, continue_branch, continue_ns_curve, continue_sn_curve,
                           find_fixed_points, stability_grid, tc_curve_at_invariant)
from .dynamics import DisturbanceParams, iterate_orbit
from .equilibria import newton_fixed_point
from .errors import FlowKickError
from .exprsys import ExprError, parse_system
from .models import CATALOG, get_model
from .svg import PALETTE, Figure, limits

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
SCHEMA_VERSION = 1
FORMATS = ("csv", "json", "svg")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: str = None
    system_file: str = None
    system_sha256: str = None
    tau: float = None
    lam: float = None
    kappa: float = None
    window: list = None
    tol: float = 1e-10
    out: str = "."
    formats: list = field(default_factory=lambda: ["csv", "json"])
    threads: int = 1
    seed: int = 0
    options: dict = field(default_factory=dict)

    # where results go and how many workers compute them do not change the results
    NOT_RECORDED = ("out", "threads")

    def to_dict(self):
        d = asdict(self)
        for key in self.NOT_RECORDED:
            d.pop(key)
        return d

    def canonical(self):
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


# ---------------------------------------------------------------------------
# emitters


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


class Writer:
    def __init__(self, cfg):
        self.cfg = cfg
        self.written = []

    def _path(self, stem, ext):
        os.makedirs(self.cfg.out, exist_ok=True)
        return os.path.join(self.cfg.out, f"{stem}.{ext}")

    def header_lines(self):
        return [f"flowkick {__version__}", f"run_config_sha256: {self.cfg.digest()}",
                f"run_config: {self.cfg.canonical()}"]

    def csv(self, stem, columns, rows, notes=()):
        if "csv" not in self.cfg.formats:
            return
        buf = io.StringIO()
        for line in self.header_lines() + list(notes):
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_num(v) for v in row])
        self._write(self._path(stem, "csv"), buf.getvalue())

    def json(self, stem, data):
        if "json" not in self.cfg.formats:
            return
        doc = {"schema_version": SCHEMA_VERSION, "tool": "flowkick", "version": __version__,
               "run_config_sha256": self.cfg.digest(), "run_config": self.cfg.to_dict(),
               "data": data}
        text = json.dumps(_jsonable(doc), indent=1, allow_nan=False) + "\n"
        self._write(self._path(stem, "json"), text)

    def svg(self, stem, fig):
        if "svg" not in self.cfg.formats:
            return
        fig.comment = " ".join(self.header_lines()[:2])
        self._write(self._path(stem, "svg"), fig.render())

    def _write(self, path, text):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.written.append(path)


# ---------------------------------------------------------------------------
# argument helpers


def _pair(text, what="window"):
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"{what} must look like a:b, got {text!r}") from None
    return a, b


def _axis(text, what):
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise UsageError(f"{what} must look like a:b:n, got {text!r}") from None
    if n < 1 or (n > 1 and not a < b):
        raise UsageError(f"{what} must have a < b and n >= 1")
    return np.linspace(a, b, n)


def _state(text, n):
    try:
        x = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"bad state {text!r}; use comma-separated numbers") from None
    if x.size != n:
        raise UsageError(f"state {text!r} has {x.size} components, system has {n}")
    return x


def _load(cfg):
    if cfg.system_file:
        try:
            with open(cfg.system_file, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read system file: {exc}") from None
        cfg.system_sha256 = hashlib.sha256(text.encode()).hexdigest()
        try:
            return parse_system(text)
        except ExprError as exc:
            raise UsageError(f"{cfg.system_file}: {exc}") from None
    if cfg.model is None:
        raise UsageError("one of --model or --system is required")
    try:
        return get_model(cfg.model).system
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _params(cfg, tau_required=True, tau_default=None):
    tau = cfg.tau if cfg.tau is not None else tau_default
    if tau is None:
        if tau_required:
            raise UsageError("--tau is required")
        tau = 0.0
    if tau < 0:
        raise UsageError("--tau must be non-negative")
    if cfg.kappa is not None:
        if tau <= 0:
            raise UsageError("--kappa needs --tau > 0 (lambda = kappa / tau)")
        return DisturbanceParams(tau, cfg.kappa / tau)
    if cfg.lam is None:
        raise UsageError("one of --lambda or --kappa is required")
    return DisturbanceParams(tau, cfg.lam)


def _starts(cfg, sys, n_starts, box):
    rng = np.random.default_rng(cfg.seed)
    lo, hi = box
    return [rng.uniform(lo, hi, sys.n) for _ in range(n_starts)]


def _xcols(sys):
    return [f"x_{i + 1}" for i in range(sys.n)]


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg, out):
    sys_ = _load(cfg)
    p = _params(cfg)
    if p.tau <= 0:
        raise UsageError("simulate needs --tau > 0")
    opts = cfg.options
    x0s = [_state(t, sys_.n) for t in opts["x0"]] if opts["x0"] else [np.full(sys_.n, 0.5)]
    rows, summary, fig_lines = [], [], []
    for k, x0 in enumerate(x0s):
        info = {"orbit": k, "x0": x0, "exited": False, "diverged": False}
        try:
            orbit = iterate_orbit(sys_, x0, p, opts["cycles"], cfg.tol, dense=True,
                                  n_dense=opts["samples"])
        except FlowKickError as exc:
            info.update(diverged=True, error=str(exc), cycles_completed=0)
            summary.append(info)
            continue
        m = opts["samples"] + 1
        ts, xs = [], []
        for c in range(len(orbit.post)):
            seg_t = orbit.dense_t[c * m:(c + 1) * m]
            seg_x = orbit.dense_x[c * m:(c + 1) * m]
            for t, x in zip(seg_t, seg_x):
                rows.append([k, c + 1, t] + list(x) + ["flow"])
                ts.append(t)
                xs.append(x)
            rows.append([k, c + 1, seg_t[-1]] + list(orbit.post[c]) + ["kick"])
            ts.append(seg_t[-1])
            xs.append(orbit.post[c])
        info.update(exited=orbit.exited, cycles_completed=len(orbit.post),
                    final_state=orbit.post[-1])
        summary.append(info)
        fig_lines.append((k, x0, np.array(ts), np.array(xs)))
    notes = [f"orbit {s['orbit']} " + ("diverged" if s["diverged"] else "exited the domain")
             + f" after {s['cycles_completed']} cycles" for s in summary
             if s["exited"] or s["diverged"]]
    out.csv("simulate", ["orbit", "cycle", "t"] + _xcols(sys_) + ["phase"], rows, notes)
    out.json("simulate", {"tau": p.tau, "lambda": p.lam, "kappa": p.kappa, "orbits": summary})
    if fig_lines:
        xlim = limits(*[t for _, _, t, _ in fig_lines])
        ylim = limits(*[x for _, _, _, x in fig_lines])
        fig = Figure(xlim, ylim, "t", ", ".join(sys_.state_names),
                     f"{sys_.name}: tau={p.tau:g}, lambda={p.lam:g}")
        for k, x0, t, x in fig_lines:
            for i in range(sys_.n):
                fig.line(t, x[:, i], PALETTE[(k * sys_.n + i) % len(PALETTE)],
                         dashed=i > 0, label=f"x0={','.join(f'{v:g}' for v in x0)} "
                                             f"{sys_.state_names[i]}")
        out.svg("simulate", fig)
    return EXIT_OK


def _record_row(rec):
    return ([rec.tau, rec.lam] + list(rec.x) + [abs(z) for z in rec.eigenvalues]
            + [rec.stability, rec.residual_norm])


def cmd_equilibria(cfg, out):
    sys_ = _load(cfg)
    p = _params(cfg, tau_required=False)
    opts = cfg.options
    box = _pair(opts["box"], "--box")
    seeds = _starts(cfg, sys_, opts["starts"], box)
    seeds += [_state(t, sys_.n) for t in opts["x0"] or []]
    recs, failures = find_fixed_points(sys_, p, seeds, opts["dedupe"], tol=cfg.tol)
    cols = ["tau", "lambda"] + _xcols(sys_) + [f"abs_mu_{i + 1}" for i in range(sys_.n)] + [
        "stability", "residual_norm"]
    out.csv("equilibria", cols, [_record_row(r) for r in recs],
            [f"{len(recs)} fixed points from {len(seeds)} starts ({failures} starts failed)"])
    out.json("equilibria", {"tau": p.tau, "lambda": p.lam, "n_starts": len(seeds),
                            "fixed_points": [r.to_dict() for r in recs]})
    return EXIT_OK


def _window(cfg):
    if cfg.window is None:
        raise UsageError("--window a:b is required")
    a, b = cfg.window
    if not a < b:
        raise UsageError(f"empty window {a:g}:{b:g}")
    return a, b


def cmd_branch(cfg, out):
    sys_ = _load(cfg)
    opts = cfg.options
    free = opts["free"]
    p = _params(cfg, tau_required=free == "lambda", tau_default=0.0)
    window = _window(cfg)
    if not opts["x0"]:
        raise UsageError("--x0 (seed guess) is required for branch")
    x0 = _state(opts["x0"][0], sys_.n)
    seed = newton_fixed_point(sys_, p, x0, integ_tol=cfg.tol)
    step = StepControl(max_points=opts["max_points"])
    br = continue_branch(sys_, seed, free, window, step, direction=opts["direction"],
                         tol=cfg.tol)
    key = "tau" if free == "tau" else "lam"
    rows = []
    ev_at = {}
    for ev in br.events:
        ev_at.setdefault(ev.meta["bracket"][0], []).append(ev)
    for k, rec in enumerate(br.points):
        rows.append([br.arclength[k], getattr(rec, key)] + list(rec.x)
                    + [abs(z) for z in rec.eigenvalues] + [rec.stability, ""])
        for ev in ev_at.get(k, []):
            s = br.arclength[k] + float(np.linalg.norm(np.append(ev.x, getattr(ev, key))
                                                      - np.append(rec.x, getattr(rec, key))))
            rows.append([s, getattr(ev, key)] + list(ev.x) + [""] * sys_.n
                        + ["", ev.btype])
    cols = ["arclength", free] + _xcols(sys_) + [f"abs_mu_{i + 1}" for i in range(sys_.n)] + [
        "stability", "event"]
    out.csv("branch", cols, rows, [f"termination: {br.termination}"])
    out.json("branch", {"free_param": free, "fixed_other": br.fixed_other,
                        "termination": br.termination,
                        "points": [r.to_dict() for r in br.points],
                        "events": [e.to_dict() for e in br.events]})
    comp = opts["component"]
    if not 0 <= comp < sys_.n:
        raise UsageError(f"--component must be in 0..{sys_.n - 1}")
    ps = br.params()
    xs = br.states()[:, comp]
    fig = Figure(limits(ps), limits(xs), "tau" if free == "tau" else "lambda",
                 sys_.state_names[comp], f"{sys_.name}: fixed-point branch")
    stable = np.array([r.stability == "stable" for r in br.points])
    start = 0
    for k in range(1, len(ps) + 1):
        if k == len(ps) or stable[k] != stable[start]:
            end = min(k + 1, len(ps))
            fig.line(ps[start:end], xs[start:end], PALETTE[0], dashed=not stable[start])
            start = k
    for ev in br.events:
        fig.marker(getattr(ev, key), ev.x[comp], ev.btype, PALETTE[1])
    out.svg("branch", fig)
    return EXIT_OK


def _find_event(sys_, cfg, kinds):
    opts = cfg.options
    p = _params(cfg, tau_required=False, tau_default=0.0)
    window = _window(cfg)
    if not opts["x0"]:
        raise UsageError("--x0 (seed guess on a branch crossing the bifurcation) is required")
    seed = newton_fixed_point(sys_, p, _state(opts["x0"][0], sys_.n), integ_tol=cfg.tol)
    for direction in (1, -1):
        br = continue_branch(sys_, seed, "lambda", window, direction=direction, tol=cfg.tol)
        for ev in br.events:
            if ev.btype in kinds:
                return ev
    raise FlowKickError(f"no {'/'.join(kinds)} point found on the lambda branch in the window")


def cmd_bifcurve(cfg, out):
    sys_ = _load(cfg)
    opts = cfg.options
    kinds = [k.strip().lower() for k in opts["kind"].split(",") if k.strip()]
    bad = set(kinds) - {"sn", "ns", "tc"}
    if bad or not kinds:
        raise UsageError("--kind takes a comma list of sn, ns, tc")
    tau_win = _pair(opts["tau_window"], "--tau-window")
    if not 0 <= tau_win[0] < tau_win[1]:
        raise UsageError("--tau-window needs 0 <= a < b")
    lam_win = _window(cfg)
    curves = []
    for kind in kinds:
        if kind == "sn":
            ev = _find_event(sys_, cfg, {"SN"})
            pts = list(continue_sn_curve(sys_, ev, (tau_win, lam_win), tol=cfg.tol))
        elif kind == "ns":
            ev = _find_event(sys_, cfg, {"NS", "Hopf"})
            pts = list(continue_ns_curve(sys_, ev, (tau_win, lam_win), tol=cfg.tol))
        else:
            if opts["x_inv"]:
                x_inv = _state(opts["x_inv"], sys_.n)
                dirs = next((d for pt, d in sys_.invariant_sets if np.allclose(pt, x_inv)), None)
                if dirs is None:
                    raise UsageError("--x-inv is not a declared invariant point of the system")
            elif sys_.invariant_sets:
                x_inv, dirs = sys_.invariant_sets[0]
            else:
                raise UsageError("the system declares no invariant point for TC curves")
            taus = np.linspace(tau_win[0], tau_win[1], opts["points"])
            pts = tc_curve_at_invariant(sys_, x_inv, dirs, taus, lam_win, tol=cfg.tol)
        curves.append((kind, pts))
    rows = [[kind, pt.tau, pt.lam] + list(pt.x) + [pt.btype] for kind, pts in curves for pt in pts]
    out.csv("bifcurve", ["curve", "tau", "lambda"] + _xcols(sys_) + ["type"], rows)
    out.json("bifcurve", {"curves": [{"kind": kind, "points": [pt.to_dict() for pt in pts]}
                                     for kind, pts in curves]})
    marks = [_pair(m, "--mark") for m in opts["mark"] or []]
    all_t = [np.array([pt.tau for pt in pts]) for _, pts in curves] + [np.array([m[0] for m in marks])]
    all_l = [np.array([pt.lam for pt in pts]) for _, pts in curves] + [np.array([m[1] for m in marks])]
    fig = Figure(limits(*all_t), limits(*all_l), "tau", "lambda",
                 f"{sys_.name}: bifurcation curves")
    for k, (kind, pts) in enumerate(curves):
        fig.line([pt.tau for pt in pts], [pt.lam for pt in pts], PALETTE[k % len(PALETTE)],
                 dashed=kind == "tc", label=kind.upper())
    for t, lam in marks:
        fig.marker(t, lam, f"({t:g}, {lam:g})")
    out.svg("bifcurve", fig)
    return EXIT_OK


def cmd_grid(cfg, out):
    sys_ = _load(cfg)
    opts = cfg.options
    taus = _axis(opts["tau_axis"], "--tau-axis")
    if opts["kappa_axis"]:
        mode, second = "kappa", _axis(opts["kappa_axis"], "--kappa-axis")
    elif opts["lambda_axis"]:
        mode, second = "lambda", _axis(opts["lambda_axis"], "--lambda-axis")
    else:
        raise UsageError("one of --lambda-axis or --kappa-axis is required")
    if np.any(taus <= 0):
        raise UsageError("grid tau values must be positive")
    box = _pair(opts["box"], "--box")
    seeds = _starts(cfg, sys_, opts["starts"], box)
    grid = stability_grid(sys_, taus, second, mode, seeds, opts["dedupe"], threads=cfg.threads,
                          tol=cfg.tol)
    tags = ("stable", "unstable", "saddle", "nonhyperbolic")
    rows = []
    for row in grid.cells:
        for c in row:
            rows.append([c.tau, c.second, c.lam, c.count]
                        + [c.stabilities.count(t) for t in tags] + [";".join(c.stabilities)])
    cols = ["tau", mode, "lambda", "count"] + [f"n_{t}" for t in tags] + ["stabilities"]
    out.csv("grid", cols, rows, [grid.meta["warning"]])
    out.json("grid", {"mode": mode, "tau_axis": taus, f"{mode}_axis": second,
                      "meta": grid.meta, "cells": [c.to_dict() for r in grid.cells for c in r]})
    fig = Figure(limits(taus), limits(second), "tau", mode,
                 f"{sys_.name}: fixed points per cell")
    dt = (taus[-1] - taus[0]) / max(len(taus) - 1, 1) if len(taus) > 1 else 1.0
    ds = (second[-1] - second[0]) / max(len(second) - 1, 1) if len(second) > 1 else 1.0
    for row in grid.cells:
        for c in row:
            if c.count == 0:
                fill = "#eeeeee"
            elif "stable" in c.stabilities:
                fill = ["#c6dbef", "#6baed6", "#2171b5"][min(c.count, 3) - 1]
            else:
                fill = "#fcbba1"
            fig.rect(c.tau - dt / 2, c.second - ds / 2, c.tau + dt / 2, c.second + ds / 2, fill)
    out.svg("grid", fig)
    return EXIT_OK


def cmd_models(cfg, out, stream=None):
    stream = stream or sys.stdout
    name = cfg.options.get("name")
    if cfg.options.get("action") == "show":
        if not name:
            raise UsageError("models show needs a model name")
        try:
            stream.write(get_model(name).describe() + "\n")
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    else:
        for key in CATALOG:
            entry = get_model(key)
            tag = "" if entry.canonical else "  (extra variant)"
            stream.write(f"{key:24s} n={entry.system.n}{tag}\n")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "branch": cmd_branch,
    "bifcurve": cmd_bifcurve,
    "grid": cmd_grid,
    "models": cmd_models,
}


# ---------------------------------------------------------------------------
# parser


def _common(parser):
    src = parser.add_mutually_exclusive_group()
    src.add_argument("--model", help="built-in model name (see 'flowkick models')")
    src.add_argument("--system", dest="system_file", help="system file in the flowkick format")
    parser.add_argument("--tau", type=float, help="flow time between kicks")
    rate = parser.add_mutually_exclusive_group()
    rate.add_argument("--lambda", dest="lam", type=float, help="disturbance rate")
    rate.add_argument("--kappa", type=float, help="kick size; lambda = kappa / tau")
    parser.add_argument("--window", help="parameter window a:b (use --window=-1:0 for negatives)")
    parser.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--format", default="csv,json", help="comma list of csv, json, svg")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--seed", type=int, default=0, help="seed for multi-start sampling")


def build_parser():
    parser = argparse.ArgumentParser(prog="flowkick",
                                     description="Flow-kick systems: fixed points, branches, "
                                                 "bifurcation curves and stability diagrams.")
    parser.add_argument("--version", action="version", version=f"flowkick {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="iterate flow-kick orbits")
    _common(p)
    p.add_argument("--x0", action="append", help="initial state, comma separated; repeatable")
    p.add_argument("--cycles", type=int, default=20)
    p.add_argument("--samples", type=int, default=32, help="samples per flow phase")

    p = sub.add_parser("equilibria", help="fixed points at one (tau, lambda)")
    _common(p)
    p.add_argument("--starts", type=int, default=20, help="random multi-starts")
    p.add_argument("--box", default="0:5", help="sampling box lo:hi for multi-starts")
    p.add_argument("--x0", action="append", help="extra start, comma separated; repeatable")
    p.add_argument("--dedupe", type=float, default=1e-6)

    p = sub.add_parser("branch", help="continue a fixed-point branch")
    _common(p)
    p.add_argument("--free", choices=("tau", "lambda"), required=True)
    p.add_argument("--x0", action="append", help="seed guess, comma separated")
    p.add_argument("--direction", type=int, choices=(-1, 1), default=1)
    p.add_argument("--max-points", type=int, default=2000)
    p.add_argument("--component", type=int, default=0, help="state component to plot")

    p = sub.add_parser("bifcurve", help="bifurcation curves in (tau, lambda)")
    _common(p)
    p.add_argument("--kind", default="sn", help="comma list of sn, ns, tc")
    p.add_argument("--tau-window", default="0:3")
    p.add_argument("--x0", action="append", help="seed guess on a lambda branch")
    p.add_argument("--x-inv", help="invariant point for tc curves")
    p.add_argument("--points", type=int, default=41, help="tau samples for tc curves")
    p.add_argument("--mark", action="append", help="marked point tau:lambda; repeatable")

    p = sub.add_parser("grid", help="stability diagram over a parameter grid")
    _common(p)
    p.add_argument("--tau-axis", required=True, help="a:b:n")
    axis = p.add_mutually_exclusive_group()
    axis.add_argument("--lambda-axis", help="a:b:n")
    axis.add_argument("--kappa-axis", help="a:b:n")
    p.add_argument("--starts", type=int, default=20)
    p.add_argument("--box", default="0:5")
    p.add_argument("--dedupe", type=float, default=1e-6)

    p = sub.add_parser("models", help="list or show built-in models")
    p.add_argument("action", nargs="?", choices=("list", "show"), default="list")
    p.add_argument("name", nargs="?")
    return parser


_COMMON = {"command", "model", "system_file", "tau", "lam", "kappa", "window", "tol", "out",
           "format", "threads", "seed"}


def config_from_args(ns):
    d = vars(ns)
    if ns.command == "models":
        return RunConfig(command="models", formats=[],
                         options={"action": ns.action, "name": ns.name})
    formats = [f.strip() for f in ns.format.split(",") if f.strip()]
    bad = set(formats) - set(FORMATS)
    if bad or not formats:
        raise UsageError(f"--format takes a comma list of {', '.join(FORMATS)}")
    if ns.threads < 1:
        raise UsageError("--threads must be at least 1")
    if ns.tol <= 0:
        raise UsageError("--tol must be positive")
    window = list(_pair(ns.window)) if ns.window else None
    options = {k: v for k, v in d.items() if k not in _COMMON}
    return RunConfig(command=ns.command, model=ns.model, system_file=ns.system_file, tau=ns.tau,
                     lam=ns.lam, kappa=ns.kappa, window=window, tol=ns.tol, out=ns.out,
                     formats=formats, threads=ns.threads, seed=ns.seed, options=options)


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        writer = Writer(cfg)
        code = COMMANDS[cfg.command](cfg, writer)
    except UsageError as exc:
        print(f"flowkick {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FlowKickError, np.linalg.LinAlgError) as exc:
        print(f"flowkick {ns.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in writer.written:
        print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
