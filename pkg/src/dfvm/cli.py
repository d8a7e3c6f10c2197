"""Command-line front end: ``dfvm run``, ``dfvm verify`` and ``dfvm mesh-info``.

Run configuration (JSON)::

    {
      "spec_version": 1,
      "mesh": {"path": "chain.json", "kind": "1d-graph"},     # or "2d-tri"
      "model": {"m": 2.0, "p_exp": 0.0, "q": 1.0, "E_s": 0.0,
                "alpha": 0.0, "epsilon": 1e-10},
      "scheme": "is",
      "time": {"dt": 1e-3, "t_end": 0.1, "theta": 1.0},
      "output": {"dir": "out", "every": 10},
      "initial": {"type": "hump", "center": 0.5, "radius": 0.2},
      "boundary": {"dirichlet": [{"node": 0, "value": 1.0}]},
      "seed": 0
    }

Only ``mesh``, ``model.m``, ``time.dt`` and ``time.t_end`` are required.
``mesh`` may also be a bare path, in which case the kind is read off the
file (``nodes``/``cells`` or ``points``/``triangles``). Relative paths are
resolved against the directory of the configuration file.

Initial conditions:

``{"type": "constant", "value": v}``
    the same value on every node (default ``0``).
``{"type": "file", "path": p}``
    one value per node, as a JSON list or a whitespace separated text file.
``{"type": "step", "interval": [x0, x1], "value": 1, "u_min": 0, "axis": 0}``
    ``value`` where the node coordinate along ``axis`` lies in the interval.
``{"type": "hump", "center": c, "radius": r, "height": 1, "u_min": 0}``
    ``u_min + height (1 - (|x - c| / r)**2)**2`` inside the ball, ``u_min`` outside.

Exit codes: 0 success, 1 usage or configuration error, 2 isotonicity
violations found, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .flux import SchemeKind
from .graph_mesh import MeshError, graph_mesh_from_dict
from .model import DEFAULT_EPSILON, ModelParams
from .solver import SimulationError, TimeConfig, run
from .tri_mesh import tri_mesh_from_dict
from .verify import check_isotonicity, geometry_for_peclet

SPEC_VERSION = 1
MESH_KINDS = ("1d-graph", "2d-tri")
PROFILES = ("constant", "file", "step", "hump")

EXIT_OK, EXIT_USAGE, EXIT_VIOLATIONS, EXIT_SOLVER = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass
class RunConfig:
    mesh_path: str
    mesh_kind: str
    m: float
    dt: float
    t_end: float
    p_exp: float = 0.0
    q: float = 1.0
    E_s: float = 0.0
    alpha: float | tuple = 0.0
    epsilon: float = DEFAULT_EPSILON
    scheme: str = "is"
    theta: float = 1.0
    output_every: int = 1
    output_dir: str = "output"
    initial: dict = field(default_factory=lambda: {"type": "constant", "value": 0.0})
    dirichlet: tuple = ()
    seed: int | None = None

    @property
    def params(self) -> ModelParams:
        alpha = np.array(self.alpha) if isinstance(self.alpha, tuple) else self.alpha
        return ModelParams(self.m, self.p_exp, self.q, self.E_s, alpha, self.epsilon)

    @property
    def time(self) -> TimeConfig:
        return TimeConfig(self.dt, self.t_end, self.theta, self.output_every)

    def to_dict(self) -> dict:
        """Normalized JSON form; ``parse_config`` on it gives back an equal config."""
        alpha = list(self.alpha) if isinstance(self.alpha, tuple) else self.alpha
        return {
            "spec_version": SPEC_VERSION,
            "mesh": {"path": self.mesh_path, "kind": self.mesh_kind},
            "model": {"m": self.m, "p_exp": self.p_exp, "q": self.q, "E_s": self.E_s,
                      "alpha": alpha, "epsilon": self.epsilon},
            "scheme": self.scheme,
            "time": {"dt": self.dt, "t_end": self.t_end, "theta": self.theta},
            "output": {"dir": self.output_dir, "every": self.output_every},
            "initial": dict(self.initial),
            "boundary": {"dirichlet": [{"node": n, "value": v} for n, v in self.dirichlet]},
            "seed": self.seed,
        }


# --- configuration parsing ------------------------------------------------

_MISSING = object()


def _get(obj: dict, key: str, path: str, kind, default=_MISSING):
    full = f"{path}.{key}" if path else key
    if key not in obj:
        if default is _MISSING:
            raise ConfigError(full, "missing required key")
        return default
    return _coerce(obj[key], kind, full)


def _coerce(value, kind, path):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {type(value).__name__}")
        if not math.isfinite(value):
            raise ConfigError(path, "must be finite")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {type(value).__name__}")
        return int(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {type(value).__name__}")
        return value
    if kind is dict:
        if not isinstance(value, dict):
            raise ConfigError(path, f"expected an object, got {type(value).__name__}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        return value
    raise TypeError(kind)


def _resolve(path: str, base: Path) -> str:
    p = Path(path)
    return str(p if p.is_absolute() else (base / p).resolve())


def _sniff_mesh_kind(path: str) -> str:
    data = json.loads(Path(path).read_text())
    if "points" in data and "triangles" in data:
        return "2d-tri"
    if "nodes" in data and "cells" in data:
        return "1d-graph"
    raise ConfigError("mesh", f"cannot tell the mesh kind of {path}")


def parse_config(path) -> RunConfig:
    """Read and validate a JSON run configuration, filling in defaults."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path} is not valid JSON: {exc}") from None
    return config_from_dict(data, path.parent.resolve())


def config_from_dict(data: dict, base: Path | str = ".") -> RunConfig:
    base = Path(base)
    data = _coerce(data, dict, "<root>")
    version = _get(data, "spec_version", "", int, SPEC_VERSION)
    if version != SPEC_VERSION:
        raise ConfigError("spec_version", f"unsupported version {version}; expected {SPEC_VERSION}")

    if "mesh" not in data:
        raise ConfigError("mesh", "missing required key")
    mesh = data["mesh"]
    if isinstance(mesh, str):
        mesh = {"path": mesh}
    mesh = _coerce(mesh, dict, "mesh")
    mesh_path = _resolve(_get(mesh, "path", "mesh", str), base)
    if not Path(mesh_path).is_file():
        raise ConfigError("mesh.path", f"file not found: {mesh_path}")
    kind = _get(mesh, "kind", "mesh", str, None) or _sniff_mesh_kind(mesh_path)
    if kind not in MESH_KINDS:
        raise ConfigError("mesh.kind", f"unknown mesh kind {kind!r}; expected one of {', '.join(MESH_KINDS)}")

    model = _get(data, "model", "", dict)
    alpha = model.get("alpha", 0.0)
    if isinstance(alpha, list):
        alpha = tuple(_coerce(a, float, f"model.alpha[{k}]") for k, a in enumerate(alpha))
    else:
        alpha = _coerce(alpha, float, "model.alpha")

    time = _get(data, "time", "", dict)
    output = _get(data, "output", "", dict, {})
    boundary = _get(data, "boundary", "", dict, {})
    dirichlet = []
    for k, entry in enumerate(_get(boundary, "dirichlet", "boundary", list, [])):
        where = f"boundary.dirichlet[{k}]"
        entry = _coerce(entry, dict, where)
        dirichlet.append((_get(entry, "node", where, int), _get(entry, "value", where, float)))
    nodes = [n for n, _ in dirichlet]
    if len(set(nodes)) != len(nodes):
        raise ConfigError("boundary.dirichlet", "a node appears more than once")

    seed = data.get("seed")
    if seed is not None:
        seed = _coerce(seed, int, "seed")

    cfg = RunConfig(
        mesh_path=mesh_path,
        mesh_kind=kind,
        m=_get(model, "m", "model", float),
        p_exp=_get(model, "p_exp", "model", float, 0.0),
        q=_get(model, "q", "model", float, 1.0),
        E_s=_get(model, "E_s", "model", float, 0.0),
        alpha=alpha,
        epsilon=_get(model, "epsilon", "model", float, DEFAULT_EPSILON),
        scheme=_get(data, "scheme", "", str, "is"),
        dt=_get(time, "dt", "time", float),
        t_end=_get(time, "t_end", "time", float),
        theta=_get(time, "theta", "time", float, 1.0),
        output_every=_get(output, "every", "output", int, 1),
        output_dir=_resolve(_get(output, "dir", "output", str, "output"), base),
        initial=_parse_initial(_get(data, "initial", "", dict, {"type": "constant"}), base),
        dirichlet=tuple(sorted(dirichlet)),
        seed=seed,
    )
    validate_config(cfg)
    return cfg


def _parse_initial(spec: dict, base: Path) -> dict:
    kind = _get(spec, "type", "initial", str, "constant")
    if kind == "constant":
        return {"type": kind, "value": _get(spec, "value", "initial", float, 0.0)}
    if kind == "file":
        p = _resolve(_get(spec, "path", "initial", str), base)
        if not Path(p).is_file():
            raise ConfigError("initial.path", f"file not found: {p}")
        return {"type": kind, "path": p}
    if kind == "step":
        interval = _get(spec, "interval", "initial", list)
        if len(interval) != 2:
            raise ConfigError("initial.interval", "expected [x0, x1]")
        lo, hi = (_coerce(x, float, f"initial.interval[{k}]") for k, x in enumerate(interval))
        if lo > hi:
            raise ConfigError("initial.interval", "x0 must not exceed x1")
        return {"type": kind, "interval": [lo, hi],
                "value": _get(spec, "value", "initial", float, 1.0),
                "u_min": _get(spec, "u_min", "initial", float, 0.0),
                "axis": _get(spec, "axis", "initial", int, 0)}
    if kind == "hump":
        center = spec.get("center", 0.5)
        if isinstance(center, list):
            center = [_coerce(c, float, f"initial.center[{k}]") for k, c in enumerate(center)]
        else:
            center = _coerce(center, float, "initial.center")
        radius = _get(spec, "radius", "initial", float, 0.25)
        if radius <= 0:
            raise ConfigError("initial.radius", "must be positive")
        return {"type": kind, "center": center, "radius": radius,
                "height": _get(spec, "height", "initial", float, 1.0),
                "u_min": _get(spec, "u_min", "initial", float, 0.0)}
    raise ConfigError("initial.type", f"unknown profile {kind!r}; expected one of {', '.join(PROFILES)}")


def validate_config(cfg: RunConfig) -> None:
    """Check the invariants that do not need the mesh."""
    try:
        cfg.scheme = SchemeKind.parse(cfg.scheme).value
    except ValueError as exc:
        raise ConfigError("scheme", str(exc)) from None
    if not 0.5 < cfg.theta <= 1.0:
        raise ConfigError("time.theta", f"theta must satisfy 0.5 < theta <= 1, got {cfg.theta}")
    if cfg.dt <= 0:
        raise ConfigError("time.dt", f"must be positive, got {cfg.dt}")
    if cfg.t_end < 0:
        raise ConfigError("time.t_end", f"must be nonnegative, got {cfg.t_end}")
    if cfg.output_every < 1:
        raise ConfigError("output.every", "must be at least 1")
    try:
        cfg.params
    except ValueError as exc:
        raise ConfigError("model", str(exc)) from None


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Return a copy with the non-``None`` overrides applied and revalidated."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    new = dataclasses.replace(cfg, **changes)
    validate_config(new)
    return new


# --- meshes and initial data ----------------------------------------------

def load_mesh(path, kind: str | None = None):
    data = json.loads(Path(path).read_text())
    if kind is None:
        kind = "2d-tri" if "points" in data else "1d-graph"
    if kind == "1d-graph":
        return graph_mesh_from_dict(data)
    if kind == "2d-tri":
        return tri_mesh_from_dict(data)
    raise ConfigError("mesh.kind", f"unknown mesh kind {kind!r}")


def node_positions(mesh) -> np.ndarray:
    """Node coordinates as an ``(n, dim)`` array."""
    if mesh.dim == 1:
        return np.asarray(mesh.node_coords, dtype=float).reshape(-1, 1)
    return np.asarray(mesh.points, dtype=float)


def hump_profile(x, center, radius, height=1.0, u_min=0.0):
    """``u_min + height (1 - (r / radius)**2)**2`` for ``r < radius``, else ``u_min``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    c = np.broadcast_to(np.asarray(center, dtype=float), (x.shape[1],))
    r2 = np.sum((x - c) ** 2, axis=1) / radius**2
    return u_min + height * np.where(r2 < 1.0, (1.0 - r2) ** 2, 0.0)


def step_profile(x, interval, value=1.0, u_min=0.0):
    """``value`` on the closed interval, ``u_min`` elsewhere."""
    x = np.asarray(x, dtype=float)
    lo, hi = interval
    return np.where((x >= lo) & (x <= hi), value, u_min)


def initial_data(mesh, spec: dict) -> np.ndarray:
    n = mesh.n_nodes
    kind = spec["type"]
    if kind == "constant":
        return np.full(n, spec["value"])
    if kind == "file":
        p = Path(spec["path"])
        if p.suffix == ".json":
            u = np.asarray(json.loads(p.read_text()), dtype=float)
        else:
            u = np.loadtxt(p, dtype=float, ndmin=1)
        if u.shape != (n,):
            raise ConfigError("initial.path", f"expected {n} values, found {u.size}")
        return u
    pos = node_positions(mesh)
    if kind == "step":
        axis = spec["axis"]
        if not 0 <= axis < pos.shape[1]:
            raise ConfigError("initial.axis", f"axis {axis} out of range for a {mesh.dim}-D mesh")
        return step_profile(pos[:, axis], spec["interval"], spec["value"], spec["u_min"])
    if kind == "hump":
        return hump_profile(pos, spec["center"], spec["radius"], spec["height"], spec["u_min"])
    raise ConfigError("initial.type", f"unknown profile {kind!r}")


# --- commands ---------------------------------------------------------------

def _fmt(x) -> str:
    return "%.17g" % x


def cmd_run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        mesh = load_mesh(cfg.mesh_path, cfg.mesh_kind)
        u0 = initial_data(mesh, cfg.initial)
        for node, _ in cfg.dirichlet:
            if not 0 <= node < mesh.n_nodes:
                raise ConfigError("boundary.dirichlet", f"node {node} is not in the mesh")
        params = cfg.params
        if np.ndim(params.alpha) and mesh.dim == 2:
            raise ConfigError("model.alpha", "per-cell angles are only supported on graph meshes")
    except (ConfigError, MeshError, ValueError, OSError) as exc:
        print(f"dfvm run: {exc}", file=stderr)
        return EXIT_USAGE

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    try:
        result = run(mesh, params, u0, cfg.time, cfg.scheme, dict(cfg.dirichlet))
    except SimulationError as exc:
        print(f"dfvm run: solver failure at {exc}", file=stderr)
        return EXIT_SOLVER

    for snap in result.snapshots:
        with open(out / f"snapshot_{snap.step_count:06d}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", "node", "u"])
            t = _fmt(snap.t)
            for i, v in enumerate(snap.u):
                w.writerow([t, i, _fmt(v)])
    with open(out / "audit.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "time", "mass", "min_u", "max_u", "dominance_ok"])
        for row in result.audit:
            w.writerow([row.step, _fmt(row.time), _fmt(row.mass), _fmt(row.min_u), _fmt(row.max_u),
                        int(row.dominance_ok)])
    for note in result.warnings:
        print(f"dfvm run: warning: {note}", file=stderr)
    final = result.audit[-1]
    print(f"{len(result.audit) - 1} steps to t={final.time:g}; mass {result.audit[0].mass:.12g} -> "
          f"{final.mass:.12g}; {len(result.snapshots)} snapshots in {out}", file=stdout)
    return EXIT_OK


def cmd_verify(scheme, m, p_exp=0.0, alpha=0.0, l=1.0, sigma=1, pe=None, lo=0.0, hi=1.0, step=0.01,
               fd_step=1e-6, rel_tol=1e-10, report=None, max_violations=100, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        params = ModelParams(m=m, p_exp=p_exp, alpha=alpha)
        if pe is not None:
            sigma, l, alpha = geometry_for_peclet(pe, params)
        if l <= 0:
            raise ValueError(f"l must be positive, got {l}")
        if sigma not in (-1, 1):
            raise ValueError(f"sigma must be +1 or -1, got {sigma}")
        if not (hi > lo and step > 0 and fd_step > 0):
            raise ValueError("grid needs hi > lo, step > 0 and fd_step > 0")
        rep = check_isotonicity(scheme, params, sigma=sigma, l=l, alpha=alpha, grid=(lo, hi, step),
                                fd_step=fd_step, rel_tol=rel_tol)
    except ValueError as exc:
        print(f"dfvm verify: {exc}", file=stderr)
        return EXIT_USAGE
    text = json.dumps(rep.to_dict(max_violations), indent=2)
    if report is None:
        print(text, file=stdout)
        print(rep.summary(), file=stderr)
    else:
        Path(report).write_text(text + "\n")
        print(rep.summary(), file=stdout)
    return EXIT_OK if rep.isotone else EXIT_VIOLATIONS


def cmd_mesh_info(path, kind=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        mesh = load_mesh(path, kind)
    except (ConfigError, MeshError, ValueError, OSError) as exc:
        print(f"dfvm mesh-info: {exc}", file=stderr)
        return EXIT_USAGE
    print(json.dumps(mesh.summary(), indent=2, default=float), file=stdout)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dfvm", description="Dual finite volume solver for the extended porous medium equation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="integrate a configured problem")
    p.add_argument("config")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--theta", type=float)
    p.add_argument("--scheme")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--output-every", type=int, dest="output_every")

    v = sub.add_parser("verify", help="scan a flux for isotonicity")
    v.add_argument("--scheme", default="is")
    v.add_argument("--m", type=float, required=True)
    v.add_argument("--p-exp", type=float, default=0.0, dest="p_exp")
    v.add_argument("--alpha", type=float, default=0.0)
    v.add_argument("--l", type=float, default=1.0)
    v.add_argument("--sigma", type=int, default=1, choices=(-1, 1))
    v.add_argument("--pe", type=float, help="choose sigma, l and alpha to realize this Peclet number")
    v.add_argument("--lo", type=float, default=0.0)
    v.add_argument("--hi", type=float, default=1.0)
    v.add_argument("--step", type=float, default=0.01)
    v.add_argument("--fd-step", type=float, default=1e-6, dest="fd_step")
    v.add_argument("--rel-tol", type=float, default=1e-10, dest="rel_tol")
    v.add_argument("--report", help="write the JSON report here instead of stdout")

    i = sub.add_parser("mesh-info", help="print mesh statistics")
    i.add_argument("mesh")
    i.add_argument("--kind", choices=MESH_KINDS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            cfg = parse_config(args.config)
            cfg = apply_overrides(cfg, dt=args.dt, t_end=args.t_end, theta=args.theta, scheme=args.scheme,
                                  output_dir=args.output_dir, output_every=args.output_every)
        except ConfigError as exc:
            print(f"dfvm run: {exc}", file=sys.stderr)
            return EXIT_USAGE
        return cmd_run(cfg)
    if args.command == "verify":
        return cmd_verify(args.scheme, args.m, args.p_exp, args.alpha, args.l, args.sigma, args.pe,
                          args.lo, args.hi, args.step, args.fd_step, args.rel_tol, args.report)
    return cmd_mesh_info(args.mesh, args.kind)


if __name__ == "__main__":
    sys.exit(main())
