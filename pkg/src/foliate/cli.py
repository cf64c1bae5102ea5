"""Command-line experiment runner.

Subcommands::

    foliate run      --system eq1 --method lie-euler --dt 0.1 --steps 4 --ic 2,0
    foliate compare  --figure2
    foliate order    --system eq1 --method rkmk4 --dt-list 0.1,0.05,0.025,0.0125 --ic 1,0.5
    foliate figure1  --grid 9
    foliate list

Exit codes: 0 success, 2 configuration error, 3 numerical divergence or
solver failure, 4 unmeasurable quantity.

Settings are resolved as defaults < ``--config`` JSON file < command-line
flags. ``FOLIATE_SEED`` supplies the default seed.
"""
import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from foliate import diagnostics, integrators, systems
from foliate.errors import CatalogueError, DomainError, FoliateError, PrecisionFloorError, StepError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_UNMEASURABLE = 4


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    system: str = "eq1"
    system_params: dict = field(default_factory=dict)
    method: str = "lie-euler"
    tableau: str = None
    dt: float = 0.1
    steps: int = 4
    ic: str = "default"
    out_format: str = "csv"
    out_path: str = None
    seed: int = 0
    methods: list = None
    dt_list: list = None
    t_final: float = 1.0
    reference: str = "self"

    def validate(self):
        if self.system not in systems.CATALOGUE:
            raise ConfigError(f"unknown system {self.system!r}; valid: {', '.join(systems.CATALOGUE)}")
        for m in self.methods or [self.method]:
            if m not in integrators.METHODS:
                raise ConfigError(f"unknown method {m!r}; valid: {', '.join(integrators.METHODS)}")
        if self.tableau is not None and self.tableau not in integrators.TABLEAUS:
            raise ConfigError(f"unknown tableau {self.tableau!r}; valid: {', '.join(integrators.TABLEAUS)}")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ConfigError("dt must be > 0")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.out_format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")


# -- parsing helpers -------------------------------------------------------


def _number(text):
    try:
        value = float(text)
    except ValueError:
        return text
    return int(value) if value.is_integer() and "." not in text and "e" not in text.lower() else value


def parse_params(items):
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        params[key.strip()] = _number(value.strip())
    return params


def parse_float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def initial_conditions(text, sys, system_name, params, seed):
    """Resolve an ``--ic`` value to a list of states.

    Accepted forms: ``default``; a comma-separated literal (flattened
    row-major for matrix states); ``circle:R:N``; ``leaf-bundle:SEED:N``
    (``N`` points on the leaf of the default initial condition, ``SEED``
    optional).
    """
    shape = tuple(sys.state_shape)
    text = str(text).strip()
    if text == "default":
        return [systems.default_ic(system_name, params)]
    if text.startswith("circle:"):
        parts = text.split(":")
        if len(parts) != 3 or shape != (2,):
            raise ConfigError("circle:R:N needs a planar system and both R and N")
        try:
            return diagnostics.circle_ics(float(parts[1]), int(parts[2]))
        except ValueError:
            raise ConfigError(f"bad circle value {text!r}") from None
    if text.startswith("leaf-bundle:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("leaf-bundle:SEED:N expected")
        try:
            bundle_seed = int(parts[1]) if parts[1] else seed
            count = int(parts[2])
        except ValueError:
            raise ConfigError(f"bad leaf-bundle value {text!r}") from None
        base = systems.default_ic(system_name, params)
        try:
            return diagnostics.co_leaf_bundle(sys, base, count, bundle_seed)
        except DomainError as err:
            raise ConfigError(str(err)) from None
    values = parse_float_list(text)
    if len(values) != int(np.prod(shape)):
        raise ConfigError(f"initial condition has {len(values)} entries; system state has shape {shape}")
    return [np.array(values).reshape(shape)]


# -- output ---------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    return format(float(v), ".17g")


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return None if np.isnan(v) else float(v)
    return v


def write_table(columns, rows, meta, fmt, path):
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
    else:
        doc = {"meta": dict(meta, columns=list(columns)), "data": [[_json_value(v) for v in row] for row in rows]}
        text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def trajectory_columns(state_size, leaf_size, with_ic):
    cols = (["ic"] if with_ic else []) + ["step", "t"]
    cols += [f"x{i}" for i in range(state_size)] + [f"I{i}" for i in range(leaf_size)]
    return cols


def trajectory_rows(traj, ic_index=None):
    rows = []
    for n, (t, x, I) in enumerate(zip(traj.times, traj.states, traj.leaf_values)):
        row = ([ic_index] if ic_index is not None else []) + [n, t]
        rows.append(row + list(np.ravel(x)) + list(np.ravel(I)))
    return rows


# -- config resolution ----------------------------------------------------

_FLAG_TO_FIELD = {
    "system": "system",
    "method": "method",
    "tableau": "tableau",
    "dt": "dt",
    "steps": "steps",
    "ic": "ic",
    "format": "out_format",
    "out": "out_path",
    "seed": "seed",
    "t_final": "t_final",
    "reference": "reference",
}


def _load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def resolve_config(args):
    cfg = RunConfig()
    env_seed = os.environ.get("FOLIATE_SEED")
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"FOLIATE_SEED must be an integer, got {env_seed!r}") from None
    runs = None
    if getattr(args, "config", None):
        data = _load_config_file(args.config)
        runs = data.pop("runs", None)
        params = data.pop("params", None) or data.pop("system_params", None)
        if params is not None:
            cfg.system_params = dict(params)
        if "dt_list" in data:
            cfg.dt_list = [float(v) for v in data.pop("dt_list")]
        for key, value in data.items():
            name = _FLAG_TO_FIELD.get(key, key)
            if not hasattr(cfg, name):
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, name, value)
    for flag, name in _FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None and not (flag == "method" and isinstance(value, list)):
            setattr(cfg, name, value)
    if getattr(args, "param", None):
        cfg.system_params.update(parse_params(args.param))
    if getattr(args, "dt_list", None):
        cfg.dt_list = parse_float_list(args.dt_list)
    try:
        cfg.dt = float(cfg.dt)
        cfg.steps = int(cfg.steps)
        cfg.seed = int(cfg.seed)
        cfg.t_final = float(cfg.t_final)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad numeric setting: {err}") from None
    return cfg, runs


def _build(cfg):
    try:
        sys_ = systems.builtin_system(cfg.system, cfg.system_params)
    except (CatalogueError, DomainError) as err:
        raise ConfigError(str(err)) from None
    return sys_


# -- commands -------------------------------------------------------------


def cmd_run(cfg):
    cfg.validate()
    sys_ = _build(cfg)
    stepper = integrators.make_stepper(cfg.method, cfg.tableau)
    ics = initial_conditions(cfg.ic, sys_, cfg.system, cfg.system_params, cfg.seed)
    trajs = [diagnostics.integrate(sys_, stepper, x0, cfg.dt, cfg.steps) for x0 in ics]
    multi = len(trajs) > 1
    cols = trajectory_columns(trajs[0].states[0].size, trajs[0].leaf_values.shape[1], multi)
    rows = []
    for i, tr in enumerate(trajs):
        rows += trajectory_rows(tr, i if multi else None)
    write_table(cols, rows, {"command": "run", "config": asdict(cfg)}, cfg.out_format, cfg.out_path)
    return EXIT_OK


FIGURE2_PRESET = {"system": "eq1", "methods": ["lie-euler", "euler"], "dt": 0.1, "steps": 4, "ic": "circle:2:20"}

_SHARED = ("system", "system_params", "dt", "steps", "ic", "seed")


def _compare_configs(cfg, runs):
    """Expand a base config into the two run configs of a comparison."""
    if runs is not None:
        if len(runs) != 2:
            raise ConfigError("compare needs exactly two entries under 'runs'")
        out = []
        for entry in runs:
            c = RunConfig(**{k: v for k, v in asdict(cfg).items()})
            c.system_params = dict(cfg.system_params)
            for key, value in entry.items():
                name = _FLAG_TO_FIELD.get(key, key)
                if name == "params":
                    name = "system_params"
                if not hasattr(c, name):
                    raise ConfigError(f"unknown config key {key!r}")
                setattr(c, name, value)
            out.append(c)
        for key in _SHARED:
            if getattr(out[0], key) != getattr(out[1], key):
                raise ConfigError(f"compared runs must share {key!r}")
        return out
    methods = cfg.methods or []
    if len(methods) != 2:
        raise ConfigError("compare needs exactly two --method values (or --figure2)")
    out = []
    for m in methods:
        c = RunConfig(**{k: v for k, v in asdict(cfg).items()})
        c.method, c.methods = m, None
        out.append(c)
    return out


def cmd_compare(cfg, runs=None):
    pair = _compare_configs(cfg, runs)
    for c in pair:
        c.validate()
    sys_ = _build(pair[0])
    ics = initial_conditions(pair[0].ic, sys_, pair[0].system, pair[0].system_params, pair[0].seed)
    rows = []
    spreads = {}
    leaf_size = None
    for c in pair:
        stepper = integrators.make_stepper(c.method, c.tableau)
        bundle = diagnostics.integrate_bundle(sys_, stepper, ics, c.dt, c.steps)
        spread = diagnostics.leaf_spread(bundle)
        spreads[c.method] = spread
        leaf_size = bundle[0].leaf_values.shape[1]
        for i, tr in enumerate(bundle):
            for row in trajectory_rows(tr, i):
                rows.append([c.method] + row + [spread[row[1]]])
    cols = ["method"] + trajectory_columns(np.size(ics[0]), leaf_size, True) + ["spread"]
    meta = {"command": "compare", "config": [asdict(c) for c in pair]}
    write_table(cols, rows, meta, pair[0].out_format, pair[0].out_path)
    return EXIT_OK


def cmd_order(cfg):
    cfg.validate()
    taus = cfg.dt_list or [0.1, 0.05, 0.025, 0.0125]
    if len(taus) < 3:
        raise ConfigError("order needs at least three step sizes in --dt-list")
    sys_ = _build(cfg)
    stepper = integrators.make_stepper(cfg.method, cfg.tableau)
    x0 = initial_conditions(cfg.ic, sys_, cfg.system, cfg.system_params, cfg.seed)[0]
    try:
        study = diagnostics.convergence_study(sys_, stepper, x0, cfg.t_final, taus, cfg.reference)
    except DomainError as err:
        raise ConfigError(str(err)) from None
    rows = [[t, e, s] for t, e, s in zip(study.taus, study.errors, study.local_slopes)]
    rows.append(["fit", None, study.slope])
    meta = {"command": "order", "config": asdict(cfg), "fitted_slope": study.slope}
    write_table(["dt", "error", "slope"], rows, meta, cfg.out_format, cfg.out_path)
    return EXIT_OK


def cmd_figure1(cfg, grid):
    fields = diagnostics.figure1_fields(grid=grid)
    rows = []
    for name, fs in fields.items():
        for p, v in zip(fs.points, fs.vectors):
            rows.append([name, "arrow", "", p[0], p[1], v[0], v[1]])
        for i, t in enumerate(fs.dot_times):
            for p in fs.dots[i]:
                rows.append([name, "dot", t, p[0], p[1], None, None])
    meta = {"command": "figure1", "grid": grid}
    write_table(["field", "kind", "t", "x", "y", "u", "v"], rows, meta, cfg.out_format, cfg.out_path)
    return EXIT_OK


def cmd_list():
    out = sys.stdout
    out.write("systems:\n")
    for name, entry in systems.CATALOGUE.items():
        params = ", ".join(f"{k}={v}" for k, v in entry.default_params.items())
        out.write(f"  {name:14s} {entry.description}" + (f" [{params}]" if params else "") + "\n")
    out.write("methods:\n  " + ", ".join(integrators.METHODS) + "\n")
    out.write("tableaus:\n  " + ", ".join(integrators.TABLEAUS) + "\n")
    return EXIT_OK


# -- entry point ----------------------------------------------------------


def _common(p, multi_method=False):
    p.add_argument("--config", help="JSON file with settings; flags override it")
    p.add_argument("--system")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="system parameter (repeatable)")
    if multi_method:
        p.add_argument("--method", action="append", help="method name; give twice to compare")
    else:
        p.add_argument("--method")
    p.add_argument("--tableau")
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--ic", help="default | x0,x1,... | circle:R:N | leaf-bundle:SEED:N")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="foliate", description="Foliation-preserving integrator experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("run", help="integrate one system with one method"))
    p = sub.add_parser("compare", help="run two methods on shared initial conditions")
    _common(p, multi_method=True)
    p.add_argument("--figure2", action="store_true", help="eq1, lie-euler vs euler, dt 0.1, 4 steps, circle:2:20")
    p = sub.add_parser("order", help="measure the convergence order")
    _common(p)
    p.add_argument("--dt-list", help="comma-separated decreasing step sizes")
    p.add_argument("--t-final", type=float)
    p.add_argument("--reference", choices=["self", "rk4"])
    p = sub.add_parser("figure1", help="sample the three planar fields")
    p.add_argument("--grid", type=int, default=9)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    sub.add_parser("list", help="list systems, methods and tableaus")
    return parser


def _dispatch(args):
    if args.command == "list":
        return cmd_list()
    cfg, runs = resolve_config(args)
    if args.command == "run":
        return cmd_run(cfg)
    if args.command == "compare":
        if args.figure2:
            for key, value in FIGURE2_PRESET.items():
                setattr(cfg, key, value)
            for flag in ("system", "dt", "steps", "ic"):
                value = getattr(args, flag, None)
                if value is not None:
                    setattr(cfg, _FLAG_TO_FIELD[flag], value)
        if args.method:
            cfg.methods = args.method
        return cmd_compare(cfg, runs)
    if args.command == "order":
        return cmd_order(cfg)
    return cmd_figure1(cfg, args.grid)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        # overflow surfaces as a DivergenceError from the finiteness checks
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return _dispatch(args)
    except (ConfigError, CatalogueError, DomainError) as err:
        print(f"error: {_message(err)}", file=sys.stderr)
        return EXIT_CONFIG
    except PrecisionFloorError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_UNMEASURABLE
    except StepError as err:
        where = f" at step {err.step_index}" if err.step_index is not None else ""
        print(f"error: numerical failure{where}: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except FoliateError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


def _message(err):
    return err.args[0] if isinstance(err, KeyError) and err.args else str(err)


if __name__ == "__main__":
    sys.exit(main())
