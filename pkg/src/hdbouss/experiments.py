"""Experiment configuration, preset runs and budget tables from snapshots."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import diagnostics as diag
from .dynamics import RunResult, run, steps_for
from .grid import GridSpec, make_grid
from .initial import IC_PRESETS, build_initial
from .snapshot import PayloadKind, write_field
from .state import PhysParams

log = logging.getLogger(__name__)

SCHEMA = 1
OUTPUT_ENV = "HDBOUSS_OUTPUT_DIR"
PRESETS = (
    "zero", "heat_oracle", "linear_mode_oracle", "inviscid_conservation",
    "theorem1_smalldata", "theorem2_smalldata", "stratification_long",
)

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None,
                 source: str | None = None):
        where = ""
        if key is not None:
            where = f"key {key!r}"
            if line is not None:
                where += f" (line {line})"
            where += ": "
        prefix = f"{source}: " if source else ""
        super().__init__(prefix + where + message)
        self.key, self.line, self.source = key, line, source


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "custom"
    n1: int = 128
    n2: int = 256
    half_width: float = 10.0
    dt: float = 1e-3
    T: float = 1.0
    nu: float = 1.0
    kappa: float = 1.0
    buoyancy_coupling: bool = True
    epsilon: float = 1e-2
    ic_preset: str = "gaussian_pair"
    seed: int = 0
    output_every: int = 100
    snapshot_every: int = 0
    fit_start: float = 1.0
    fit_floor: float = 1e-12
    output_dir: str | None = None
    report_format: str = "json"
    # optional knobs of the initial-condition builders
    ic_m1: int | None = None
    ic_m2: int | None = None
    ic_beta: float | None = None
    ic_sigma: float | None = None

    @property
    def grid_spec(self) -> GridSpec:
        return GridSpec(self.n1, self.n2, self.half_width)

    @property
    def params(self) -> PhysParams:
        return PhysParams(self.nu, self.kappa, self.buoyancy_coupling)

    def ic_kwargs(self) -> dict:
        kw = {"epsilon": self.epsilon, "seed": self.seed}
        for key, name in (("ic_m1", "m1"), ("ic_m2", "m2"), ("ic_beta", "beta"),
                          ("ic_sigma", "sigma")):
            v = getattr(self, key)
            if v is not None:
                kw[name] = v
        return kw

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key: str, value, line: int | None, source: str | None):
    kind = _TYPES[key].replace(" | None", "")
    err = lambda msg: ConfigError(msg, key, line, source)  # noqa: E731
    if value is None:
        if "None" in _TYPES[key]:
            return None
        raise err("a value is required")
    if kind == "bool":
        if not isinstance(value, bool):
            raise err(f"expected true/false, got {value!r}")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise err(f"expected an integer, got {value!r}")
        return int(value)
    if kind == "float":
        if isinstance(value, bool):
            raise err(f"expected a number, got {value!r}")
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise err(f"expected a number, got {value!r}") from None
        if not math.isfinite(v):
            raise err(f"expected a finite number, got {value!r}")
        return v
    if not isinstance(value, str):
        raise err(f"expected a string, got {value!r}")
    return value


def _check(cfg: ExperimentConfig, lines: dict, source: str | None) -> None:
    def fail(key, msg):
        raise ConfigError(msg, key, lines.get(key), source)

    for key in ("n1", "n2"):
        v = getattr(cfg, key)
        if v < 8 or v % 2:
            fail(key, f"must be an even integer >= 8, got {v}")
    for key in ("half_width", "dt"):
        if getattr(cfg, key) <= 0:
            fail(key, "must be positive")
    if cfg.T < 0:
        fail("T", "must be nonnegative")
    for key in ("nu", "kappa", "epsilon"):
        if getattr(cfg, key) < 0:
            fail(key, "must be nonnegative")
    if cfg.output_every < 1:
        fail("output_every", "must be a positive number of steps")
    if cfg.snapshot_every < 0:
        fail("snapshot_every", "must be >= 0 (0 disables snapshots)")
    if cfg.snapshot_every and cfg.snapshot_every % cfg.output_every:
        fail("snapshot_every", "must be a multiple of output_every")
    if cfg.ic_preset not in IC_PRESETS:
        fail("ic_preset", f"unknown initial condition; choose from {', '.join(IC_PRESETS)}")
    if cfg.report_format not in ("json", "csv"):
        fail("report_format", "must be 'json' or 'csv'")
    if cfg.fit_floor <= 0:
        fail("fit_floor", "must be positive")
    try:
        steps_for(cfg.T, cfg.dt)
    except ValueError as exc:
        fail("T", str(exc))


def parse_config(text: str, source: str | None = None, name: str | None = None) -> ExperimentConfig:
    """Parse a flat YAML mapping; errors name the offending key and line."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" at line {mark.line + 1}" if mark is not None else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"malformed config{at}: {problem}", source=source) from None
    if node is None:
        entries = []
    elif not isinstance(node, yaml.MappingNode):
        raise ConfigError("config must be a mapping of flat keys", source=source)
    else:
        entries = node.value

    loader_values = yaml.safe_load(text) or {}
    values, lines = {}, {}
    for knode, vnode in entries:
        key = knode.value
        line = knode.start_mark.line + 1
        if key in lines:
            raise ConfigError("duplicate key", key, line, source)
        if key not in _TYPES:
            raise ConfigError("unknown key", key, line, source)
        if not isinstance(vnode, yaml.ScalarNode):
            raise ConfigError("value must be a scalar", key, line, source)
        lines[key] = line
        raw = loader_values[key]
        if key == "ic_preset" and isinstance(raw, str) and raw.startswith("random(") \
                and raw.endswith(")"):
            # random(seed) shorthand
            try:
                values["seed"] = int(raw[len("random("):-1])
            except ValueError:
                raise ConfigError(f"bad seed in {raw!r}", key, line, source) from None
            raw = "random"
        values[key] = _coerce(key, raw, line, source)
    if name is not None and "name" not in values:
        values["name"] = name
    cfg = ExperimentConfig(**values)
    _check(cfg, lines, source)
    return cfg


def preset_path(name: str):
    return resources.files("hdbouss").joinpath("presets", f"{name}.yaml")


def load_config(ref: str) -> ExperimentConfig:
    """Load a config file path, or a shipped preset by name."""
    p = Path(ref)
    if p.is_file():
        return parse_config(p.read_text(), source=str(p), name=p.stem)
    if ref in PRESETS:
        res = preset_path(ref)
        return parse_config(res.read_text(), source=f"preset {ref}", name=ref)
    raise ConfigError(f"no such config file or preset {ref!r}; presets: {', '.join(PRESETS)}")


# -- running ------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    exit_code: int
    summary: dict
    result: RunResult
    output_dir: Path | None = None
    files: dict = field(default_factory=dict)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def resolve_output_dir(cfg: ExperimentConfig, override: str | os.PathLike | None = None) -> Path:
    """Explicit override, then the environment variable, then the config, then ./runs."""
    if override is not None:
        return Path(override)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env) / cfg.name
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path("runs") / cfg.name


def summarize(cfg: ExperimentConfig, res: RunResult) -> dict:
    recs = res.records
    E, ratio = diag.energy_functional(recs)
    t = res.column("t")
    fit = diag.decay_fit(t, res.column("h1_osc"), t0=cfg.fit_start, floor=cfg.fit_floor)
    r0 = recs[0]
    h1_0 = r0.h1_u + r0.h1_theta
    bound = None
    if fit.available:
        win = (t >= fit.t_start) & (t <= fit.t_end)
        h = res.column("h1_osc")[win]
        bound = bool(np.all(h <= h1_0 * np.exp(-fit.rate * t[win])))
    warnings = sorted({f for r in recs for f in r.flags})
    flags = sorted(res.flags - set(warnings))
    if res.failure is not None:
        flags.append(res.failure["kind"])
    return _jsonable({
        "schema": SCHEMA,
        "name": cfg.name,
        "config": cfg.to_dict(),
        "steps": res.steps_taken,
        "t_final": recs[-1].t,
        "smallness_h2": res.smallness,
        "E0": float(E[0]),
        "E_sup": float(E.max()),
        "E_sup_over_E0": ratio,
        "decay_rate": fit.rate,
        "decay_r2": fit.r2,
        "decay_fit": fit.as_dict(),
        "h1_initial": h1_0,
        "decay_bound_holds": bound,
        "final_osc_fraction": recs[-1].osc_fraction,
        "max_div": float(res.column("div_max").max()),
        "max_bar_u2": float(res.column("bar_u2_max").max()),
        "max_cfl": float(res.column("cfl").max()),
        "max_tail_mass": float(res.column("tail_mass").max()),
        "l2_energy_initial": r0.l2_u**2 + r0.l2_theta**2,
        "l2_energy_final": recs[-1].l2_u**2 + recs[-1].l2_theta**2,
        "l2_dissipation": 2 * (recs[-1].l2_diss_u_cum + recs[-1].l2_diss_theta_cum),
        "failure": res.failure,
        "flags": sorted(set(flags)),
        "warnings": warnings,
    })


def exit_code_for(res: RunResult) -> int:
    if res.failure is not None and res.failure["kind"] in ("blowup", "cfl"):
        return EXIT_BLOWUP
    if res.failure is not None or res.flags & {"divergence", "ubar2", "nonfinite"}:
        return EXIT_INVARIANT
    return EXIT_OK


def write_timeseries(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(diag.CSV_COLUMNS)
        for r in records:
            w.writerow([repr(float(v)) for v in r.row()])


def run_experiment(cfg: ExperimentConfig, output_dir=None, write: bool = True,
                   keep_states: bool = False) -> ExperimentResult:
    """Run one configured experiment and write its artifacts.

    Files: timeseries.csv, summary.json (plus summary.csv for report_format
    csv) and, when snapshot_every > 0, snapshots/ with one .absq file per
    field and time, index.csv and run.json.
    """
    grid = make_grid(cfg.grid_spec)
    state0 = build_initial(cfg.ic_preset, grid, **cfg.ic_kwargs())
    out = resolve_output_dir(cfg, output_dir) if write else None
    files = {}
    on_output = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        if cfg.snapshot_every:
            snap_dir = out / "snapshots"
            snap_dir.mkdir(exist_ok=True)
            index = []

            def on_output(k, state, rec):
                if k % cfg.snapshot_every:
                    return
                w, th = state.fields()
                names = (f"snap_{k:07d}_omega.absq", f"snap_{k:07d}_theta.absq")
                write_field(snap_dir / names[0], w, PayloadKind.VORTICITY)
                write_field(snap_dir / names[1], th, PayloadKind.TEMPERATURE)
                index.append((k, state.t, *names))

    res = run(state0, cfg.params, cfg.dt, cfg.T, output_every=cfg.output_every,
              keep_states=keep_states, on_output=on_output)
    summary = summarize(cfg, res)
    code = exit_code_for(res)
    summary["exit_code"] = code

    if out is not None:
        files["timeseries"] = out / "timeseries.csv"
        write_timeseries(files["timeseries"], res.records)
        files["summary"] = out / "summary.json"
        files["summary"].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        if cfg.report_format == "csv":
            files["summary_csv"] = out / "summary.csv"
            with open(files["summary_csv"], "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["key", "value"])
                for k, v in sorted(summary.items()):
                    if not isinstance(v, (dict, list)):
                        w.writerow([k, v])
        if cfg.snapshot_every:
            files["snapshots"] = snap_dir
            with open(snap_dir / "index.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["step", "t", "omega_file", "theta_file"])
                for k, t, a, b in index:
                    w.writerow([k, repr(float(t)), a, b])
            meta = {"schema": SCHEMA, "nu": cfg.nu, "kappa": cfg.kappa,
                    "buoyancy_coupling": cfg.buoyancy_coupling, "dt": cfg.dt,
                    "n1": cfg.n1, "n2": cfg.n2, "half_width": cfg.half_width}
            (snap_dir / "run.json").write_text(json.dumps(meta, indent=2) + "\n")
    if code:
        log.error("%s finished with exit status %d: flags %s", cfg.name, code, summary["flags"])
    return ExperimentResult(code, summary, res, out, files)


# -- budgets from snapshot directories ------------------------------------------------


def load_snapshots(snap_dir) -> tuple[list, PhysParams]:
    """States stored by :func:`run_experiment`, in step order, and their parameters."""
    from .grid import dealias, forward
    from .snapshot import read_field
    from .state import State

    snap_dir = Path(snap_dir)
    index = snap_dir / "index.csv"
    meta_path = snap_dir / "run.json"
    if not index.is_file() or not meta_path.is_file():
        raise ConfigError(f"{snap_dir} is not a snapshot directory (index.csv/run.json missing)")
    meta = json.loads(meta_path.read_text())
    params = PhysParams(meta["nu"], meta["kappa"], meta.get("buoyancy_coupling", True))
    states, grid = [], None
    with open(index, newline="") as fh:
        for row in csv.DictReader(fh):
            w, _ = read_field(snap_dir / row["omega_file"], grid)
            th, _ = read_field(snap_dir / row["theta_file"], w.grid)
            grid = w.grid
            states.append(State(dealias(forward(w)), dealias(forward(th)), float(row["t"])))
    if not states:
        raise ConfigError(f"{snap_dir}/index.csv lists no snapshots")
    return states, params


def budget_table(states, params: PhysParams) -> tuple[list, list]:
    """One row per state with every M/N/P term, the splits and closure residuals."""
    rows = []
    for s in states:
        b1 = diag.h1_budget(s, params)
        b2 = diag.h2_budget(s, params)
        row = {"t": s.t, "h1_energy": b1["energy"]}
        for k in ("M", "M1", "M2", "M3", "M4", "M_spectral"):
            row[k] = b1[k]
        row.update({f"M3{i}": v for i, v in enumerate(b1["M3_split"], 1)})
        row.update({"h1_diss_omega": b1["diss_omega"], "h1_diss_theta": b1["diss_theta"],
                    "h1_lhs_rate": b1["lhs_rate"], "h2_energy": b2["energy"]})
        for k in ("N", "N1", "N2", "N3", "N4", "N_spectral",
                  "P", "P1", "P2", "P3", "P4", "P5", "P6", "P_spectral"):
            row[k] = b2[k]
        for term in ("N3", "P1", "P2", "P5", "P6"):
            row.update({f"{term}{i}": v for i, v in enumerate(b2[f"{term}_split"], 1)})
        row.update({"h2_diss_omega": b2["diss_omega"], "h2_diss_theta": b2["diss_theta"],
                    "h2_lhs_rate": b2["lhs_rate"], "spectral_tail": b2["spectral_tail"]})
        rows.append(row)

    t = np.array([r["t"] for r in rows])
    for level in ("h1", "h2"):
        e = np.array([r[f"{level}_energy"] for r in rows])
        for i, r in enumerate(rows):
            res = float("nan")
            if 0 < i < len(rows) - 1:
                h0, h1 = t[i] - t[i - 1], t[i + 1] - t[i]
                if abs(h0 - h1) <= 1e-9 * max(h0, h1):
                    res = (e[i + 1] - e[i - 1]) / (h0 + h1) - r[f"{level}_lhs_rate"]
            r[f"{level}_closure_residual"] = res
    columns = list(rows[0].keys())
    return columns, rows


def write_budget_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(r[c])) for c in columns])
