"""Scenario orchestration and report writing.

A run computes the scenario's no-DG base case, normalises the objective
against it, runs each requested optimizer once per seed and keeps the
best result per optimizer. Every output file is a pure function of the
config, so re-running with the same seeds reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .dg import DgSettings, WindCurve
from .lsa import LsaParams, run_lsa
from .network import (
    HourlySeries,
    NetworkError,
    SeriesKind,
    bundled_path,
    load_network,
    load_profile,
)
from .objective import (
    KINDS,
    DgBounds,
    ObjectiveWeights,
    Penalties,
    PlacementObjective,
    Scenario,
    calibrate_weights,
    evaluate,
)
from .powerflow import HorizonSolution, solve_horizon
from .pso import PsoParams, run_pso
from .trace import ConvergenceTrace, write_trace_csv

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "load_config",
    "build_scenario",
    "run_scenario",
    "report_base_case",
    "compare",
    "OPTIMIZERS",
]

log = logging.getLogger(__name__)

OPTIMIZERS = ("lsa", "pso")
SCENARIOS = ("constant_load", "load_profile")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class ScenarioConfig:
    scenario: str = "load_profile"
    network: Path | None = None
    load_profile: Path | None = None
    irradiance: Path | None = None
    wind: Path | None = None
    optimizer: str = "both"
    lsa: dict[str, Any] = field(default_factory=dict)
    pso: dict[str, Any] = field(default_factory=dict)
    weights: dict[str, Any] = field(default_factory=dict)
    penalties: dict[str, Any] = field(default_factory=dict)
    dg_bounds: dict[str, Any] = field(default_factory=dict)
    dg_settings: dict[str, Any] = field(default_factory=dict)
    voltage_limits: dict[str, Any] = field(default_factory=dict)
    seeds: list[int] = field(default_factory=lambda: [0])
    output_dir: Path = Path("out")
    workers: int = 1

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.optimizer not in OPTIMIZERS + ("both",):
            raise ConfigError(f"optimizer must be lsa, pso or both, got {self.optimizer!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        for name in ("network", "load_profile", "irradiance", "wind"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{name} file not found: {p}")
        blocks = (
            (LsaParams, self.lsa),
            (PsoParams, self.pso),
            (Penalties, self.penalties),
            (DgBounds, self.dg_bounds),
        )
        for cls, block in blocks:
            try:
                cls(**block)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid {cls.__name__} settings: {exc}") from exc

    @property
    def optimizers(self) -> tuple[str, ...]:
        return OPTIMIZERS if self.optimizer == "both" else (self.optimizer,)

    @property
    def constant_load(self) -> bool:
        return self.scenario == "constant_load"


def load_config(path: str | Path, **overrides: Any) -> ScenarioConfig:
    """Read a JSON config; relative paths resolve against the config's folder."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    doc.update({k: v for k, v in overrides.items() if v is not None})
    root = path.parent
    profiles = doc.pop("profiles", {}) or {}
    for key in ("load", "irradiance", "wind"):
        if key in profiles:
            doc.setdefault("load_profile" if key == "load" else key, profiles[key])
    for key in ("network", "load_profile", "irradiance", "wind", "output_dir"):
        if doc.get(key) is not None:
            p = Path(doc[key])
            doc[key] = p if p.is_absolute() else root / p
    known = set(ScenarioConfig.__dataclass_fields__)
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    return ScenarioConfig(**doc)


def _series(path: Path | None, default: str, kind: SeriesKind) -> HourlySeries:
    return load_profile(path if path is not None else bundled_path(default), kind)


def _load_inputs(config: ScenarioConfig):
    """Network and hourly series named by the config, with bundled defaults."""
    try:
        network = load_network(
            config.network or bundled_path("ieee33.csv"), **config.voltage_limits
        )
        if config.constant_load:
            load = HourlySeries.flat(1.0, SeriesKind.LOAD)
        else:
            load = _series(config.load_profile, "load_profile.csv", SeriesKind.LOAD)
        irr = _series(config.irradiance, "irradiance.csv", SeriesKind.IRRADIANCE)
        wind = _series(config.wind, "wind_speed.csv", SeriesKind.WIND)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return network, load, irr, wind


def build_scenario(config: ScenarioConfig) -> tuple[Scenario, HorizonSolution]:
    """Scenario context with calibrated weights, plus its no-DG base case."""
    network, load, irr, wind = _load_inputs(config)
    try:
        curve = config.dg_settings.get("wind_curve", {})
        settings = DgSettings(
            wind_curve=WindCurve(
                cut_in=curve.get("cut_in", 2.5),
                rated_speed=curve.get("rated", curve.get("rated_speed", 12.0)),
                cut_out=curve.get("cut_out", 25.0),
            ),
            reference_irradiance=config.dg_settings.get("reference_irradiance", 1000.0),
        )
        w = dict(config.weights)
        auto = w.pop("auto_calibrate", True)
        fixed = None if auto else ObjectiveWeights(**w)
        penalties = Penalties(**config.penalties)
        bounds = DgBounds(**config.dg_bounds)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    weights = fixed or calibrate_weights(network, load, w1=w.get("w1", 0.5), w2=w.get("w2", 0.5))
    scenario = Scenario(
        network,
        load,
        irr,
        wind,
        weights=weights,
        penalties=penalties,
        dg_bounds=bounds,
        dg_settings=settings,
        name=config.scenario,
    )
    base = solve_horizon(network, load)
    return scenario, base


def _run_one(args: tuple[Scenario, str, int, dict]) -> ConvergenceTrace:
    scenario, opt, seed, overrides = args
    lo, hi = scenario.search_bounds()
    objective = PlacementObjective(scenario)
    if opt == "lsa":
        return run_lsa(LsaParams(**{**overrides, "seed": seed}), objective, lo, hi)
    return run_pso(PsoParams(**{**overrides, "seed": seed}), objective, lo, hi)


def _base_metrics(base: HorizonSolution) -> dict:
    v = base.v_mag
    loss = base.loss_kw
    h_v, b_v = np.unravel_index(np.argmin(v), v.shape)
    h_l, l_l = np.unravel_index(np.argmax(loss), loss.shape)
    return {
        "loss_kwh": base.total_loss_kwh,
        "vdev_puh": base.vdev_puh,
        "min_voltage_pu": float(v[h_v, b_v]),
        "min_voltage_bus": int(b_v) + 1,
        "min_voltage_hour": int(h_v) + 1,
        "max_line_loss_kw": float(loss[h_l, l_l]),
        "max_line_loss_branch": int(base.hours[0].branch_ids[l_l]),
        "max_line_loss_hour": int(h_l) + 1,
    }


def _write_matrices(horizon: HorizonSolution, out: Path, case: str) -> tuple[Path, Path]:
    lines_path = out / f"lines_{case}.csv"
    volts_path = out / f"voltages_{case}.csv"
    ids = horizon.hours[0].branch_ids
    with open(lines_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hour"] + [f"line_{i}" for i in ids])
        for h, sol in enumerate(horizon.hours, 1):
            w.writerow([h] + [repr(float(x)) for x in sol.loss_kw])
    with open(volts_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hour"] + [f"bus_{i}" for i in range(1, len(horizon.hours[0].v_mag) + 1)])
        for h, sol in enumerate(horizon.hours, 1):
            w.writerow([h] + [repr(float(x)) for x in sol.v_mag])
    return lines_path, volts_path


def report_base_case(config: ScenarioConfig, out_dir: str | Path | None = None) -> dict:
    """Write hour-by-line loss and hour-by-bus voltage matrices for the no-DG case."""
    network, load, _, _ = _load_inputs(config)
    base = solve_horizon(network, load)
    out = Path(out_dir) if out_dir is not None else config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    lines_path, volts_path = _write_matrices(base, out, "base")
    metrics = _base_metrics(base)
    metrics["files"] = {"lines": lines_path.name, "voltages": volts_path.name}
    return metrics


def _pct(base: float, value: float) -> float:
    return 100.0 * (base - value) / base


def _summary(values: Sequence[float]) -> dict:
    a = np.asarray(values, dtype=float)
    q1, med, q3 = (float(x) for x in np.percentile(a, [25, 50, 75]))
    return {"median": med, "q1": q1, "q3": q3, "iqr": q3 - q1, "min": float(a.min()), "max": float(a.max())}


def _dump_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def run_scenario(config: ScenarioConfig) -> dict:
    """Run every (optimizer, seed) pair and write the report and its artifacts.

    Returns the report as a dict (the same content as ``report.json``).
    """
    scenario, base = build_scenario(config)
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    base_m = _base_metrics(base)
    _write_matrices(base, out, "base")

    tasks = [
        (scenario, opt, int(seed), dict(getattr(config, opt)))
        for opt in config.optimizers
        for seed in config.seeds
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            traces = list(pool.map(_run_one, tasks))
    else:
        traces = [_run_one(t) for t in tasks]

    report: dict[str, Any] = {
        "scenario": config.scenario,
        "seeds": [int(s) for s in config.seeds],
        "base": base_m,
        "weights": asdict(scenario.weights),
        "optimizers": {},
    }
    for opt in config.optimizers:
        runs = [(t[2], tr) for t, tr in zip(tasks, traces) if t[1] == opt]
        trace_files = []
        for seed, tr in runs:
            trace_files.append(write_trace_csv(tr, out / f"trace_{opt}_{seed}.csv").name)
        seed, best = min(runs, key=lambda r: r[1].final)
        ev = evaluate(best.best_x, scenario)
        _write_matrices(ev.horizon, out, opt)
        report["optimizers"][opt] = {
            "best": {
                "seed": seed,
                "vector": [float(x) for x in best.best_x],
                "placement": ev.placement.to_dict(),
                "objective": ev.objective,
                "loss_kwh": ev.loss_kwh,
                "vdev_puh": ev.vdev_puh,
                "penalty": ev.penalty,
                "feasible": ev.feasible,
                "loss_reduction_pct": _pct(base_m["loss_kwh"], ev.loss_kwh),
                "vdev_improvement_pct": _pct(base_m["vdev_puh"], ev.vdev_puh),
            },
            "per_seed": [
                {
                    "seed": s,
                    "objective": tr.final,
                    "evaluations": tr.total_evaluations,
                    "monotone": tr.is_monotone(),
                }
                for s, tr in runs
            ],
            "summary": _summary([tr.final for _, tr in runs]),
            "traces": trace_files,
        }
        log.info("%s best objective %.6f (seed %d)", opt, ev.objective, seed)
    _dump_json(report, out / "report.json")
    return report


def compare(reports: Sequence[str | Path | dict]) -> tuple[list[list[str]], str]:
    """Side-by-side table of the best solutions in several reports.

    Returns CSV-ready rows and a human-readable rendering.
    """
    docs = [r if isinstance(r, dict) else json.loads(Path(r).read_text()) for r in reports]
    if len(docs) < 2:
        raise ValueError("compare needs at least two reports")
    scenarios = {d["scenario"] for d in docs}
    if len(scenarios) != 1:
        raise ValueError(f"reports come from different scenarios: {sorted(scenarios)}")
    columns: list[tuple[str, dict]] = []
    for d in docs:
        for opt, res in d["optimizers"].items():
            label = opt.upper()
            n = sum(1 for c, _ in columns if c.split("#")[0] == label)
            columns.append((f"{label}#{n + 1}" if n else label, res["best"]))
    header = ["", ""] + [c for c, _ in columns for _ in (0, 1)]
    sub = ["", ""] + ["Location", "Size"] * len(columns)
    rows = [header, sub]
    for kind in KINDS:
        row = [kind.value, ""]
        for _, best in columns:
            u = best["placement"][kind.value]
            row += [str(u["location"]), f"{u['size_kw']:.0f}"]
        rows.append(row)
    for key, fmt in (
        ("loss_kwh", "{:.1f}"),
        ("vdev_puh", "{:.3f}"),
        ("objective", "{:.4f}"),
        ("loss_reduction_pct", "{:.1f}"),
        ("vdev_improvement_pct", "{:.1f}"),
    ):
        row = [key, ""]
        for _, best in columns:
            row += [fmt.format(best[key]), ""]
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    text = "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() for r in rows)
    return rows, text


def rows_to_csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()
