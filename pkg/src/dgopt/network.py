"""Radial feeder model, topology validation and data-file ingestion.

Network CSV layout (one record per line, ``#`` starts a comment)::

    BASE,kv,12.66
    BASE,mva,100
    BUS,<id>,<p_kw>,<q_kvar>
    BRANCH,<id>,<from>,<to>,<r_ohm>,<x_ohm>,<amp_max>

A blank ``amp_max`` means the branch has no current limit. ``BASE`` rows
are optional and default to 12.66 kV / 100 MVA. The JSON form carries
the same fields under ``buses``, ``branches`` and ``base`` keys.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "UNLIMITED_AMPACITY",
    "Bus",
    "Branch",
    "NetworkModel",
    "HourlySeries",
    "SeriesKind",
    "NetworkError",
    "TopologyError",
    "load_network",
    "dump_network",
    "validate_radial",
    "scale_loads",
    "load_profile",
    "bundled_path",
]

UNLIMITED_AMPACITY = 1.0e9  # A; sentinel for "no rating given"
HOURS = 24


class NetworkError(ValueError):
    """Malformed or physically invalid network/profile data."""


class TopologyError(NetworkError):
    """Branch set is not a spanning tree rooted at the slack bus."""


@dataclass(frozen=True)
class Bus:
    id: int
    p_load: float = 0.0  # kW
    q_load: float = 0.0  # kvar

    def __post_init__(self) -> None:
        if self.id < 1:
            raise NetworkError(f"bus id must be >= 1, got {self.id}")
        if not (math.isfinite(self.p_load) and math.isfinite(self.q_load)):
            raise NetworkError(f"bus {self.id}: non-finite demand")
        if self.p_load < 0 or self.q_load < 0:
            raise NetworkError(f"bus {self.id}: negative demand")


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    r: float  # ohm
    x: float  # ohm
    ampacity: float = UNLIMITED_AMPACITY  # A

    def __post_init__(self) -> None:
        if self.from_bus == self.to_bus:
            raise TopologyError(f"branch {self.id}: self-loop at bus {self.from_bus}")
        if self.r < 0 or self.x < 0:
            raise NetworkError(f"branch {self.id}: negative impedance")
        if not self.ampacity > 0:
            raise NetworkError(f"branch {self.id}: ampacity must be positive")


@dataclass(frozen=True)
class NetworkModel:
    """A radial feeder with bus 1 as the slack.

    Construction checks every structural invariant, so any instance that
    exists is a valid spanning tree rooted at bus 1 with a sane voltage
    band.
    """

    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    base_kv: float = 12.66
    base_mva: float = 100.0
    v_nom: float = 1.0
    v_min: float = 0.90
    v_max: float = 1.05
    _order: tuple[int, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "buses", tuple(sorted(self.buses, key=lambda b: b.id)))
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.buses:
            raise NetworkError("network has no buses")
        ids = [b.id for b in self.buses]
        if sorted(ids) != list(range(1, len(ids) + 1)):
            raise NetworkError("bus ids must be unique and numbered 1..n")
        if len({br.id for br in self.branches}) != len(self.branches):
            raise NetworkError("duplicate branch id")
        slack = self.bus(1)
        if slack.p_load != 0 or slack.q_load != 0:
            raise NetworkError("slack bus 1 must carry zero demand")
        if not self.v_min < self.v_nom < self.v_max:
            raise NetworkError("voltage band must satisfy v_min < v_nom < v_max")
        if self.base_kv <= 0 or self.base_mva <= 0:
            raise NetworkError("base quantities must be positive")
        order = _radial_order(self)
        object.__setattr__(self, "_order", order)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_branch(self) -> int:
        return len(self.branches)

    def bus(self, bus_id: int) -> Bus:
        return self.buses[bus_id - 1]

    @property
    def z_base(self) -> float:
        """Impedance base in ohm."""
        return self.base_kv**2 / self.base_mva

    @property
    def i_base(self) -> float:
        """Current base in A (three-phase, line-to-line voltage base)."""
        return self.base_mva * 1e6 / (math.sqrt(3.0) * self.base_kv * 1e3)

    @property
    def p_demand(self) -> np.ndarray:
        """Active demand per bus in kW, indexed by ``bus_id - 1``."""
        return np.array([b.p_load for b in self.buses])

    @property
    def q_demand(self) -> np.ndarray:
        return np.array([b.q_load for b in self.buses])

    @property
    def sweep_order(self) -> tuple[Branch, ...]:
        """Branches in breadth-first order from the slack, re-oriented outward."""
        by_id = {br.id: br for br in self.branches}
        out = []
        for bid in self._order:
            br = by_id[abs(bid)]
            if bid < 0:
                br = dataclasses.replace(br, from_bus=br.to_bus, to_bus=br.from_bus)
            out.append(br)
        return tuple(out)


def _radial_order(network: NetworkModel) -> tuple[int, ...]:
    # Signed branch ids; negative means the stored direction points toward the slack.
    n = len(network.buses)
    known = {b.id for b in network.buses}
    for br in network.branches:
        if br.from_bus not in known or br.to_bus not in known:
            raise TopologyError(f"branch {br.id} references an unknown bus")
    if len(network.branches) != n - 1:
        raise TopologyError(
            f"radial network needs {n - 1} branches for {n} buses, got {len(network.branches)}"
        )
    adjacency: dict[int, list[tuple[int, int]]] = {b: [] for b in known}
    for br in network.branches:
        adjacency[br.from_bus].append((br.to_bus, br.id))
        adjacency[br.to_bus].append((br.from_bus, -br.id))
    seen = {1}
    order = []
    queue = deque([1])
    while queue:
        u = queue.popleft()
        for v, signed in sorted(adjacency[u], key=lambda e: abs(e[1])):
            if v in seen:
                continue
            seen.add(v)
            order.append(signed)
            queue.append(v)
    if len(seen) != n:
        missing = sorted(known - seen)
        raise TopologyError(f"buses not reachable from the slack: {missing}")
    return tuple(order)


def validate_radial(network: NetworkModel) -> list[Branch]:
    """Return branches ordered breadth-first from the slack bus.

    Each returned branch is oriented so ``from_bus`` is the end nearer the
    slack; this is the forward-sweep order.
    """
    return list(network.sweep_order)


def scale_loads(network: NetworkModel, multiplier: float) -> NetworkModel:
    if not multiplier >= 0:
        raise NetworkError(f"load multiplier must be non-negative, got {multiplier}")
    buses = tuple(
        dataclasses.replace(b, p_load=b.p_load * multiplier, q_load=b.q_load * multiplier)
        for b in network.buses
    )
    return dataclasses.replace(network, buses=buses)


class SeriesKind(str, Enum):
    LOAD = "load-multiplier"
    IRRADIANCE = "irradiance"
    WIND = "wind-speed"


@dataclass(frozen=True)
class HourlySeries:
    """24 hourly values; ``values[0]`` is hour 1."""

    values: tuple[float, ...]
    kind: SeriesKind

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "kind", SeriesKind(self.kind))
        if len(vals) != HOURS:
            raise NetworkError(f"hourly series needs {HOURS} values, got {len(vals)}")
        if any(not math.isfinite(v) for v in vals):
            raise NetworkError("hourly series contains non-finite values")
        if any(v < 0 for v in vals):
            raise NetworkError("hourly series contains negative values")

    def __getitem__(self, hour: int) -> float:
        """Value at 1-based ``hour``."""
        if not 1 <= hour <= HOURS:
            raise IndexError(hour)
        return self.values[hour - 1]

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    @classmethod
    def flat(cls, value: float, kind: SeriesKind | str = SeriesKind.LOAD) -> HourlySeries:
        return cls((value,) * HOURS, SeriesKind(kind))


def bundled_path(name: str) -> Path:
    """Path of a data file shipped with the package (e.g. ``ieee33.csv``)."""
    return Path(str(resources.files("dgopt") / "data" / name))


def _to_float(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise NetworkError(f"cannot parse {what}: {text!r}") from exc


def _to_int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise NetworkError(f"cannot parse {what}: {text!r}") from exc


def _parse_csv(text: str) -> dict:
    base: dict[str, float] = {}
    buses, branches = [], []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        row = [c.strip() for c in row]
        if not row or not row[0] or row[0].startswith("#"):
            continue
        tag = row[0].upper()
        if tag == "BASE" and len(row) >= 3:
            base[row[1].lower()] = _to_float(row[2], f"line {lineno} base value")
        elif tag == "BUS" and len(row) >= 4:
            buses.append(
                Bus(
                    _to_int(row[1], f"line {lineno} bus id"),
                    _to_float(row[2], f"line {lineno} p_kw"),
                    _to_float(row[3], f"line {lineno} q_kvar"),
                )
            )
        elif tag == "BRANCH" and len(row) >= 6:
            amp = row[6] if len(row) > 6 else ""
            branches.append(
                Branch(
                    _to_int(row[1], f"line {lineno} branch id"),
                    _to_int(row[2], f"line {lineno} from"),
                    _to_int(row[3], f"line {lineno} to"),
                    _to_float(row[4], f"line {lineno} r_ohm"),
                    _to_float(row[5], f"line {lineno} x_ohm"),
                    _to_float(amp, f"line {lineno} amp_max") if amp else UNLIMITED_AMPACITY,
                )
            )
        else:
            raise NetworkError(f"line {lineno}: unrecognised record {row!r}")
    return {"buses": buses, "branches": branches, "base": base}


def _parse_json(text: str) -> dict:
    try:
        doc = json.loads(text)
        buses = [Bus(int(b["id"]), float(b["p_kw"]), float(b["q_kvar"])) for b in doc["buses"]]
        branches = [
            Branch(
                int(b["id"]),
                int(b["from"]),
                int(b["to"]),
                float(b["r_ohm"]),
                float(b["x_ohm"]),
                UNLIMITED_AMPACITY if b.get("amp_max") is None else float(b["amp_max"]),
            )
            for b in doc["branches"]
        ]
        base = {k: float(v) for k, v in doc.get("base", {}).items()}
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, NetworkError):
            raise
        raise NetworkError(f"malformed network JSON: {exc}") from exc
    return {"buses": buses, "branches": branches, "base": base}


def load_network(path: str | Path, format: str | None = None, **limits: float) -> NetworkModel:
    """Read and validate a network file.

    Parameters
    ----------
    path
        CSV or JSON network file.
    format
        ``"csv"`` or ``"json"``; inferred from the suffix when omitted.
    **limits
        Optional ``v_nom``, ``v_min``, ``v_max`` overrides.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    text = path.read_text()
    if fmt == "csv":
        doc = _parse_csv(text)
    elif fmt == "json":
        doc = _parse_json(text)
    else:
        raise NetworkError(f"unknown network format {fmt!r}")
    base = doc["base"]
    kwargs = {k: float(v) for k, v in base.items() if k in ("v_nom", "v_min", "v_max")}
    kwargs.update(limits)
    return NetworkModel(
        buses=tuple(doc["buses"]),
        branches=tuple(doc["branches"]),
        base_kv=base.get("kv", 12.66),
        base_mva=base.get("mva", 100.0),
        **kwargs,
    )


def dump_network(network: NetworkModel, path: str | Path, format: str | None = None) -> None:
    """Write ``network`` in a form :func:`load_network` reads back identically."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "json":
        doc = {
            "base": {
                "kv": network.base_kv,
                "mva": network.base_mva,
                "v_nom": network.v_nom,
                "v_min": network.v_min,
                "v_max": network.v_max,
            },
            "buses": [{"id": b.id, "p_kw": b.p_load, "q_kvar": b.q_load} for b in network.buses],
            "branches": [
                {
                    "id": br.id,
                    "from": br.from_bus,
                    "to": br.to_bus,
                    "r_ohm": br.r,
                    "x_ohm": br.x,
                    "amp_max": None if br.ampacity >= UNLIMITED_AMPACITY else br.ampacity,
                }
                for br in network.branches
            ],
        }
        path.write_text(json.dumps(doc, indent=2) + "\n")
        return
    if fmt != "csv":
        raise NetworkError(f"unknown network format {fmt!r}")
    lines = [
        f"BASE,kv,{network.base_kv!r}",
        f"BASE,mva,{network.base_mva!r}",
        f"BASE,v_nom,{network.v_nom!r}",
        f"BASE,v_min,{network.v_min!r}",
        f"BASE,v_max,{network.v_max!r}",
    ]
    lines += [f"BUS,{b.id},{b.p_load!r},{b.q_load!r}" for b in network.buses]
    for br in network.branches:
        amp = "" if br.ampacity >= UNLIMITED_AMPACITY else repr(br.ampacity)
        lines.append(f"BRANCH,{br.id},{br.from_bus},{br.to_bus},{br.r!r},{br.x!r},{amp}")
    path.write_text("\n".join(lines) + "\n")


def load_profile(path: str | Path, kind: SeriesKind | str) -> HourlySeries:
    """Read a ``hour,value`` CSV with hours 1..24 (header row optional)."""
    rows: dict[int, float] = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            if row[0].strip().lower() == "hour":
                continue
            if len(row) < 2:
                raise NetworkError(f"{path}: expected 'hour,value' rows")
            hour = _to_int(row[0].strip(), "hour")
            if hour in rows:
                raise NetworkError(f"{path}: duplicate hour {hour}")
            rows[hour] = _to_float(row[1].strip(), "profile value")
    if sorted(rows) != list(range(1, HOURS + 1)):
        raise NetworkError(f"{path}: expected hours 1..{HOURS}, got {len(rows)} rows")
    return HourlySeries(tuple(rows[h] for h in range(1, HOURS + 1)), SeriesKind(kind))
