"""Placement encoding, penalised objective and base-case normalisation.

A candidate is the six-vector ``[loc_PV, size_PV, loc_WT, size_WT,
loc_FC, size_FC]``. Locations are rounded half-up to a bus id and clamped
to ``2..n_bus``; sizes are clamped to the configured kW range. One unit
per kind is implied by the encoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .dg import DgKind, DgSettings, DgUnit, capacity_factors
from .network import HourlySeries, NetworkModel, SeriesKind
from .powerflow import HorizonSolution, PowerFlowSolution, _column, _horizon, solve_horizon, sweep

__all__ = [
    "KINDS",
    "DgBounds",
    "Penalties",
    "ObjectiveWeights",
    "Placement",
    "Scenario",
    "Evaluation",
    "PlacementObjective",
    "decode",
    "encode",
    "evaluate",
    "evaluate_many",
    "calibrate_weights",
]

KINDS = (DgKind.PV, DgKind.WT, DgKind.FC)


@dataclass(frozen=True)
class DgBounds:
    min_kw: float = 0.0
    max_kw: float = 2500.0

    def __post_init__(self) -> None:
        if not 0 <= self.min_kw <= self.max_kw:
            raise ValueError("DG bounds need 0 <= min_kw <= max_kw")


@dataclass(frozen=True)
class Penalties:
    c_v: float = 100.0  # voltage-band violations, pu^2
    c_i: float = 100.0  # ampacity violations, normalised
    c_f: float = 1000.0  # per non-converged hour


@dataclass(frozen=True)
class ObjectiveWeights:
    w1: float = 0.5
    w2: float = 0.5
    loss_ref: float = 1.0  # kWh
    vdev_ref: float = 1.0  # pu*h

    def __post_init__(self) -> None:
        if not (self.w1 > 0 and self.w2 > 0):
            raise ValueError("objective weights must be positive")
        if not (self.loss_ref > 0 and self.vdev_ref > 0):
            raise ValueError("reference values must be positive")


@dataclass(frozen=True)
class Placement:
    units: tuple[DgUnit, DgUnit, DgUnit]

    def unit(self, kind: DgKind | str) -> DgUnit:
        kind = DgKind(kind)
        return next(u for u in self.units if u.kind is kind)

    def to_dict(self) -> dict:
        return {u.kind.value: {"location": u.location, "size_kw": u.rated_kw} for u in self.units}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def decode(vector, n_bus: int, bounds: DgBounds = DgBounds()) -> Placement:
    v = np.asarray(vector, dtype=float)
    if v.shape != (6,) or not np.all(np.isfinite(v)):
        raise ValueError("placement vector must hold six finite values")
    units = []
    for k, kind in enumerate(KINDS):
        loc = min(max(_round_half_up(v[2 * k]), 2), n_bus)
        size = min(max(float(v[2 * k + 1]), bounds.min_kw), bounds.max_kw)
        units.append(DgUnit(kind, loc, size))
    return Placement(tuple(units))


def encode(placement: Placement) -> np.ndarray:
    return np.array(
        [x for kind in KINDS for x in (placement.unit(kind).location, placement.unit(kind).rated_kw)],
        dtype=float,
    )


@dataclass(frozen=True)
class Scenario:
    """Everything an evaluation needs; immutable and safe to share."""

    network: NetworkModel
    load: HourlySeries
    irradiance: HourlySeries
    wind: HourlySeries
    weights: ObjectiveWeights = ObjectiveWeights()
    penalties: Penalties = Penalties()
    dg_bounds: DgBounds = DgBounds()
    dg_settings: DgSettings = DgSettings()
    name: str = field(default="", compare=False)

    @cached_property
    def factors(self) -> np.ndarray:
        f = capacity_factors(self.irradiance, self.wind, self.dg_settings)
        return np.stack([f[k] for k in KINDS])  # (3, hours)

    @cached_property
    def multipliers(self) -> np.ndarray:
        return np.array(self.load.values)

    @cached_property
    def ampacity(self) -> np.ndarray:
        return np.array([br.ampacity for br in self.network.branches])

    def search_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.network.n_bus
        lo = np.array([2.0, self.dg_bounds.min_kw] * 3)
        hi = np.array([float(n), self.dg_bounds.max_kw] * 3)
        return lo, hi

    def with_weights(self, weights: ObjectiveWeights) -> Scenario:
        return Scenario(
            self.network,
            self.load,
            self.irradiance,
            self.wind,
            weights,
            self.penalties,
            self.dg_bounds,
            self.dg_settings,
            self.name,
        )


@dataclass(frozen=True)
class Evaluation:
    objective: float
    loss_kwh: float
    vdev_puh: float
    penalty: float
    feasible: bool
    placement: Placement
    horizon: HorizonSolution | None = field(default=None, repr=False, compare=False)
    nonconverged_hours: int = 0


def _solve(scenario: Scenario, X: np.ndarray):
    net = scenario.network
    n_bus = net.n_bus
    n_hours = len(scenario.multipliers)
    placements = [decode(x, n_bus, scenario.dg_bounds) for x in X]
    inj = np.zeros((len(X), n_bus, n_hours))
    for c, pl in enumerate(placements):
        for k, u in enumerate(pl.units):
            inj[c, u.location - 1] += u.rated_kw * scenario.factors[k]
    # Candidate-major columns: column c * n_hours + h.
    p_dem = net.p_demand[:, None] * scenario.multipliers[None, :]
    q_dem = net.q_demand[:, None] * scenario.multipliers[None, :]
    p = (p_dem[None] - inj).transpose(1, 0, 2).reshape(n_bus, -1)
    q = np.broadcast_to(q_dem[None], inj.shape).transpose(1, 0, 2).reshape(n_bus, -1)
    return placements, sweep(net, p, q)


def _metrics(scenario: Scenario, res, cols: slice):
    net = scenario.network
    w = scenario.weights
    pen = scenario.penalties
    v = res.v_mag[:, cols]
    loss = res.loss_kw[:, cols]
    amps = res.i_amp[:, cols]
    ok = res.converged[cols]
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(loss))):
        v = np.nan_to_num(v, nan=0.0, posinf=0.0, neginf=0.0)
        loss = np.nan_to_num(loss, nan=0.0, posinf=0.0, neginf=0.0)
        amps = np.nan_to_num(amps, nan=0.0, posinf=0.0, neginf=0.0)
    loss_kwh = math.fsum(loss.ravel())
    vdev = math.fsum(np.abs(v - net.v_nom).ravel())
    under = np.maximum(net.v_min - v, 0.0)
    over = np.maximum(v - net.v_max, 0.0)
    excess = np.maximum(amps / scenario.ampacity[:, None] - 1.0, 0.0)
    n_bad = int(np.count_nonzero(~ok))
    band = under * under + over * over
    amp = excess * excess
    penalty = math.fsum(
        [
            pen.c_v * math.fsum(band.ravel()) if band.any() else 0.0,
            pen.c_i * math.fsum(amp.ravel()) if amp.any() else 0.0,
            pen.c_f * n_bad,
        ]
    )
    objective = w.w1 * (loss_kwh / w.loss_ref) + w.w2 * (vdev / w.vdev_ref) + penalty
    return objective, loss_kwh, vdev, penalty, n_bad


def evaluate_many(X, scenario: Scenario) -> np.ndarray:
    """Objective values for a stack of candidate vectors, shape ``(k, 6)``.

    Each value is bit-identical to ``evaluate(x, scenario).objective``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n_hours = len(scenario.multipliers)
    _, res = _solve(scenario, X)
    return np.array(
        [_metrics(scenario, res, slice(c * n_hours, (c + 1) * n_hours))[0] for c in range(len(X))]
    )


def evaluate(vector, scenario: Scenario) -> Evaluation:
    """Full evaluation of one candidate, including its hourly load flows."""
    X = np.asarray(vector, dtype=float)[None, :]
    n_hours = len(scenario.multipliers)
    (placement,), res = _solve(scenario, X)
    objective, loss, vdev, penalty, n_bad = _metrics(scenario, res, slice(0, n_hours))
    hours: tuple[PowerFlowSolution, ...] = tuple(
        _column(scenario.network, res, j) for j in range(n_hours)
    )
    return Evaluation(
        objective=objective,
        loss_kwh=loss,
        vdev_puh=vdev,
        penalty=penalty,
        feasible=penalty == 0 and n_bad == 0,
        placement=placement,
        horizon=_horizon(hours, scenario.network.v_nom),
        nonconverged_hours=n_bad,
    )


class PlacementObjective:
    """Callable objective for the optimizers; ``many`` evaluates a batch."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.calls = 0

    def __call__(self, x) -> float:
        return float(self.many(np.asarray(x, dtype=float)[None, :])[0])

    def many(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        self.calls += len(X)
        return evaluate_many(X, self.scenario)


def calibrate_weights(
    network: NetworkModel, load: HourlySeries | None = None, *, w1: float = 0.5, w2: float = 0.5
) -> ObjectiveWeights:
    """Normalise both objective terms by the no-DG base case.

    With ``w1 = w2 = 0.5`` the base case scores exactly 1.0.
    """
    load = load if load is not None else HourlySeries.flat(1.0, SeriesKind.LOAD)
    base = solve_horizon(network, load)
    if not base.converged:
        raise ArithmeticError("base case load flow did not converge")
    if not (base.total_loss_kwh > 0 and base.vdev_puh > 0):
        raise ValueError("base case has zero loss or zero voltage deviation; cannot normalise")
    return ObjectiveWeights(w1=w1, w2=w2, loss_ref=base.total_loss_kwh, vdev_ref=base.vdev_puh)
