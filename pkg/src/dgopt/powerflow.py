"""Backward/forward sweep load flow for radial feeders.

The solver works column-wise: every column of the input demand matrix is
an independent operating point (an hour, a candidate, or both), and all
columns are swept together. Only element-wise arithmetic is used inside
the sweep, so a column's result does not depend on which other columns
share the batch. The optimizers rely on that to evaluate a population in
one call and still get bit-identical numbers to a one-off evaluation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .network import HOURS, HourlySeries, NetworkModel

__all__ = [
    "TOLERANCE",
    "MAX_ITERATIONS",
    "COLLAPSE_VOLTAGE",
    "VoltageCollapseError",
    "InjectionSet",
    "SweepResult",
    "PowerFlowSolution",
    "HorizonSolution",
    "sweep",
    "solve_hour",
    "solve_horizon",
    "loss_index",
    "voltage_deviation_index",
    "write_solution_csv",
]

TOLERANCE = 1e-8  # pu, max |dV| between sweeps
MAX_ITERATIONS = 100
COLLAPSE_VOLTAGE = 0.5  # pu


class VoltageCollapseError(ArithmeticError):
    """A bus voltage fell below the collapse threshold during the sweep."""


@dataclass(frozen=True)
class InjectionSet:
    """Per-bus injections (generation positive), indexed by ``bus_id - 1``.

    The slack entry is ignored: the slack absorbs whatever mismatch remains.
    """

    p_kw: np.ndarray
    q_kvar: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.p_kw, dtype=float)
        q = np.array(self.q_kvar, dtype=float)
        if p.shape != q.shape or p.ndim != 1:
            raise ValueError("p_kw and q_kvar must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ValueError("injections must be finite")
        p.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "p_kw", p)
        object.__setattr__(self, "q_kvar", q)

    @classmethod
    def zeros(cls, n_bus: int) -> InjectionSet:
        return cls(np.zeros(n_bus), np.zeros(n_bus))


@dataclass(frozen=True)
class _Feeder:
    # Branch arrays are in sweep (breadth-first) order.
    frm: tuple[int, ...]
    to: tuple[int, ...]
    r_pu: np.ndarray
    x_pu: np.ndarray
    r_ohm: np.ndarray
    # Maps sweep position -> position in network.branches.
    position: np.ndarray


@lru_cache(maxsize=64)
def _feeder(network: NetworkModel) -> _Feeder:
    order = network.sweep_order
    pos = {br.id: k for k, br in enumerate(network.branches)}
    zb = network.z_base
    return _Feeder(
        frm=tuple(br.from_bus - 1 for br in order),
        to=tuple(br.to_bus - 1 for br in order),
        r_pu=np.array([br.r / zb for br in order]),
        x_pu=np.array([br.x / zb for br in order]),
        r_ohm=np.array([br.r for br in order]),
        position=np.array([pos[br.id] for br in order], dtype=int),
    )


@dataclass(frozen=True)
class SweepResult:
    """Raw batched sweep output; column ``j`` is one operating point.

    Branch rows follow ``network.branches`` order.
    """

    v_re: np.ndarray  # (n_bus, m) pu
    v_im: np.ndarray
    v_mag: np.ndarray
    i_amp: np.ndarray  # (n_branch, m) A
    loss_kw: np.ndarray  # (n_branch, m)
    q_loss_kvar: np.ndarray
    p_slack_kw: np.ndarray  # (m,)
    q_slack_kvar: np.ndarray
    converged: np.ndarray  # (m,) bool
    collapsed: np.ndarray  # (m,) bool
    iterations: np.ndarray  # (m,) int


def _backward(feeder: _Feeder, inj_re, inj_im):
    # Node currents accumulate from the leaves toward the slack.
    node_re = inj_re.copy()
    node_im = inj_im.copy()
    n_br = len(feeder.to)
    j_re = np.empty((n_br,) + inj_re.shape[1:])
    j_im = np.empty_like(j_re)
    for k in range(n_br - 1, -1, -1):
        t, f = feeder.to[k], feeder.frm[k]
        j_re[k] = node_re[t]
        j_im[k] = node_im[t]
        node_re[f] += j_re[k]
        node_im[f] += j_im[k]
    return j_re, j_im, node_re[0], node_im[0]


def _load_currents(p, q, v_re, v_im):
    # conj(S / V) for constant-power loads, kept in real arithmetic.
    mag2 = v_re * v_re + v_im * v_im
    return (p * v_re + q * v_im) / mag2, (p * v_im - q * v_re) / mag2


def sweep(
    network: NetworkModel,
    p_kw: np.ndarray,
    q_kvar: np.ndarray,
    *,
    tol: float = TOLERANCE,
    max_iter: int = MAX_ITERATIONS,
) -> SweepResult:
    """Solve one or many operating points by backward/forward sweep.

    Parameters
    ----------
    network
        Radial feeder; only its topology, impedances and bases are used.
    p_kw, q_kvar
        Net demand (load minus generation) per bus, shape ``(n_bus,)`` or
        ``(n_bus, m)``. Slack rows are ignored.

    Columns that converge stop updating, so their values are exactly what
    a single-column solve would produce. A column whose voltage drops
    below ``COLLAPSE_VOLTAGE`` is frozen and flagged ``collapsed``.
    """
    feeder = _feeder(network)
    p = np.asarray(p_kw, dtype=float)
    q = np.asarray(q_kvar, dtype=float)
    squeeze = p.ndim == 1
    if squeeze:
        p, q = p[:, None], q[:, None]
    if p.shape != q.shape or p.shape[0] != network.n_bus:
        raise ValueError(f"demand arrays must have {network.n_bus} rows")
    s_base_kva = network.base_mva * 1e3
    p = p / s_base_kva
    q = q / s_base_kva
    p[0] = 0.0
    q[0] = 0.0
    m = p.shape[1]
    v_re = np.full((network.n_bus, m), float(network.v_nom))
    v_im = np.zeros((network.n_bus, m))
    converged = np.zeros(m, dtype=bool)
    collapsed = np.zeros(m, dtype=bool)
    iterations = np.zeros(m, dtype=int)

    # Work only on still-active columns; finished ones keep their values.
    idx = np.arange(m)
    pa, qa, va_re, va_im = p, q, v_re.copy(), v_im.copy()
    for it in range(1, max_iter + 1):
        if idx.size == 0:
            break
        inj_re, inj_im = _load_currents(pa, qa, va_re, va_im)
        j_re, j_im, _, _ = _backward(feeder, inj_re, inj_im)
        new_re = np.empty_like(va_re)
        new_im = np.empty_like(va_im)
        new_re[0] = network.v_nom
        new_im[0] = 0.0
        for k in range(len(feeder.to)):
            f, t = feeder.frm[k], feeder.to[k]
            r, x = feeder.r_pu[k], feeder.x_pu[k]
            new_re[t] = new_re[f] - (r * j_re[k] - x * j_im[k])
            new_im[t] = new_im[f] - (r * j_im[k] + x * j_re[k])
        d_re = new_re - va_re
        d_im = new_im - va_im
        dv = np.sqrt(d_re * d_re + d_im * d_im).max(axis=0)
        vmin = np.sqrt(new_re * new_re + new_im * new_im).min(axis=0)
        v_re[:, idx] = new_re
        v_im[:, idx] = new_im
        iterations[idx] = it
        bad = ~(vmin >= COLLAPSE_VOLTAGE)
        done = (dv < tol) & ~bad
        collapsed[idx[bad]] = True
        converged[idx[done]] = True
        keep = ~(bad | done)
        if not keep.all():
            idx = idx[keep]
            pa, qa = pa[:, keep], qa[:, keep]
            new_re, new_im = new_re[:, keep], new_im[:, keep]
        va_re, va_im = new_re, new_im

    # Final currents consistent with the returned voltages.
    inj_re, inj_im = _load_currents(p, q, v_re, v_im)
    j_re, j_im, slack_re, slack_im = _backward(feeder, inj_re, inj_im)
    inv = np.empty_like(feeder.position)
    inv[feeder.position] = np.arange(len(feeder.position))
    j_re, j_im = j_re[inv], j_im[inv]
    i_amp = np.sqrt(j_re * j_re + j_im * j_im) * network.i_base
    r_ohm = feeder.r_ohm[inv][:, None]
    x_pu = feeder.x_pu[inv][:, None]
    loss_kw = 3e-3 * i_amp * i_amp * r_ohm
    q_loss = (j_re * j_re + j_im * j_im) * x_pu * s_base_kva
    v0 = float(network.v_nom)
    res = SweepResult(
        v_re=v_re,
        v_im=v_im,
        v_mag=np.sqrt(v_re * v_re + v_im * v_im),
        i_amp=i_amp,
        loss_kw=loss_kw,
        q_loss_kvar=q_loss,
        p_slack_kw=v0 * slack_re * s_base_kva,
        q_slack_kvar=-v0 * slack_im * s_base_kva,
        converged=converged,
        collapsed=collapsed,
        iterations=iterations,
    )
    if squeeze:
        res = SweepResult(**{k: v[..., 0] for k, v in vars(res).items()})
    return res


@dataclass(frozen=True)
class PowerFlowSolution:
    """Load-flow result for one operating point.

    Per-branch arrays follow ``network.branches`` order; ``loss_kw`` is the
    three-phase ohmic loss ``3 * i_amp**2 * r_ohm / 1000``.
    """

    v_mag: np.ndarray
    v_ang: np.ndarray  # rad
    i_amp: np.ndarray
    loss_kw: np.ndarray
    q_loss_kvar: np.ndarray
    p_slack_kw: float
    q_slack_kvar: float
    converged: bool
    iterations: int
    branch_ids: tuple[int, ...] = ()

    @property
    def total_loss_kw(self) -> float:
        return math.fsum(self.loss_kw)

    @property
    def min_voltage(self) -> tuple[float, int]:
        """(|V| pu, bus id) of the lowest-voltage bus."""
        k = int(np.argmin(self.v_mag))
        return float(self.v_mag[k]), k + 1


def _column(network: NetworkModel, res: SweepResult, j: int) -> PowerFlowSolution:
    return PowerFlowSolution(
        v_mag=res.v_mag[:, j].copy(),
        v_ang=np.arctan2(res.v_im[:, j], res.v_re[:, j]),
        i_amp=res.i_amp[:, j].copy(),
        loss_kw=res.loss_kw[:, j].copy(),
        q_loss_kvar=res.q_loss_kvar[:, j].copy(),
        p_slack_kw=float(res.p_slack_kw[j]),
        q_slack_kvar=float(res.q_slack_kvar[j]),
        converged=bool(res.converged[j]),
        iterations=int(res.iterations[j]),
        branch_ids=tuple(br.id for br in network.branches),
    )


def _net_demand(network: NetworkModel, multiplier: float, inj: InjectionSet | None):
    p = network.p_demand * multiplier
    q = network.q_demand * multiplier
    if inj is not None:
        if inj.p_kw.shape != (network.n_bus,):
            raise ValueError(f"injection set must cover {network.n_bus} buses")
        p = p - inj.p_kw
        q = q - inj.q_kvar
    return p, q


def solve_hour(network: NetworkModel, injections: InjectionSet | None = None) -> PowerFlowSolution:
    """Solve the feeder at its stored demand plus ``injections``.

    Non-convergence is reported through ``converged``; a voltage collapse
    raises :class:`VoltageCollapseError`.
    """
    p, q = _net_demand(network, 1.0, injections)
    res = sweep(network, p[:, None], q[:, None])
    if res.collapsed[0]:
        raise VoltageCollapseError("bus voltage fell below %.2f pu" % COLLAPSE_VOLTAGE)
    return _column(network, res, 0)


@dataclass(frozen=True)
class HorizonSolution:
    hours: tuple[PowerFlowSolution, ...]
    total_loss_kwh: float
    vdev_puh: float
    v_nom: float = 1.0

    @property
    def converged(self) -> bool:
        return all(h.converged for h in self.hours)

    @property
    def v_mag(self) -> np.ndarray:
        """(hours, buses) voltage magnitudes."""
        return np.array([h.v_mag for h in self.hours])

    @property
    def loss_kw(self) -> np.ndarray:
        """(hours, branches) ohmic losses."""
        return np.array([h.loss_kw for h in self.hours])

    @property
    def i_amp(self) -> np.ndarray:
        return np.array([h.i_amp for h in self.hours])


def solve_horizon(
    network: NetworkModel,
    load_profile: HourlySeries | Sequence[float],
    hourly_injections: Sequence[InjectionSet | None] | None = None,
) -> HorizonSolution:
    """Solve every hour of a profile; demands are scaled by the hour's multiplier."""
    mult = load_profile.values if isinstance(load_profile, HourlySeries) else tuple(load_profile)
    n_hours = len(mult)
    if hourly_injections is None:
        hourly_injections = [None] * n_hours
    if len(hourly_injections) != n_hours:
        raise ValueError(f"need one injection set per hour ({n_hours})")
    cols = [_net_demand(network, m, inj) for m, inj in zip(mult, hourly_injections)]
    p = np.stack([c[0] for c in cols], axis=1)
    q = np.stack([c[1] for c in cols], axis=1)
    res = sweep(network, p, q)
    if res.collapsed.any():
        bad = [h + 1 for h in np.flatnonzero(res.collapsed)]
        raise VoltageCollapseError(f"voltage collapse in hours {bad}")
    hours = tuple(_column(network, res, j) for j in range(n_hours))
    return _horizon(hours, network.v_nom)


def _horizon(hours: tuple[PowerFlowSolution, ...], v_nom: float) -> HorizonSolution:
    loss = math.fsum(np.concatenate([h.loss_kw for h in hours]))
    vdev = math.fsum(np.concatenate([np.abs(h.v_mag - v_nom) for h in hours]))
    return HorizonSolution(hours=hours, total_loss_kwh=loss, vdev_puh=vdev, v_nom=v_nom)


def loss_index(horizon: HorizonSolution) -> float:
    """Energy loss over the horizon in kWh (one-hour steps)."""
    return math.fsum(np.concatenate([h.loss_kw for h in horizon.hours]))


def voltage_deviation_index(horizon: HorizonSolution, v_nom: float | None = None) -> float:
    """Sum over hours and buses of ``|V - v_nom|`` in pu·h."""
    ref = horizon.v_nom if v_nom is None else v_nom
    return math.fsum(np.concatenate([np.abs(h.v_mag - ref) for h in horizon.hours]))


def write_solution_csv(
    solutions: PowerFlowSolution | HorizonSolution, directory: str | Path, *, first_hour: int = 1
) -> tuple[Path, Path]:
    """Dump voltages (``hour,bus,v_pu``) and branch flows (``hour,branch,i_amp,loss_kw``)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    hours = solutions.hours if isinstance(solutions, HorizonSolution) else (solutions,)
    vpath = directory / "bus_voltages.csv"
    bpath = directory / "branch_flows.csv"
    with open(vpath, "w", newline="") as fv, open(bpath, "w", newline="") as fb:
        wv, wb = csv.writer(fv), csv.writer(fb)
        wv.writerow(["hour", "bus", "v_pu"])
        wb.writerow(["hour", "branch", "i_amp", "loss_kw"])
        for h, sol in enumerate(hours, first_hour):
            for bus, v in enumerate(sol.v_mag, 1):
                wv.writerow([h, bus, repr(float(v))])
            for bid, i, loss in zip(sol.branch_ids, sol.i_amp, sol.loss_kw):
                wb.writerow([h, bid, repr(float(i)), repr(float(loss))])
    return vpath, bpath


