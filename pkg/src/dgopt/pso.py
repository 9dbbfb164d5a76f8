"""Global-best particle swarm optimiser used as the comparison baseline."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .trace import ConvergenceTrace, evaluate_batch

__all__ = ["PsoParams", "inertia", "run_pso"]


@dataclass(frozen=True)
class PsoParams:
    population: int = 100
    iterations: int = 35
    c1: float = 2.0
    c2: float = 2.0
    w_min: float = 0.4
    w_max: float = 0.9
    v_clamp_fraction: float = 0.2
    inertia_mode: str = "linear"  # or "constant"
    omega: float = 0.78  # used when inertia_mode == "constant"
    seed: int | None = 0

    def __post_init__(self) -> None:
        if self.population < 1 or self.iterations < 1:
            raise ValueError("population and iterations must be positive")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("acceleration coefficients must be non-negative")
        if not 0 < self.w_min <= self.w_max:
            raise ValueError("inertia bounds need 0 < w_min <= w_max")
        if not 0 < self.v_clamp_fraction <= 1:
            raise ValueError("v_clamp_fraction must lie in (0, 1]")
        if self.inertia_mode not in ("linear", "constant"):
            raise ValueError("inertia_mode must be 'linear' or 'constant'")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")


def inertia(t: int, params: PsoParams) -> float:
    """Inertia weight at iteration ``t`` (1-based), decreasing linearly."""
    if params.inertia_mode == "constant":
        return params.omega
    if params.iterations == 1:
        return params.w_max
    frac = (t - 1) / (params.iterations - 1)
    return params.w_max - (params.w_max - params.w_min) * frac


def run_pso(params: PsoParams, objective, lower, upper) -> ConvergenceTrace:
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.shape != hi.shape or np.any(lo > hi):
        raise ValueError("invalid bounds")
    rng = np.random.default_rng(params.seed)
    start = time.perf_counter()
    n, d = params.population, lo.size
    vmax = params.v_clamp_fraction * (hi - lo)

    x = rng.uniform(lo, hi, size=(n, d))
    v = np.zeros((n, d))
    f = evaluate_batch(objective, x)
    evals = n
    pbest, pbest_f = x.copy(), f.copy()
    g = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])

    trace = ConvergenceTrace(optimizer="pso", seed=params.seed)
    for t in range(1, params.iterations + 1):
        w = inertia(t, params)
        r1 = rng.random((n, d))
        r2 = rng.random((n, d))
        v = w * v + params.c1 * r1 * (pbest - x) + params.c2 * r2 * (gbest - x)
        v = np.clip(v, -vmax, vmax)
        x = np.clip(x + v, lo, hi)
        f = evaluate_batch(objective, x)
        evals += n
        better = f < pbest_f
        pbest[better] = x[better]
        pbest_f[better] = f[better]
        g = int(np.argmin(pbest_f))
        if pbest_f[g] < gbest_f:
            gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
        trace.best_objective.append(gbest_f)
        trace.evaluations.append(evals)
    trace.best_x = gbest
    trace.wall_time = time.perf_counter() - start
    return trace
