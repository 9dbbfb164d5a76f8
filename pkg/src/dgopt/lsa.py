"""Lightning Search Algorithm.

Each channel (step leader) carries a position and an energy, where the
energy is simply the objective value (lower is better). Every iteration:

* the best channel fires a lead projectile: a Gaussian step around itself
  whose spread decays exponentially with the iteration number;
* every other channel fires a space projectile: an exponential step of
  random sign, scaled per dimension by its distance to the best channel;
* a channel moves only if the projectile lands on a better point;
* with probability ``forking_rate`` the opposite point ``a + b - x`` of a
  projectile is tried as well;
* after ``channel_time`` iterations without improvement of the best
  energy, the worst ``ceil(population * (1 - rho))`` channels are
  re-seeded uniformly.

All random numbers of an iteration are drawn before anything is
evaluated, so batching the evaluations cannot change the result.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .trace import ConvergenceTrace, evaluate_batch

__all__ = [
    "LsaParams",
    "Channel",
    "Population",
    "init_step_leaders",
    "space_projectile_step",
    "lead_projectile_step",
    "lead_sigma",
    "step",
    "eliminate_channels",
    "run_lsa",
]


@dataclass(frozen=True)
class LsaParams:
    population: int = 100
    iterations: int = 35
    forking_rate: float = 0.2
    rho: float = 0.8
    channel_time: int = 5
    sigma0_fraction: float = 0.1
    tau: float | None = None  # defaults to iterations / 2
    mu_floor_fraction: float = 0.01
    seed: int | None = 0

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if not 0 <= self.forking_rate <= 1:
            raise ValueError("forking_rate must lie in [0, 1]")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        if self.channel_time < 1:
            raise ValueError("channel_time must be at least 1")

    @property
    def n_eliminated(self) -> int:
        # Round first so 100 * (1 - 0.8) gives 20, not 21.
        n = math.ceil(round(self.population * (1.0 - self.rho), 9))
        return min(n, self.population - 1)

    @property
    def decay(self) -> float:
        return self.tau if self.tau is not None else self.iterations / 2


@dataclass(frozen=True)
class Channel:
    position: np.ndarray
    energy: float
    age: int = 0


@dataclass
class Population:
    positions: np.ndarray  # (n, d)
    energies: np.ndarray  # (n,)
    ages: np.ndarray  # (n,) iterations since the channel last moved
    stagnation: int = 0  # iterations since the best energy last improved
    evaluations: int = 0

    def __len__(self) -> int:
        return len(self.energies)

    def __getitem__(self, i: int) -> Channel:
        return Channel(self.positions[i].copy(), float(self.energies[i]), int(self.ages[i]))

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.energies))

    @property
    def best(self) -> Channel:
        return self[self.best_index]


def _check_bounds(lower, upper) -> tuple[np.ndarray, np.ndarray]:
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1:
        raise ValueError("lower and upper bounds must be 1-D arrays of equal length")
    if np.any(lo > hi):
        raise ValueError("lower bound exceeds upper bound")
    return lo, hi


def init_step_leaders(
    params: LsaParams, lower, upper, objective, rng: np.random.Generator
) -> Population:
    """Uniform random channels over the box ``[lower, upper]``, evaluated."""
    lo, hi = _check_bounds(lower, upper)
    x = rng.uniform(lo, hi, size=(params.population, lo.size))
    x = np.clip(x, lo, hi)
    f = evaluate_batch(objective, x)
    return Population(x, f, np.zeros(len(f), dtype=int), evaluations=len(f))


def space_projectile_step(position, mu, lower, upper, rng: np.random.Generator) -> np.ndarray:
    """``position +/- Exp(mu)`` per dimension, fair-coin sign, clipped to the box."""
    x = np.asarray(position, dtype=float)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), x.shape)
    if np.any(mu < 0):
        raise ValueError("exponential scale must be non-negative")
    sign = np.where(rng.random(x.shape) < 0.5, -1.0, 1.0)
    step = mu * rng.standard_exponential(x.shape)
    return np.clip(x + sign * step, lower, upper)


def lead_sigma(t: int, params: LsaParams, lower, upper) -> np.ndarray:
    """Lead-projectile spread at iteration ``t``: ``sigma0 * exp(-t / tau)``."""
    span = np.asarray(upper, dtype=float) - np.asarray(lower, dtype=float)
    return params.sigma0_fraction * span * math.exp(-t / params.decay)


def lead_projectile_step(best_position, sigma, lower, upper, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(best_position, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), x.shape)
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    return np.clip(x + sigma * rng.standard_normal(x.shape), lower, upper)


def step(
    pop: Population, t: int, params: LsaParams, lower, upper, objective, rng: np.random.Generator
) -> Population:
    """One greedy projectile round over every channel; returns a new population."""
    lo, hi = _check_bounds(lower, upper)
    n, d = pop.positions.shape
    ib = pop.best_index
    best = pop.positions[ib]

    mu = np.abs(pop.positions - best)
    mu = np.where(mu > 0, mu, params.mu_floor_fraction * (hi - lo))
    cand = np.empty_like(pop.positions)
    for i in range(n):
        if i == ib:
            cand[i] = lead_projectile_step(best, lead_sigma(t, params, lo, hi), lo, hi, rng)
        else:
            cand[i] = space_projectile_step(pop.positions[i], mu[i], lo, hi, rng)
    fork = rng.random(n) < params.forking_rate
    forked = lo + hi - cand[fork]

    f_all = evaluate_batch(objective, np.vstack([cand, forked]))
    f_cand, f_fork = f_all[:n], f_all[n:]

    x = pop.positions.copy()
    f = pop.energies.copy()
    moved = f_cand < f
    x[moved] = cand[moved]
    f[moved] = f_cand[moved]
    for j, i in enumerate(np.flatnonzero(fork)):
        if f_fork[j] < f[i]:
            x[i] = forked[j]
            f[i] = f_fork[j]
            moved[i] = True

    improved = f.min() < pop.energies.min()
    return Population(
        positions=x,
        energies=f,
        ages=np.where(moved, 0, pop.ages + 1),
        stagnation=0 if improved else pop.stagnation + 1,
        evaluations=pop.evaluations + len(f_all),
    )


def eliminate_channels(
    pop: Population, params: LsaParams, lower, upper, objective, rng: np.random.Generator
) -> Population:
    """Re-seed the worst channels once the best has stagnated ``channel_time`` rounds."""
    if pop.stagnation < params.channel_time:
        return pop
    lo, hi = _check_bounds(lower, upper)
    worst = np.argsort(pop.energies, kind="stable")[len(pop) - params.n_eliminated :]
    fresh = np.clip(rng.uniform(lo, hi, size=(worst.size, lo.size)), lo, hi)
    f_new = evaluate_batch(objective, fresh)
    x = pop.positions.copy()
    f = pop.energies.copy()
    x[worst] = fresh
    f[worst] = f_new
    return replace(
        pop,
        positions=x,
        energies=f,
        ages=np.zeros(len(pop), dtype=int),
        stagnation=0,
        evaluations=pop.evaluations + worst.size,
    )


def run_lsa(params: LsaParams, objective, lower, upper) -> ConvergenceTrace:
    """Minimise ``objective`` over the box; fully reproducible from ``params.seed``.

    ``objective`` maps a 1-D vector to a float. If it also has a ``many``
    method taking a 2-D array, proposals are evaluated in batches.
    """
    lo, hi = _check_bounds(lower, upper)
    rng = np.random.default_rng(params.seed)
    start = time.perf_counter()
    pop = init_step_leaders(params, lo, hi, objective, rng)
    trace = ConvergenceTrace(optimizer="lsa", seed=params.seed)
    best_f = float(pop.energies.min())
    best_x = pop.positions[pop.best_index].copy()
    for t in range(1, params.iterations + 1):
        pop = step(pop, t, params, lo, hi, objective, rng)
        pop = eliminate_channels(pop, params, lo, hi, objective, rng)
        if pop.energies.min() < best_f:
            best_f = float(pop.energies.min())
            best_x = pop.positions[pop.best_index].copy()
        trace.best_objective.append(best_f)
        trace.evaluations.append(pop.evaluations)
    trace.best_x = best_x
    trace.wall_time = time.perf_counter() - start
    return trace
