"""Convergence record shared by the optimizers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["ConvergenceTrace", "write_trace_csv", "read_trace_csv", "evaluate_batch"]


@dataclass
class ConvergenceTrace:
    """Best-so-far objective after each iteration.

    ``evaluations[k]`` is the cumulative number of objective calls at the
    end of iteration ``k + 1`` (the initial population included).
    """

    best_objective: list[float] = field(default_factory=list)
    evaluations: list[int] = field(default_factory=list)
    best_x: np.ndarray | None = None
    wall_time: float = 0.0
    optimizer: str = ""
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.best_objective)

    @property
    def final(self) -> float:
        return self.best_objective[-1]

    @property
    def total_evaluations(self) -> int:
        return self.evaluations[-1] if self.evaluations else 0

    def is_monotone(self) -> bool:
        b = self.best_objective
        return all(b[k + 1] <= b[k] for k in range(len(b) - 1))


def write_trace_csv(trace: ConvergenceTrace, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "best_objective", "evaluations"])
        for k, (f, n) in enumerate(zip(trace.best_objective, trace.evaluations), 1):
            w.writerow([k, repr(float(f)), n])
    return path


def read_trace_csv(path: str | Path) -> ConvergenceTrace:
    trace = ConvergenceTrace()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            trace.best_objective.append(float(row["best_objective"]))
            trace.evaluations.append(int(row["evaluations"]))
    return trace


def evaluate_batch(objective, X: np.ndarray) -> np.ndarray:
    """Evaluate rows of ``X``, using ``objective.many`` when it exists."""
    many = getattr(objective, "many", None)
    if many is not None:
        return np.asarray(many(X), dtype=float)
    return np.array([float(objective(x)) for x in X])
