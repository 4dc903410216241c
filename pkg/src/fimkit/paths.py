"""Trajectory and ensemble containers shared by the generators and estimators."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import DomainError, TimeGrid


class IntegrationError(ArithmeticError):
    """A path integrator produced a non-finite value."""

    def __init__(self, step: int):
        super().__init__(f"non-finite position after step {step}")
        self.step = step


class Model(enum.Enum):
    FBM = "fbm"
    FIM = "fim"
    DLP_MAPPED = "dlp-mapped"


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: TimeGrid
    positions: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        if x.shape != (len(self.grid),):
            raise DomainError("positions must match the grid length")
        if x[0] != 0.0:
            raise DomainError("trajectories start at the origin")
        object.__setattr__(self, "positions", x)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Paths stored row-wise: ``paths[i, k]`` is path i at ``grid.times[k]``."""

    model: Model
    h: float
    grid: TimeGrid
    paths: np.ndarray
    seed: int

    def __post_init__(self):
        x = np.asarray(self.paths, dtype=float)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] != len(self.grid):
            raise DomainError("ensemble needs >= 1 path on the shared grid")
        object.__setattr__(self, "paths", x)

    def __len__(self):
        return self.paths.shape[0]

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(self.grid, self.paths[i])

    def at(self, t: float) -> np.ndarray:
        """Column of positions at grid time ``t`` (nearest node, must match to 1e-9)."""
        k = int(np.argmin(np.abs(self.grid.times - t)))
        if abs(self.grid.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"time {t} is not a grid node")
        return self.paths[:, k]
