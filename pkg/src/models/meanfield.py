"""Mean-field populations, systems and velocity fields."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from src.models.agent import PartitionMode
from src.models.distribution import GridDensity
from src.models.kernel import LocalKernelSpec, PopulationKernelSpec


@dataclass(frozen=True, eq=False)
class MeanFieldPopulation:
    """Density of one sub-population together with its representative-agent parameters."""

    name: str
    density: GridDensity
    mass_fraction: float  # lambda_k
    alpha: float
    epsilon: float
    sigma: Optional[float]
    kernel: LocalKernelSpec

    def with_density(self, density: GridDensity) -> MeanFieldPopulation:
        return replace(self, density=density)


@dataclass(frozen=True, eq=False)
class MeanFieldSystem:
    """Coupled populations plus the population kernel that links them."""

    populations: tuple[MeanFieldPopulation, ...]
    kernel: PopulationKernelSpec
    pair_kernels: dict[tuple[int, int], PopulationKernelSpec] = field(default_factory=dict)
    mode: PartitionMode = "live"
    partition: str = "populations"

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.populations)

    @property
    def n_cells(self) -> int:
        return self.populations[0].density.n_cells

    def kernel_for(self, receiver: int, source: int) -> PopulationKernelSpec:
        return self.pair_kernels.get((receiver, source), self.kernel)

    def with_populations(self, populations) -> MeanFieldSystem:
        return replace(self, populations=tuple(populations))


@dataclass(frozen=True, eq=False)
class VelocityField:
    """Velocities at the n_cells + 1 cell edges; both boundary edges are zero."""

    population: str
    values: np.ndarray

    @property
    def max_speed(self) -> float:
        return float(np.max(np.abs(self.values)))

    def outflow_rates(self) -> np.ndarray:
        """Rate at which each cell empties: positive right-edge plus negative left-edge speed."""
        return np.maximum(self.values[1:], 0.0) - np.minimum(self.values[:-1], 0.0)
