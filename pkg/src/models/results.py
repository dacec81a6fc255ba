"""Engine outputs and the run manifest."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from src.models.distribution import EmpiricalDistribution, GridDensity


@dataclass(frozen=True)
class DistanceRecord:
    """W1 between two groups of one partition at a recorded step."""

    step: int
    t: float
    partition: str
    group_a: str
    group_b: str
    w1: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Opinions of every agent at each recorded step."""

    steps: np.ndarray
    times: np.ndarray
    opinions: np.ndarray  # (recorded steps, N)
    population: np.ndarray
    groups: np.ndarray  # (N, partitions)
    population_names: tuple[str, ...]
    partition_names: tuple[str, ...]
    group_names: tuple[tuple[str, ...], ...]

    @property
    def final(self) -> np.ndarray:
        return self.opinions[-1]

    def population_samples(self, name: str, index: int = -1) -> EmpiricalDistribution:
        members = self.population == self.population_names.index(name)
        return EmpiricalDistribution.from_values(self.opinions[index, members])

    def group_samples(self, partition: str, group: str, index: int = -1) -> EmpiricalDistribution:
        r = self.partition_names.index(partition)
        members = self.groups[:, r] == self.group_names[r].index(group)
        return EmpiricalDistribution.from_values(self.opinions[index, members])


@dataclass(frozen=True, eq=False)
class DensityHistogram:
    """Trial-averaged opinion densities per population on a fixed bin grid."""

    steps: np.ndarray
    times: np.ndarray
    centers: np.ndarray
    densities: dict[str, np.ndarray]  # population -> (recorded steps, bins)
    trials: int


@dataclass(frozen=True)
class MicroRunResult:
    trajectory: Trajectory
    distances: list[DistanceRecord]
    histogram: Optional[DensityHistogram] = None


@dataclass(frozen=True)
class MeanFieldResult:
    steps: np.ndarray
    times: np.ndarray
    centers: np.ndarray
    densities: dict[str, list[GridDensity]]
    distances: list[DistanceRecord]
    boundary_outflow: float = 0.0

    def final(self, population: str) -> GridDensity:
        return self.densities[population][-1]


@dataclass(frozen=True)
class OracleResult:
    times: np.ndarray
    particles: dict[str, list[EmpiricalDistribution]] = field(default_factory=dict)

    def at(self, population: str, t: float) -> EmpiricalDistribution:
        index = int(np.argmin(np.abs(self.times - t)))
        return self.particles[population][index]


class RunManifest(BaseModel):
    """Metadata written atomically at the end of a run."""

    scenario_name: str
    scenario_hash: str
    seed: int
    engine: str
    engine_version: str
    wall_time: float
    trials: int = 1
    format: str = "csv"
    groups: list[str] = Field(default_factory=list)
    outputs: dict[str, str] = Field(default_factory=dict)


@dataclass(frozen=True)
class ComparisonRow:
    """W1 between the same population of two runs at one matched time."""

    t: float
    population: str
    w1: float


@dataclass(frozen=True)
class ComparisonReport:
    rows: list[ComparisonRow]

    @property
    def max_w1(self) -> float:
        return max((row.w1 for row in self.rows), default=0.0)

    def per_step_max(self) -> dict[float, float]:
        table: dict[float, float] = {}
        for row in self.rows:
            table[row.t] = max(table.get(row.t, 0.0), row.w1)
        return table
