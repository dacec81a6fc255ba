"""Declarative scenario schema."""

import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.models.distribution import InitialDistributionSpec
from src.models.kernel import LocalKernelSpec, PopulationKernelSpec


class PopulationConfig(BaseModel):
    """One sub-population: its law, size or mass fraction, and agent parameters."""

    model_config = ConfigDict(extra="forbid")

    name: str
    size: Optional[int] = None
    mass: Optional[float] = None  # lambda_k for the mean-field engine
    initial: InitialDistributionSpec
    # law the finite micro sample is drawn from, when it differs from the true law
    empirical: Optional[InitialDistributionSpec] = None
    alpha: float
    epsilon: float
    sigma: Optional[float] = None
    scope: Optional[float] = None
    stubborn: bool = False
    kernel: Optional[LocalKernelSpec] = None

    @property
    def effective_alpha(self) -> float:
        return 0.0 if self.stubborn else self.alpha

    @property
    def sample_spec(self):
        return self.empirical if self.empirical is not None else self.initial


class PairKernelConfig(BaseModel):
    """Kernel override for one (receiver, source) group pair."""

    model_config = ConfigDict(extra="forbid")

    receiver: str
    source: str
    kernel: PopulationKernelSpec
    symmetric: bool = True


class PartitionConfig(BaseModel):
    """One group affiliation with its population kernel and mixing weight."""

    model_config = ConfigDict(extra="forbid")

    name: str
    kind: Literal["populations", "explicit", "opinion_cut"] = "populations"
    mode: Literal["frozen", "live"] = "live"
    weight: float = 1.0
    kernel: PopulationKernelSpec = Field(default_factory=PopulationKernelSpec)
    pairs: list[PairKernelConfig] = Field(default_factory=list)
    # explicit: population name -> group name
    assignment: dict[str, str] = Field(default_factory=dict)
    # opinion_cut: ascending interior cut points and len(cuts) + 1 group names
    cuts: list[float] = Field(default_factory=list)
    groups: list[str] = Field(default_factory=list)

    def group_names(self, populations: list[PopulationConfig]) -> list[str]:
        if self.kind == "populations":
            return [p.name for p in populations]
        if self.kind == "explicit":
            return list(dict.fromkeys(self.assignment[p.name] for p in populations if p.name in self.assignment))
        return list(self.groups)


# horizons within this many steps of the dt grid are treated as on it
STEP_SLACK = 1e-9


class IntegratorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: Literal["euler", "rk4"] = "euler"
    dt: Optional[float] = None
    T: float
    save_every: Optional[int] = None

    @property
    def n_steps(self) -> int:
        """Steps needed to reach T; a horizon off the dt grid gets one shorter final step."""
        return max(1, math.ceil(self.T / self.dt - STEP_SLACK))

    def time_at(self, step: int) -> float:
        return self.T if step >= self.n_steps else step * self.dt

    def step_size(self, step: int) -> float:
        """Length of step `step` (1-based)."""
        if step < self.n_steps:
            return self.dt
        return self.T - (self.n_steps - 1) * self.dt


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_cells: Optional[int] = None


class ScenarioConfig(BaseModel):
    """Full description of one experiment."""

    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    description: str = ""
    engine: Literal["micro", "meanfield"] = "micro"
    populations: list[PopulationConfig]
    partitions: list[PartitionConfig] = Field(default_factory=list)
    local_kernel: LocalKernelSpec = Field(default_factory=LocalKernelSpec)
    integrator: IntegratorConfig
    grid: GridConfig = Field(default_factory=GridConfig)
    seed: int = 0
    trials: int = 1
    histogram_bins: Optional[int] = None

    @property
    def population_names(self) -> list[str]:
        return [p.name for p in self.populations]

    @property
    def total_size(self) -> int:
        return sum(p.size or 0 for p in self.populations)

    def kernel_for(self, population: PopulationConfig) -> LocalKernelSpec:
        return population.kernel if population.kernel is not None else self.local_kernel
