"""Agent states, group partitions and per-step group weight matrices."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, Optional

import numpy as np

from src.models.kernel import PopulationKernelSpec

PartitionMode = Literal["frozen", "live"]
Provenance = Literal["frozen-at-t0", "recomputed-at-step"]


@dataclass(frozen=True)
class AgentState:
    """Single agent view, mainly for reporting and tests."""

    opinion: float
    stubbornness: float
    confidence: float
    pop_threshold: Optional[float]
    scope: Optional[float]  # None means unbounded
    groups: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class AgentStates:
    """Struct-of-arrays snapshot of every agent."""

    opinions: np.ndarray
    stubbornness: np.ndarray
    confidence: np.ndarray
    pop_threshold: np.ndarray  # NaN where the kernel sigma applies
    scope: np.ndarray  # inf where unbounded
    population: np.ndarray
    groups: np.ndarray  # (N, number of partitions)
    population_names: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return int(self.opinions.size)

    @property
    def scoped(self) -> bool:
        return bool(np.any(np.isfinite(self.scope)))

    def with_opinions(self, opinions: np.ndarray) -> AgentStates:
        return replace(self, opinions=opinions)

    def agent(self, i: int) -> AgentState:
        sigma = float(self.pop_threshold[i])
        scope = float(self.scope[i])
        return AgentState(
            opinion=float(self.opinions[i]),
            stubbornness=float(self.stubbornness[i]),
            confidence=float(self.confidence[i]),
            pop_threshold=None if np.isnan(sigma) else sigma,
            scope=None if np.isinf(scope) else scope,
            groups=tuple(int(g) for g in self.groups[i]),
        )


@dataclass(frozen=True)
class Partition:
    """One group affiliation: a disjoint cover of the agents."""

    name: str
    group_names: tuple[str, ...]
    membership: np.ndarray  # (N,) group index per agent
    mode: PartitionMode
    weight: float
    kernel: PopulationKernelSpec
    pair_kernels: dict[tuple[int, int], PopulationKernelSpec] = field(default_factory=dict)

    @property
    def n_groups(self) -> int:
        return len(self.group_names)

    def kernel_for(self, receiver: int, source: int) -> PopulationKernelSpec:
        return self.pair_kernels.get((receiver, source), self.kernel)

    def members(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.membership == group)


@dataclass(frozen=True)
class PartitionSet:
    """All partitions of the population with their mixing weights gamma_r."""

    partitions: tuple[Partition, ...]

    @property
    def weights(self) -> np.ndarray:
        return np.array([p.weight for p in self.partitions])

    def __iter__(self):
        return iter(self.partitions)

    def __len__(self) -> int:
        return len(self.partitions)


@dataclass(frozen=True, eq=False)
class GroupWeightMatrix:
    """Population kernel values for one partition at one step."""

    partition: str
    group_names: tuple[str, ...]
    group_distances: np.ndarray  # (G, G) global pairwise W1
    agent_distances: np.ndarray  # (N, G) W1 seen by each agent (scope-restricted when scoped)
    agent_weights: np.ndarray  # (N, G) weight agent i gives to members of group q
    membership: np.ndarray
    provenance: Provenance

    @property
    def group_weights(self) -> np.ndarray:
        """K_kq as seen by the first member of each receiving group."""
        n_groups = len(self.group_names)
        matrix = np.zeros((n_groups, n_groups))
        for k in range(n_groups):
            members = np.flatnonzero(self.membership == k)
            if members.size:
                matrix[k] = self.agent_weights[members[0]]
        return matrix

    def pairwise(self) -> np.ndarray:
        """(N, N) weight of source j for receiver i."""
        return self.agent_weights[:, self.membership]
