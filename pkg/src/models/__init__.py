"""Models package for opinion_lab."""

from src.models.agent import AgentState, AgentStates, GroupWeightMatrix, Partition, PartitionSet
from src.models.distribution import (
    DiracSpec,
    EmpiricalDistribution,
    GridDensity,
    InitialDistributionSpec,
    MixtureComponent,
    MixtureSpec,
    TruncatedGaussianSpec,
    UniformSpec,
)
from src.models.kernel import (
    DecaySchedule,
    GammaFunction,
    GroupPair,
    LocalKernelSpec,
    PopulationKernelSpec,
)
from src.models.meanfield import MeanFieldPopulation, MeanFieldSystem, VelocityField
from src.models.results import (
    ComparisonReport,
    ComparisonRow,
    DensityHistogram,
    DistanceRecord,
    MeanFieldResult,
    MicroRunResult,
    OracleResult,
    RunManifest,
    Trajectory,
)
from src.models.scenario import (
    GridConfig,
    IntegratorConfig,
    PairKernelConfig,
    PartitionConfig,
    PopulationConfig,
    ScenarioConfig,
)

__all__ = [
    "AgentState",
    "AgentStates",
    "ComparisonReport",
    "ComparisonRow",
    "DecaySchedule",
    "DensityHistogram",
    "DiracSpec",
    "DistanceRecord",
    "EmpiricalDistribution",
    "GammaFunction",
    "GridConfig",
    "GridDensity",
    "GroupPair",
    "GroupWeightMatrix",
    "InitialDistributionSpec",
    "IntegratorConfig",
    "LocalKernelSpec",
    "MeanFieldPopulation",
    "MeanFieldResult",
    "MeanFieldSystem",
    "MicroRunResult",
    "MixtureComponent",
    "MixtureSpec",
    "OracleResult",
    "PairKernelConfig",
    "Partition",
    "PartitionConfig",
    "PartitionSet",
    "PopulationConfig",
    "PopulationKernelSpec",
    "RunManifest",
    "ScenarioConfig",
    "Trajectory",
    "TruncatedGaussianSpec",
    "UniformSpec",
    "VelocityField",
]
