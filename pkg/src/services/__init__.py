"""Services package for opinion_lab."""

from src.services.compare_service import CompareService
from src.services.distribution_service import DistributionService
from src.services.kernel_service import KernelService
from src.services.meanfield_service import MeanFieldService
from src.services.micro_engine_service import MicroEngineService
from src.services.output_service import OutputService
from src.services.pipeline import SimulationPipeline
from src.services.scenario_service import ScenarioService

__all__ = [
    "CompareService",
    "DistributionService",
    "KernelService",
    "MeanFieldService",
    "MicroEngineService",
    "OutputService",
    "ScenarioService",
    "SimulationPipeline",
]
