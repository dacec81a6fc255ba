from typing import Any, Callable

import pytest

from src.models.scenario import ScenarioConfig
from src.services import (
    CompareService,
    DistributionService,
    KernelService,
    MeanFieldService,
    MicroEngineService,
    ScenarioService,
)


def population(
    name: str = "p1",
    size: int = 20,
    initial: dict[str, Any] | None = None,
    alpha: float = 0.5,
    epsilon: float = 0.5,
    **extra,
) -> dict[str, Any]:
    return {
        "name": name,
        "size": size,
        "initial": initial or {"kind": "uniform", "a": -1.0, "b": 1.0},
        "alpha": alpha,
        "epsilon": epsilon,
        **extra,
    }


def scenario_document(populations: list[dict[str, Any]] | None = None, **fields) -> dict[str, Any]:
    document = {
        "name": "test",
        "populations": populations or [population()],
        "integrator": {"method": "euler", "dt": 0.05, "T": 1.0, "save_every": 1},
    }
    document.update(fields)
    return document


@pytest.fixture
def distribution_service() -> DistributionService:
    return DistributionService()


@pytest.fixture
def kernel_service() -> KernelService:
    return KernelService()


@pytest.fixture
def micro_engine() -> MicroEngineService:
    return MicroEngineService(threads=1)


@pytest.fixture
def meanfield_service() -> MeanFieldService:
    return MeanFieldService(threads=1)


@pytest.fixture
def scenario_service() -> ScenarioService:
    return ScenarioService()


@pytest.fixture
def compare_service() -> CompareService:
    return CompareService()


@pytest.fixture
def build_scenario(scenario_service) -> Callable[..., ScenarioConfig]:
    """Validated config from population documents plus top-level overrides."""

    def build(populations: list[dict[str, Any]] | None = None, **fields) -> ScenarioConfig:
        document = scenario_document(populations, **fields)
        return scenario_service.validate(ScenarioConfig.model_validate(document))

    return build


@pytest.fixture
def make_population() -> Callable[..., dict[str, Any]]:
    return population
