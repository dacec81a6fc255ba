"""Pipeline for running a scenario end-to-end."""

import time
from pathlib import Path
from typing import Optional, Union

from loguru import logger

from src import __version__
from src.models.results import RunManifest
from src.models.scenario import ScenarioConfig
from src.services.output_service import OutputFormat, OutputService


class SimulationPipeline:
    """Pipeline for running a scenario end-to-end: engine -> output files -> manifest."""

    def __init__(self, threads: Optional[int] = None):
        """Initialize pipeline services."""
        # Lazy imports to avoid circular dependencies
        self.threads = threads
        self._scenario_service = None
        self._micro_engine = None
        self._meanfield_engine = None

    @property
    def scenario_service(self):
        """Get scenario service lazily."""
        if self._scenario_service is None:
            from src.services.scenario_service import ScenarioService
            self._scenario_service = ScenarioService()
        return self._scenario_service

    @property
    def micro_engine(self):
        """Get micro engine lazily."""
        if self._micro_engine is None:
            from src.services.micro_engine_service import MicroEngineService
            self._micro_engine = MicroEngineService(self.threads)
        return self._micro_engine

    @property
    def meanfield_engine(self):
        """Get mean-field engine lazily."""
        if self._meanfield_engine is None:
            from src.services.meanfield_service import MeanFieldService
            self._meanfield_engine = MeanFieldService(self.threads)
        return self._meanfield_engine

    def resolve(
        self,
        scenario: Optional[Union[str, Path]] = None,
        preset: Optional[str] = None,
        seed: Optional[int] = None,
    ) -> ScenarioConfig:
        """Load a scenario file or a preset, validated, with an optional seed override."""
        if preset is not None:
            config = self.scenario_service.preset(preset)
        else:
            config = self.scenario_service.load(scenario)
        if seed is not None:
            config = config.model_copy(update={"seed": seed})
        return config

    def run(
        self,
        config: ScenarioConfig,
        out_dir: Union[str, Path],
        fmt: Optional[OutputFormat] = None,
    ) -> RunManifest:
        """
        Run the scenario's engine and write every output.

        Returns the manifest, which is written last.
        """
        writer = OutputService(out_dir, fmt)
        started = time.perf_counter()
        outputs: dict[str, str] = {}

        if config.engine == "meanfield":
            result = self.meanfield_engine.run_meanfield(config)
            outputs["density"] = writer.write_densities(result).name
            outputs["distances"] = writer.write_distances(result.distances).name
        else:
            result = self.micro_engine.run(config)
            outputs["trajectory"] = writer.write_trajectory(result.trajectory).name
            outputs["distances"] = writer.write_distances(result.distances).name
            if result.histogram is not None:
                outputs["density"] = writer.write_histogram(result.histogram).name

        manifest = RunManifest(
            scenario_name=config.name,
            scenario_hash=writer.scenario_hash(config),
            seed=config.seed,
            engine=config.engine,
            engine_version=__version__,
            wall_time=time.perf_counter() - started,
            trials=config.trials,
            format=writer.fmt,
            groups=config.population_names,
            outputs=outputs,
        )
        writer.write_manifest(manifest)
        logger.info(f"Run of '{config.name}' written to {writer.out_dir}")
        return manifest
