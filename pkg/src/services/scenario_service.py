"""Service for reading, validating and exporting scenarios."""

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Union

import tomli_w
from loguru import logger
from pydantic import ValidationError

from src.config import settings
from src.errors import CatalogueError, ConfigError, ScenarioValidationError, ValidationIssue
from src.models.scenario import PartitionConfig, ScenarioConfig
from src.services.presets import CATALOGUE

# Tolerance on sum(lambda) = 1 and sum(gamma) = 1
SUM_TOLERANCE = 1e-12


class ScenarioService:
    """Service for scenario files, validation and the preset catalogue."""

    # ------------------------------------------------------------------
    # Parsing and serialization
    # ------------------------------------------------------------------

    def parse(self, document: Union[str, dict[str, Any]]) -> ScenarioConfig:
        """
        Parse a TOML document (or an already-decoded mapping) into a config.

        Raises:
            ScenarioValidationError: With code "schema" for malformed input
        """
        if isinstance(document, str):
            try:
                document = tomllib.loads(document)
            except tomllib.TOMLDecodeError as e:
                raise ScenarioValidationError([ValidationIssue("schema", "<document>", str(e))]) from e
        try:
            return ScenarioConfig.model_validate(document)
        except ValidationError as e:
            issues = [
                ValidationIssue("schema", ".".join(str(part) for part in error["loc"]) or "<root>", error["msg"])
                for error in e.errors()
            ]
            raise ScenarioValidationError(issues) from e

    def read(self, path: Union[str, Path]) -> ScenarioConfig:
        """Parse a scenario file without validating it."""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"scenario file not found: {path}", code="missing-file")
        return self.parse(path.read_text(encoding="utf-8"))

    def load(self, path: Union[str, Path]) -> ScenarioConfig:
        """Read and validate a scenario file."""
        config = self.validate(self.read(path))
        logger.info(f"Loaded scenario '{config.name}' from {Path(path).name}")
        return config

    def serialize(self, config: ScenarioConfig) -> str:
        return tomli_w.dumps(config.model_dump(mode="json", exclude_none=True))

    def write(self, config: ScenarioConfig, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.serialize(config), encoding="utf-8")
        return path

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def validate(self, config: ScenarioConfig) -> ScenarioConfig:
        """
        Check every scenario rule and fill in defaults.

        Returns:
            Normalized config (dt, save_every, n_cells, histogram bins and a
            default `populations` partition filled in)

        Raises:
            ScenarioValidationError: Listing every violated rule
        """
        issues = self.issues(config)
        if issues:
            raise ScenarioValidationError(issues)
        return self.normalize(config)

    def normalize(self, config: ScenarioConfig) -> ScenarioConfig:
        integrator = config.integrator.model_copy(
            update={
                "dt": config.integrator.dt if config.integrator.dt is not None else settings.default_dt,
                "save_every": config.integrator.save_every or settings.default_save_every,
            }
        )
        grid = config.grid.model_copy(update={"n_cells": config.grid.n_cells or settings.default_n_cells})
        partitions = config.partitions or [PartitionConfig(name="populations")]
        return config.model_copy(
            update={
                "integrator": integrator,
                "grid": grid,
                "partitions": partitions,
                "histogram_bins": config.histogram_bins or settings.default_histogram_bins,
            }
        )

    def issues(self, config: ScenarioConfig) -> list[ValidationIssue]:
        """Every rule violation in the config, in document order."""
        issues: list[ValidationIssue] = []
        issues.extend(self._population_issues(config))
        issues.extend(self._partition_issues(config))
        issues.extend(self._run_issues(config))
        return issues

    def _population_issues(self, config: ScenarioConfig) -> list[ValidationIssue]:
        issues = []
        add = lambda code, path, message: issues.append(ValidationIssue(code, path, message))

        if not config.populations:
            add("population-size", "populations", "at least one population is required")
        names = [p.name for p in config.populations]
        for name in sorted({n for n in names if names.count(n) > 1}):
            add("duplicate-name", "populations", f"population name '{name}' is used more than once")

        for k, pop in enumerate(config.populations):
            path = f"populations[{k}]"
            if pop.size is not None and pop.size < 1:
                add("population-size", f"{path}.size", f"size must be at least 1, got {pop.size}")
            elif pop.size is None and (config.engine == "micro" or pop.mass is None):
                add("population-size", f"{path}.size", "size is required")
            if pop.mass is not None and not 0.0 < pop.mass <= 1.0:
                add("mass-fraction-range", f"{path}.mass", f"mass must lie in (0, 1], got {pop.mass}")
            if pop.epsilon <= 0:
                add("confidence-positive", f"{path}.epsilon", f"epsilon must be positive, got {pop.epsilon}")
            if not 0.0 <= pop.alpha <= 1.0:
                add("stubbornness-range", f"{path}.alpha", f"alpha must lie in [0, 1], got {pop.alpha}")
            if pop.scope is not None and pop.scope < pop.epsilon:
                add(
                    "scope-below-confidence",
                    f"{path}.scope",
                    f"scope {pop.scope} is smaller than epsilon {pop.epsilon}",
                )
            if pop.sigma is not None and pop.sigma <= 0:
                add("threshold-sigma", f"{path}.sigma", f"sigma must be positive, got {pop.sigma}")
            for field in ("initial", "empirical"):
                spec = getattr(pop, field)
                for problem in spec.problems() if spec is not None else []:
                    add("distribution-spec", f"{path}.{field}", problem)

        masses = [p.mass for p in config.populations]
        declared = [m for m in masses if m is not None]
        if declared and len(declared) != len(masses):
            add("mass-fractions-sum", "populations", "declare mass for every population or for none")
        elif declared and abs(sum(declared) - 1.0) > SUM_TOLERANCE:
            add("mass-fractions-sum", "populations", f"mass fractions sum to {sum(declared)!r}, expected 1")
        return issues

    def _partition_issues(self, config: ScenarioConfig) -> list[ValidationIssue]:
        issues = []
        add = lambda code, path, message: issues.append(ValidationIssue(code, path, message))
        populations = set(config.population_names)
        every_sigma = all(p.sigma is not None for p in config.populations)

        names = [p.name for p in config.partitions]
        for name in sorted({n for n in names if names.count(n) > 1}):
            add("duplicate-name", "partitions", f"partition name '{name}' is used more than once")

        for r, partition in enumerate(config.partitions):
            path = f"partitions[{r}]"
            if partition.weight < 0:
                add("partition-weights-sum", f"{path}.weight", f"weight must be nonnegative, got {partition.weight}")
            if partition.kind == "explicit":
                for pop in sorted(set(partition.assignment) - populations):
                    add("unknown-population", f"{path}.assignment", f"unknown population '{pop}'")
                for pop in sorted(populations - set(partition.assignment)):
                    add("partition-cover", f"{path}.assignment", f"population '{pop}' has no group")
            if partition.kind == "opinion_cut":
                cuts = partition.cuts
                if not cuts or any(b <= a for a, b in zip(cuts, cuts[1:])) or any(not -1 < c < 1 for c in cuts):
                    add("cut-order", f"{path}.cuts", "cuts must be strictly ascending inside (-1, 1)")
                if len(partition.groups) != len(cuts) + 1:
                    add(
                        "partition-cover",
                        f"{path}.groups",
                        f"{len(cuts)} cut(s) need {len(cuts) + 1} group names, got {len(partition.groups)}",
                    )
                for group in sorted({g for g in partition.groups if partition.groups.count(g) > 1}):
                    add("duplicate-name", f"{path}.groups", f"group name '{group}' is used more than once")

            groups = set(partition.group_names(config.populations))
            kernels = [(f"{path}.kernel", partition.kernel)]
            for p, pair in enumerate(partition.pairs):
                for side in (pair.receiver, pair.source):
                    if side not in groups:
                        add("unknown-group", f"{path}.pairs[{p}]", f"unknown group '{side}'")
                kernels.append((f"{path}.pairs[{p}].kernel", pair.kernel))

            for kernel_path, kernel in kernels:
                if kernel.threshold_mode != "none" and kernel.sigma is None and not every_sigma:
                    add("threshold-sigma", kernel_path, f"threshold '{kernel.threshold_mode}' needs sigma")
                elif kernel.sigma is not None and kernel.sigma <= 0:
                    add("threshold-sigma", f"{kernel_path}.sigma", f"sigma must be positive, got {kernel.sigma}")
                if kernel.decay is not None and kernel.gamma != 0:
                    add("decay-schedule", kernel_path, "set either gamma or a decay schedule, not both")
                for pair in kernel.asymmetry_mask or []:
                    for side in (pair.receiver, pair.source):
                        if side not in groups:
                            add("unknown-group", f"{kernel_path}.asymmetry_mask", f"unknown group '{side}'")

        if config.partitions:
            total = sum(p.weight for p in config.partitions)
            if abs(total - 1.0) > SUM_TOLERANCE:
                add("partition-weights-sum", "partitions", f"partition weights sum to {total!r}, expected 1")

        if config.engine == "meanfield" and (
            len(config.partitions) > 1 or any(p.kind != "populations" for p in config.partitions)
        ):
            add("meanfield-partition", "partitions", "the mean-field engine takes one 'populations' partition")
        return issues

    def _run_issues(self, config: ScenarioConfig) -> list[ValidationIssue]:
        issues = []
        add = lambda code, path, message: issues.append(ValidationIssue(code, path, message))
        integrator = config.integrator
        if integrator.T <= 0:
            add("horizon-positive", "integrator.T", f"T must be positive, got {integrator.T}")
        if integrator.dt is not None and integrator.dt <= 0:
            add("step-positive", "integrator.dt", f"dt must be positive, got {integrator.dt}")
        if integrator.save_every is not None and integrator.save_every < 1:
            add("step-positive", "integrator.save_every", f"save_every must be at least 1, got {integrator.save_every}")
        if config.trials < 1:
            add("trials-positive", "trials", f"trials must be at least 1, got {config.trials}")
        if config.histogram_bins is not None and config.histogram_bins < 1:
            add("trials-positive", "histogram_bins", f"histogram_bins must be at least 1, got {config.histogram_bins}")
        if config.grid.n_cells is not None and config.grid.n_cells < 2:
            add("grid-cells", "grid.n_cells", f"n_cells must be at least 2, got {config.grid.n_cells}")
        return issues

    # ------------------------------------------------------------------
    # Presets
    # ------------------------------------------------------------------

    def preset_names(self) -> list[str]:
        """Base names of the catalogue."""
        return sorted(CATALOGUE)

    def variant_names(self) -> list[str]:
        return [f"{name}:{variant}" for name in sorted(CATALOGUE) for variant in CATALOGUE[name].variants]

    def preset(self, name: str) -> ScenarioConfig:
        """
        Build a named preset (`name` or `name:variant`), validated.

        Raises:
            CatalogueError: If the name or variant is unknown
        """
        base, _, variant = name.partition(":")
        entry = CATALOGUE.get(base)
        if entry is None:
            raise CatalogueError(name, self.preset_names())
        builder = entry.variants.get(variant or entry.default)
        if builder is None:
            raise CatalogueError(name, self.variant_names())
        return self.validate(ScenarioConfig.model_validate(builder()))
