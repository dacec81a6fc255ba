"""Service for writing run outputs and reading them back."""

import csv
import hashlib
import io
import json
import os
from collections import defaultdict
from pathlib import Path
from typing import Any, Iterable, Literal, Optional, Union

import numpy as np
from loguru import logger

from src.config import settings
from src.errors import ComparisonError
from src.models.distribution import EmpiricalDistribution, GridDensity
from src.models.results import (
    ComparisonReport,
    DensityHistogram,
    DistanceRecord,
    MeanFieldResult,
    RunManifest,
    Trajectory,
)
from src.models.scenario import ScenarioConfig

OutputFormat = Literal["csv", "json"]
MANIFEST_NAME = "manifest.json"

DISTANCE_COLUMNS = ["step", "t", "partition", "group_a", "group_b", "w1"]
DENSITY_COLUMNS = ["step", "t", "population", "cell_center", "density"]
COMPARISON_COLUMNS = ["t", "population", "w1"]
COMPARISON_MAX_COLUMNS = ["t", "max_w1"]
_FLOAT_COLUMNS = {"t", "w1", "max_w1", "opinion", "cell_center", "density"}

# One population's distribution at one recorded time, as read back from a run
Snapshot = Union[EmpiricalDistribution, GridDensity]


def _cell(value: Any) -> Any:
    """Shortest round-trip text for floats; everything else unchanged."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def _time_key(t: float) -> float:
    # Times written as s * dt by two engines can differ in the last bits
    return round(float(t), 9)


class OutputService:
    """Writes CSV/JSON records and the run manifest into one output directory."""

    def __init__(self, out_dir: Union[str, Path], fmt: Optional[OutputFormat] = None):
        """Initialize the writer."""
        self.out_dir = Path(out_dir)
        self.fmt: OutputFormat = fmt or settings.output_format

    # ------------------------------------------------------------------
    # Writing
    # ------------------------------------------------------------------

    def write_table(self, stem: str, columns: list[str], rows: Iterable[list[Any]]) -> Path:
        """Write records as CSV or as a JSON list of objects, atomically."""
        rows = [[_cell(v) for v in row] for row in rows]
        if self.fmt == "json":
            records = [
                {c: float(v) if c in _FLOAT_COLUMNS else v for c, v in zip(columns, row)}
                for row in rows
            ]
            text = json.dumps(records, indent=1) + "\n"
        else:
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows(rows)
            text = buffer.getvalue()
        return self._atomic_write(f"{stem}.{self.fmt}", text)

    def write_trajectory(self, trajectory: Trajectory) -> Path:
        columns = ["step", "t", "agent_id", "population", *trajectory.partition_names, "opinion"]
        populations = [trajectory.population_names[k] for k in trajectory.population]
        groups = [
            [trajectory.group_names[r][g] for r, g in enumerate(row)]
            for row in trajectory.groups
        ]
        rows = (
            [int(step), float(t), i, populations[i], *groups[i], float(x)]
            for step, t, opinions in zip(trajectory.steps, trajectory.times, trajectory.opinions)
            for i, x in enumerate(opinions)
        )
        return self.write_table("trajectory", columns, rows)

    def write_distances(self, records: list[DistanceRecord]) -> Path:
        rows = ([r.step, float(r.t), r.partition, r.group_a, r.group_b, float(r.w1)] for r in records)
        return self.write_table("distances", DISTANCE_COLUMNS, rows)

    def write_densities(self, result: MeanFieldResult) -> Path:
        rows = (
            [int(step), float(t), name, float(c), float(v)]
            for index, (step, t) in enumerate(zip(result.steps, result.times))
            for name, snapshots in result.densities.items()
            for c, v in zip(result.centers, snapshots[index].values)
        )
        return self.write_table("density", DENSITY_COLUMNS, rows)

    def write_histogram(self, histogram: DensityHistogram) -> Path:
        rows = (
            [int(step), float(t), name, float(c), float(v)]
            for index, (step, t) in enumerate(zip(histogram.steps, histogram.times))
            for name, densities in histogram.densities.items()
            for c, v in zip(histogram.centers, densities[index])
        )
        return self.write_table("density", DENSITY_COLUMNS, rows)

    def write_comparison(self, report: ComparisonReport) -> list[Path]:
        """Per-population table plus the maximum over populations at every matched time."""
        rows = ([float(r.t), r.population, float(r.w1)] for r in report.rows)
        maxima = ([float(t), float(w1)] for t, w1 in sorted(report.per_step_max().items()))
        return [
            self.write_table("compare", COMPARISON_COLUMNS, rows),
            self.write_table("compare_max", COMPARISON_MAX_COLUMNS, maxima),
        ]

    def write_manifest(self, manifest: RunManifest) -> Path:
        """Written last; its presence marks a complete run."""
        text = json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
        return self._atomic_write(MANIFEST_NAME, text)

    def _atomic_write(self, name: str, text: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        temporary = path.with_name(f".{name}.tmp")
        temporary.write_text(text, encoding="utf-8")
        os.replace(temporary, path)
        logger.debug(f"Wrote {path.name}")
        return path

    @staticmethod
    def scenario_hash(config: ScenarioConfig) -> str:
        """sha256 of the canonical (sorted, compact) JSON form of the config."""
        canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    # ------------------------------------------------------------------
    # Reading
    # ------------------------------------------------------------------

    @staticmethod
    def read_manifest(run_dir: Union[str, Path]) -> RunManifest:
        path = Path(run_dir) / MANIFEST_NAME
        if not path.is_file():
            raise ComparisonError(f"no manifest in {run_dir}")
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))

    @classmethod
    def read_snapshots(cls, run_dir: Union[str, Path]) -> dict[str, dict[float, Snapshot]]:
        """
        Per-population distributions of a finished run keyed by time.

        Micro runs are read from their trajectory (empirical samples);
        mean-field runs from their density snapshots (grid densities).
        """
        run_dir = Path(run_dir)
        manifest = cls.read_manifest(run_dir)
        outputs = manifest.outputs
        if "trajectory" in outputs:
            table = cls._read_table(run_dir / outputs["trajectory"], manifest.format)
            samples: dict[str, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
            for row in table:
                samples[row["population"]][_time_key(row["t"])].append(float(row["opinion"]))
            return {
                name: {t: EmpiricalDistribution.from_values(v) for t, v in series.items()}
                for name, series in samples.items()
            }
        if "density" in outputs:
            table = cls._read_table(run_dir / outputs["density"], manifest.format)
            values: dict[str, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
            for row in table:
                values[row["population"]][_time_key(row["t"])].append(float(row["density"]))
            return {
                name: {t: cls._grid(v) for t, v in series.items()}
                for name, series in values.items()
            }
        raise ComparisonError(f"run in {run_dir} has neither a trajectory nor density snapshots")

    @staticmethod
    def _grid(values: list[float]) -> GridDensity:
        masses = np.asarray(values) * (2.0 / len(values))
        return GridDensity.from_masses(masses / np.sum(masses))

    @staticmethod
    def _read_table(path: Path, fmt: str) -> list[dict[str, Any]]:
        if not path.is_file():
            raise ComparisonError(f"missing output file {path}")
        text = path.read_text(encoding="utf-8")
        if fmt == "json":
            return json.loads(text)
        return list(csv.DictReader(io.StringIO(text)))


