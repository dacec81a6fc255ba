"""Service for comparing two finished runs."""

from pathlib import Path
from typing import Union

from loguru import logger

from src.errors import ComparisonError, ShapeError
from src.models.distribution import EmpiricalDistribution, GridDensity
from src.models.results import ComparisonReport, ComparisonRow
from src.services.output_service import OutputService, Snapshot


class CompareService:
    """Per-step W1 between matching populations of two runs."""

    def __init__(self):
        """Initialize the comparer."""
        self._distribution_service = None

    @property
    def distribution_service(self):
        """Get distribution service lazily."""
        if self._distribution_service is None:
            from src.services.distribution_service import DistributionService
            self._distribution_service = DistributionService()
        return self._distribution_service

    def compare(self, run_a: Union[str, Path], run_b: Union[str, Path]) -> ComparisonReport:
        """
        Match populations by name and recorded steps by time.

        Raises:
            ComparisonError: If the population sets differ or no time is shared
        """
        snapshots_a = OutputService.read_snapshots(run_a)
        snapshots_b = OutputService.read_snapshots(run_b)
        if set(snapshots_a) != set(snapshots_b):
            raise ComparisonError(
                f"runs have different groups: {sorted(snapshots_a)} vs {sorted(snapshots_b)}"
            )

        rows = []
        for name in sorted(snapshots_a):
            series_a, series_b = snapshots_a[name], snapshots_b[name]
            for t in sorted(set(series_a) & set(series_b)):
                rows.append(ComparisonRow(t, name, self.distance(series_a[t], series_b[t])))
        if not rows:
            raise ComparisonError("runs share no recorded time")
        logger.info(f"Compared {len(rows)} snapshot pair(s)")
        return ComparisonReport(rows=rows)

    def distance(self, a: Snapshot, b: Snapshot) -> float:
        """W1 between two snapshots of any kind."""
        service = self.distribution_service
        if isinstance(a, EmpiricalDistribution) and isinstance(b, EmpiricalDistribution):
            return service.w1_empirical(a, b)
        if isinstance(a, GridDensity) and isinstance(b, GridDensity):
            try:
                return service.w1_grid(a, b)
            except ShapeError as e:
                raise ComparisonError(str(e)) from e
        if isinstance(a, GridDensity):
            a, b = b, a
        return service.w1_mixed(a, b)
