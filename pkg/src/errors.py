"""Exception hierarchy for opinion_lab."""

from dataclasses import dataclass
from typing import Optional


class OpinionLabError(Exception):
    """Root of every error raised by the package."""


class ConfigError(OpinionLabError, ValueError):
    """Invalid configuration or distribution spec."""

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class ValidationIssue:
    """One violated scenario rule."""

    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.path}: {self.message}"


class ScenarioValidationError(ConfigError):
    """Scenario failed validation; carries every issue found."""

    def __init__(self, issues: list[ValidationIssue]):
        self.issues = issues
        summary = "; ".join(str(issue) for issue in issues)
        super().__init__(f"scenario is invalid: {summary}", code="scenario-invalid")

    @property
    def codes(self) -> list[str]:
        return [issue.code for issue in self.issues]


class CatalogueError(ConfigError):
    """Unknown preset name."""

    def __init__(self, name: str, valid: list[str]):
        self.valid = valid
        super().__init__(
            f"unknown preset '{name}'. Valid presets: {', '.join(valid)}",
            code="unknown-preset",
        )


class InvalidDistributionError(OpinionLabError, ValueError):
    """Empty or malformed sample set."""


class ShapeError(OpinionLabError, ValueError):
    """Grids with mismatched cell counts."""


class SimulationError(OpinionLabError, ArithmeticError):
    """Runtime numeric failure inside an engine."""


class DegenerateNeighborhoodError(SimulationError):
    """An agent's normalization constant Z vanished."""

    def __init__(self, agent: int, step: int):
        self.agent = agent
        self.step = step
        super().__init__(f"agent {agent} has an empty weighted neighborhood at step {step}")


class DegenerateDenominatorError(SimulationError):
    """The mean-field denominator psi vanished where mass is present."""

    def __init__(self, population: str, position: float):
        self.population = population
        self.position = position
        super().__init__(
            f"population '{population}' has a degenerate denominator at x={position!r}"
        )


class StepSizeError(SimulationError):
    """Time step violates the CFL bound."""

    def __init__(self, dt: float, bound: float):
        self.dt = dt
        self.bound = bound
        super().__init__(f"dt={dt!r} exceeds the CFL bound {bound!r}")


class MassConservationError(SimulationError):
    """A density lost or gained mass beyond tolerance."""

    def __init__(self, population: str, drift: float):
        self.population = population
        self.drift = drift
        super().__init__(f"population '{population}' mass drifted by {drift!r}")


class ComparisonError(OpinionLabError):
    """Two runs cannot be compared."""
