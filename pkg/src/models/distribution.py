"""Opinion distribution models: empirical samples, grid densities and initial laws."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy import stats

from src.errors import InvalidDistributionError

DOMAIN = (-1.0, 1.0)
MASS_TOLERANCE = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Uniform mixture of Dirac masses at sorted opinion samples in [-1, 1]."""

    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidDistributionError("empirical distribution needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise InvalidDistributionError("samples must be finite")
        if samples.size > 1 and np.any(np.diff(samples) < 0):
            raise InvalidDistributionError("samples must be sorted ascending")
        if samples[0] < DOMAIN[0] or samples[-1] > DOMAIN[1]:
            raise InvalidDistributionError("samples must lie in [-1, 1]")
        object.__setattr__(self, "samples", _frozen(samples.copy()))

    @classmethod
    def from_values(cls, values) -> EmpiricalDistribution:
        """Build from unsorted opinions."""
        return cls(np.sort(np.asarray(values, dtype=float)))

    @property
    def size(self) -> int:
        return int(self.samples.size)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Piecewise-constant density on a uniform mesh over [-1, 1]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise InvalidDistributionError("grid density needs at least one cell")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidDistributionError("grid density values must be finite and nonnegative")
        dx = (DOMAIN[1] - DOMAIN[0]) / values.size
        mass = float(np.sum(values) * dx)
        if abs(mass - 1.0) > MASS_TOLERANCE:
            raise InvalidDistributionError(f"grid density mass is {mass!r}, expected 1")
        object.__setattr__(self, "values", _frozen(values.copy()))

    @property
    def n_cells(self) -> int:
        return int(self.values.size)

    @property
    def dx(self) -> float:
        return (DOMAIN[1] - DOMAIN[0]) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(DOMAIN[0], DOMAIN[1], self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return DOMAIN[0] + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def masses(self) -> np.ndarray:
        return self.values * self.dx

    @property
    def mass(self) -> float:
        return float(np.sum(self.values) * self.dx)

    @property
    def mean(self) -> float:
        return float(np.sum(self.masses * self.centers))

    def cdf_edges(self) -> np.ndarray:
        """CDF at the n_cells + 1 cell edges (piecewise linear in between)."""
        return np.concatenate(([0.0], np.cumsum(self.masses)))

    @classmethod
    def from_masses(cls, masses: np.ndarray) -> GridDensity:
        masses = np.asarray(masses, dtype=float)
        dx = (DOMAIN[1] - DOMAIN[0]) / masses.size
        return cls(masses / dx)

    @classmethod
    def uniform(cls, n_cells: int) -> GridDensity:
        return cls(np.full(n_cells, 0.5))

    @classmethod
    def one_hot(cls, n_cells: int, cell: int) -> GridDensity:
        masses = np.zeros(n_cells)
        masses[cell] = 1.0
        return cls.from_masses(masses)

    @classmethod
    def from_spec(cls, spec: InitialDistributionSpec, n_cells: int) -> GridDensity:
        """Exact cell masses of an initial law."""
        edges = np.linspace(DOMAIN[0], DOMAIN[1], n_cells + 1)
        cdf = np.concatenate(([0.0], spec.cdf(edges[1:-1]), [1.0]))
        masses = np.maximum(np.diff(cdf), 0.0)
        return cls.from_masses(masses / np.sum(masses))


class UniformSpec(BaseModel):
    """Uniform law on [a, b]."""

    kind: Literal["uniform"] = "uniform"
    a: float = Field(default=-1.0, ge=-1.0, le=1.0)
    b: float = Field(default=1.0, ge=-1.0, le=1.0)

    def problems(self) -> list[str]:
        return [] if self.a < self.b else [f"uniform needs a < b, got a={self.a}, b={self.b}"]

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)


class TruncatedGaussianSpec(BaseModel):
    """Gaussian law restricted to [lo, hi]."""

    kind: Literal["truncated_gaussian"] = "truncated_gaussian"
    mean: float = Field(ge=-1.0, le=1.0)
    std: float
    lo: float = Field(default=-1.0, ge=-1.0, le=1.0)
    hi: float = Field(default=1.0, ge=-1.0, le=1.0)

    def problems(self) -> list[str]:
        issues = []
        if self.std <= 0:
            issues.append(f"truncated_gaussian needs std > 0, got {self.std}")
        if self.lo >= self.hi:
            issues.append(f"truncated_gaussian needs lo < hi, got lo={self.lo}, hi={self.hi}")
        return issues

    def frozen_law(self):
        return stats.truncnorm(
            (self.lo - self.mean) / self.std,
            (self.hi - self.mean) / self.std,
            loc=self.mean,
            scale=self.std,
        )

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return self.frozen_law().cdf(np.asarray(x, dtype=float))


class DiracSpec(BaseModel):
    """Point mass at x."""

    kind: Literal["dirac"] = "dirac"
    x: float = Field(ge=-1.0, le=1.0)

    def problems(self) -> list[str]:
        return []

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) >= self.x).astype(float)


class MixtureComponent(BaseModel):
    weight: float
    spec: InitialDistributionSpec


class MixtureSpec(BaseModel):
    """Weighted mixture of other initial laws."""

    kind: Literal["mixture"] = "mixture"
    components: list[MixtureComponent]

    def problems(self) -> list[str]:
        issues = []
        if not self.components:
            issues.append("mixture needs at least one component")
        weights = [c.weight for c in self.components]
        if any(w <= 0 for w in weights):
            issues.append("mixture weights must be positive")
        if weights and abs(sum(weights) - 1.0) > 1e-12:
            issues.append(f"mixture weights must sum to 1, got {sum(weights)!r}")
        for component in self.components:
            issues.extend(component.spec.problems())
        return issues

    def cdf(self, x: np.ndarray) -> np.ndarray:
        total = np.zeros_like(np.asarray(x, dtype=float))
        for component in self.components:
            total = total + component.weight * component.spec.cdf(x)
        return total


InitialDistributionSpec = Annotated[
    Union[UniformSpec, TruncatedGaussianSpec, DiracSpec, MixtureSpec],
    Field(discriminator="kind"),
]

MixtureComponent.model_rebuild()
MixtureSpec.model_rebuild()
