"""Service for opinion distributions and 1-Wasserstein distances."""

from typing import Union

import numpy as np
from scipy import stats

from src.errors import ConfigError, InvalidDistributionError, ShapeError
from src.models.distribution import (
    DiracSpec,
    EmpiricalDistribution,
    GridDensity,
    InitialDistributionSpec,
    MixtureSpec,
    TruncatedGaussianSpec,
    UniformSpec,
)

SampleLike = Union[EmpiricalDistribution, np.ndarray, list[float], tuple[float, ...]]

# Truncation windows below this probability are treated as degenerate
MIN_ACCEPTANCE = 1e-9


def _abs_linear_integral(left: np.ndarray, right: np.ndarray, width: np.ndarray) -> float:
    """Exact integral of |D| where D is linear from `left` to `right` over `width`."""
    abs_left = np.abs(left)
    abs_right = np.abs(right)
    same_sign = left * right >= 0
    denominator = np.where(same_sign, 1.0, abs_left + abs_right)
    crossing = (left * left + right * right) / (2.0 * denominator)
    piece = np.where(same_sign, 0.5 * (abs_left + abs_right), crossing)
    return float(np.sum(piece * width))


class DistributionService:
    """Service for empirical and grid distributions on [-1, 1]."""

    def as_empirical(self, samples: SampleLike) -> EmpiricalDistribution:
        """Coerce raw samples into a sorted empirical distribution."""
        if isinstance(samples, EmpiricalDistribution):
            return samples
        values = np.asarray(samples, dtype=float).ravel()
        if values.size == 0:
            raise InvalidDistributionError("empirical distribution needs at least one sample")
        return EmpiricalDistribution.from_values(values)

    def w1_empirical(self, a: SampleLike, b: SampleLike) -> float:
        """
        Exact 1-Wasserstein distance between two empirical distributions.

        Equal sizes use the sorted-sample formula (1/n) sum |a_i - b_i|;
        otherwise the step CDFs are integrated over the merged breakpoints.
        """
        a = self.as_empirical(a)
        b = self.as_empirical(b)
        if a.size == b.size:
            return float(np.mean(np.abs(a.samples - b.samples)))
        return self.w1_cdf(a, b)

    def w1_cdf(self, a: SampleLike, b: SampleLike) -> float:
        """General CDF-integration path (no equal-size shortcut)."""
        a = self.as_empirical(a)
        b = self.as_empirical(b)
        return float(stats.wasserstein_distance(a.samples, b.samples))

    def w1_grid(self, f: GridDensity, g: GridDensity) -> float:
        """Exact W1 between two piecewise-constant densities on the same mesh."""
        if f.n_cells != g.n_cells:
            raise ShapeError(f"grids differ: {f.n_cells} vs {g.n_cells} cells")
        difference = f.cdf_edges() - g.cdf_edges()
        widths = np.full(f.n_cells, f.dx)
        return _abs_linear_integral(difference[:-1], difference[1:], widths)

    def w1_mixed(self, d: SampleLike, g: GridDensity) -> float:
        """Exact W1 between an empirical distribution and a grid density."""
        d = self.as_empirical(d)
        edges = g.edges
        points = np.unique(np.concatenate((edges, d.samples)))
        grid_cdf = np.interp(points, edges, g.cdf_edges())
        empirical_cdf = np.searchsorted(d.samples, points[:-1], side="right") / d.size
        return _abs_linear_integral(
            grid_cdf[:-1] - empirical_cdf,
            grid_cdf[1:] - empirical_cdf,
            np.diff(points),
        )

    def cdf_eval(self, d: SampleLike, y: float) -> float:
        """Fraction of samples less than or equal to y."""
        d = self.as_empirical(d)
        return float(np.searchsorted(d.samples, y, side="right") / d.size)

    def dispersion(self, d: SampleLike) -> float:
        """W1 between d and a point mass at its mean (mean absolute deviation)."""
        d = self.as_empirical(d)
        return float(np.mean(np.abs(d.samples - d.mean)))

    def sample_initial(
        self, spec: InitialDistributionSpec, n: int, seed: int
    ) -> EmpiricalDistribution:
        """
        Draw n independent opinions from an initial law, then sort.

        Args:
            spec: Initial law
            n: Number of samples (at least one)
            seed: Seed of the numpy generator; equal inputs give equal samples

        Returns:
            Sorted empirical distribution
        """
        if n < 1:
            raise ConfigError(f"sample count must be positive, got {n}", code="population-size")
        problems = spec.problems()
        if problems:
            raise ConfigError("; ".join(problems), code="distribution-spec")
        rng = np.random.default_rng(seed)
        values = self._draw(spec, n, rng)
        return EmpiricalDistribution.from_values(np.clip(values, -1.0, 1.0))

    def quantile_sample(
        self, spec: InitialDistributionSpec, n: int, resolution: int = 1 << 16
    ) -> EmpiricalDistribution:
        """
        Deterministic n-point sample at the midpoint quantiles (k + 1/2) / n.

        The law's CDF is inverted by interpolation on a fine mesh.
        """
        if n < 1:
            raise ConfigError(f"sample count must be positive, got {n}", code="population-size")
        problems = spec.problems()
        if problems:
            raise ConfigError("; ".join(problems), code="distribution-spec")
        mesh = np.linspace(-1.0, 1.0, resolution + 1)
        cdf = np.maximum.accumulate(np.clip(spec.cdf(mesh), 0.0, 1.0))
        levels = (np.arange(n) + 0.5) / n
        # leftmost mesh point reaching each level, refined linearly inside its interval
        upper = np.clip(np.searchsorted(cdf, levels, side="left"), 1, resolution)
        lower = upper - 1
        span = cdf[upper] - cdf[lower]
        fraction = np.where(span > 0, (levels - cdf[lower]) / np.where(span > 0, span, 1.0), 0.0)
        values = mesh[lower] + np.clip(fraction, 0.0, 1.0) * (mesh[upper] - mesh[lower])
        return EmpiricalDistribution.from_values(np.clip(values, -1.0, 1.0))

    def sample_grid(self, g: GridDensity, n: int, seed: int) -> EmpiricalDistribution:
        """Inverse-CDF sampling of a grid density."""
        rng = np.random.default_rng(seed)
        u = rng.uniform(0.0, 1.0, n)
        values = np.interp(u, g.cdf_edges(), g.edges)
        return EmpiricalDistribution.from_values(np.clip(values, -1.0, 1.0))

    def grid_from_spec(self, spec: InitialDistributionSpec, n_cells: int) -> GridDensity:
        problems = spec.problems()
        if problems:
            raise ConfigError("; ".join(problems), code="distribution-spec")
        return GridDensity.from_spec(spec, n_cells)

    def _draw(self, spec: InitialDistributionSpec, n: int, rng: np.random.Generator) -> np.ndarray:
        match spec:
            case UniformSpec():
                return rng.uniform(spec.a, spec.b, n)
            case DiracSpec():
                return np.full(n, spec.x)
            case TruncatedGaussianSpec():
                return self._draw_truncated(spec, n, rng)
            case MixtureSpec():
                counts = rng.multinomial(n, [c.weight for c in spec.components])
                parts = [
                    self._draw(c.spec, int(count), rng)
                    for c, count in zip(spec.components, counts)
                    if count > 0
                ]
                return np.concatenate(parts)
        raise ConfigError(f"unsupported distribution kind: {spec!r}", code="distribution-spec")

    def _draw_truncated(
        self, spec: TruncatedGaussianSpec, n: int, rng: np.random.Generator
    ) -> np.ndarray:
        """Rejection sampling from the untruncated Gaussian."""
        acceptance = stats.norm.cdf(spec.hi, spec.mean, spec.std) - stats.norm.cdf(
            spec.lo, spec.mean, spec.std
        )
        if acceptance < MIN_ACCEPTANCE:
            raise ConfigError(
                "truncation window carries negligible Gaussian mass", code="distribution-spec"
            )
        accepted: list[np.ndarray] = []
        missing = n
        while missing > 0:
            batch = int(np.ceil(missing / acceptance * 1.1)) + 16
            draws = rng.normal(spec.mean, spec.std, batch)
            keep = draws[(draws >= spec.lo) & (draws <= spec.hi)][:missing]
            accepted.append(keep)
            missing -= keep.size
        return np.concatenate(accepted)
