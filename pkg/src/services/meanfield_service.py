"""Service for the integrated (mean-field) engine and its particle oracle."""

from concurrent.futures import ThreadPoolExecutor
from typing import Literal, Optional

import numpy as np
from loguru import logger

from src.config import settings
from src.errors import (
    ConfigError,
    DegenerateDenominatorError,
    MassConservationError,
    StepSizeError,
)
from src.models.distribution import EmpiricalDistribution, GridDensity
from src.models.meanfield import MeanFieldPopulation, MeanFieldSystem, VelocityField
from src.models.results import DistanceRecord, MeanFieldResult, OracleResult
from src.models.scenario import PartitionConfig, ScenarioConfig
from src.services.micro_engine_service import derive_seed

MIN_ORACLE_PARTICLES = 1000


class MeanFieldService:
    """Finite-volume solver for the coupled continuity equations."""

    def __init__(self, threads: Optional[int] = None):
        """Initialize the solver."""
        self.threads = threads
        self._kernel_service = None
        self._distribution_service = None

    @property
    def kernel_service(self):
        """Get kernel service lazily."""
        if self._kernel_service is None:
            from src.services.kernel_service import KernelService
            self._kernel_service = KernelService()
        return self._kernel_service

    @property
    def distribution_service(self):
        """Get distribution service lazily."""
        if self._distribution_service is None:
            from src.services.distribution_service import DistributionService
            self._distribution_service = DistributionService()
        return self._distribution_service

    @property
    def worker_count(self) -> int:
        return max(1, self.threads) if self.threads is not None else settings.worker_count

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    def build_system(self, config: ScenarioConfig) -> MeanFieldSystem:
        """Discretize every population's true initial law on the grid."""
        partition = self._partition(config)
        n_cells = config.grid.n_cells or settings.default_n_cells
        fractions = self.mass_fractions(config)
        populations = tuple(
            MeanFieldPopulation(
                name=pop.name,
                density=self.distribution_service.grid_from_spec(pop.initial, n_cells),
                mass_fraction=fraction,
                alpha=pop.effective_alpha,
                epsilon=pop.epsilon,
                sigma=pop.sigma,
                kernel=config.kernel_for(pop),
            )
            for pop, fraction in zip(config.populations, fractions)
        )
        index = {name: k for k, name in enumerate(config.population_names)}
        pair_kernels = {}
        for pair in partition.pairs:
            k, q = index[pair.receiver], index[pair.source]
            pair_kernels[(k, q)] = pair.kernel
            if pair.symmetric:
                pair_kernels[(q, k)] = pair.kernel
        return MeanFieldSystem(
            populations=populations,
            kernel=partition.kernel,
            pair_kernels=pair_kernels,
            mode=partition.mode,
            partition=partition.name,
        )

    def mass_fractions(self, config: ScenarioConfig) -> list[float]:
        """Declared lambda_k, or size shares when masses are omitted."""
        if all(p.mass is not None for p in config.populations):
            return [float(p.mass) for p in config.populations]
        total = config.total_size
        if total <= 0:
            raise ConfigError("mean-field populations need a mass or a size", code="mass-fraction-range")
        return [p.size / total for p in config.populations]

    def _partition(self, config: ScenarioConfig) -> PartitionConfig:
        if not config.partitions:
            return PartitionConfig(name="populations")
        if len(config.partitions) != 1 or config.partitions[0].kind != "populations":
            raise ConfigError(
                "the mean-field engine takes exactly one partition of kind 'populations'",
                code="meanfield-partition",
            )
        return config.partitions[0]

    # ------------------------------------------------------------------
    # Velocity
    # ------------------------------------------------------------------

    def population_distances(self, system: MeanFieldSystem) -> np.ndarray:
        """Pairwise p_kr = W1(mu^k, mu^r) on the grid."""
        densities = [p.density for p in system.populations]
        n = len(densities)
        distances = np.zeros((n, n))
        for k in range(n):
            for r in range(k + 1, n):
                distances[k, r] = distances[r, k] = self.distribution_service.w1_grid(
                    densities[k], densities[r]
                )
        return distances

    def population_weights(
        self, system: MeanFieldSystem, t: float, distances: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """K_d(p_kr, sigma_k) for every (receiver, source) population pair."""
        if distances is None:
            distances = self.population_distances(system)
        n = len(system.populations)
        weights = np.zeros((n, n))
        for k, receiver in enumerate(system.populations):
            sigma = None if receiver.sigma is None else np.array([receiver.sigma])
            for r, source in enumerate(system.populations):
                spec = system.kernel_for(k, r)
                weights[k, r] = self.kernel_service.population_weights(
                    spec,
                    np.array([distances[k, r]]),
                    t,
                    k == r,
                    sigma,
                    spec.allows(receiver.name, source.name),
                )[0]
        return weights

    def velocity(
        self,
        x: float,
        system: MeanFieldSystem,
        k: int,
        t: float,
        weights: Optional[np.ndarray] = None,
    ) -> float:
        """
        Velocity of the representative agent of population k at opinion x.

        Integrals against each mu^r use the midpoint rule over cell centers.

        Raises:
            DegenerateDenominatorError: If psi(x) is at or below tolerance
        """
        if weights is None:
            weights = self.population_weights(system, t)
        numerator, denominator = self._moments(np.array([x]), system, k, weights)
        if denominator[0] <= settings.psi_tolerance:
            raise DegenerateDenominatorError(system.populations[k].name, float(x))
        return float(system.populations[k].alpha * numerator[0] / denominator[0])

    def velocity_field(
        self,
        system: MeanFieldSystem,
        k: int,
        t: float,
        weights: Optional[np.ndarray] = None,
    ) -> VelocityField:
        """Velocities of population k at every cell edge, zero at the domain boundary."""
        if weights is None:
            weights = self.population_weights(system, t)
        population = system.populations[k]
        edges = population.density.edges
        numerator, denominator = self._moments(edges[1:-1], system, k, weights)

        masses = population.density.masses
        degenerate = denominator <= settings.psi_tolerance
        # mass below the tolerance scale is rounding residue, not transportable mass
        carried = population.mass_fraction * np.maximum(masses[:-1], masses[1:])
        massive = carried > settings.psi_tolerance
        blocked = np.flatnonzero(degenerate & massive)
        if blocked.size:
            raise DegenerateDenominatorError(population.name, float(edges[1 + blocked[0]]))

        interior = np.zeros_like(numerator)
        safe = ~degenerate
        interior[safe] = population.alpha * numerator[safe] / denominator[safe]
        values = np.concatenate(([0.0], interior, [0.0]))
        return VelocityField(population=population.name, values=values)

    def _moments(
        self, x: np.ndarray, system: MeanFieldSystem, k: int, weights: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Weighted first moment about x and the normalizer psi at each point."""
        population = system.populations[k]
        centers = population.density.centers
        mixed = np.zeros_like(centers)
        for r, source in enumerate(system.populations):
            mixed = mixed + source.mass_fraction * weights[k, r] * source.density.masses
        local = self.kernel_service.local_matrix(
            population.kernel, x, centers, np.full(x.size, population.epsilon)
        )
        numerator = (local * (centers[None, :] - x[:, None])) @ mixed
        denominator = local @ mixed
        return numerator, denominator

    # ------------------------------------------------------------------
    # Transport
    # ------------------------------------------------------------------

    def step_bound(self, field: VelocityField, dx: float) -> float:
        """Largest dt keeping every cell's outflow within the CFL limit."""
        rate = float(np.max(field.outflow_rates()))
        return np.inf if rate <= 0 else settings.cfl_limit * dx / rate

    def upwind_step(
        self, population: MeanFieldPopulation, field: VelocityField, dt: float
    ) -> GridDensity:
        """
        One conservative first-order upwind update.

        Raises:
            StepSizeError: If dt exceeds the CFL bound
            MassConservationError: If the update drifts mass beyond tolerance
        """
        density = population.density
        bound = self.step_bound(field, density.dx)
        if dt > bound:
            raise StepSizeError(dt, bound)
        masses = self._transport(population.name, density.masses, field.values, dt, density.dx)
        return GridDensity.from_masses(masses)

    def _transport(
        self, name: str, masses: np.ndarray, velocities: np.ndarray, dt: float, dx: float
    ) -> np.ndarray:
        rho = masses / dx
        flux = np.zeros_like(velocities)
        flux[1:-1] = (
            np.maximum(velocities[1:-1], 0.0) * rho[:-1]
            + np.minimum(velocities[1:-1], 0.0) * rho[1:]
        )
        updated = np.maximum(masses - dt * (flux[1:] - flux[:-1]), 0.0)
        drift = abs(float(np.sum(updated) - np.sum(masses)))
        if drift > settings.mass_tolerance:
            raise MassConservationError(name, drift)
        return updated

    # ------------------------------------------------------------------
    # Runs
    # ------------------------------------------------------------------

    def run_meanfield(self, config: ScenarioConfig) -> MeanFieldResult:
        """
        Integrate the coupled continuity equations up to T.

        Each integrator step is split into CFL-limited sub-steps; distances
        p_kr and velocities are refreshed before every sub-step.

        Returns:
            Density snapshots at recorded steps and the pairwise W1 series
        """
        system = self.build_system(config)
        integrator = config.integrator
        save_every = integrator.save_every or 1
        n_steps = integrator.n_steps
        dx = system.populations[0].density.dx
        logger.info(f"Running mean-field scenario '{config.name}' on {system.n_cells} cells")

        frozen = self.population_distances(system) if system.mode == "frozen" else None
        masses = [p.density.masses.copy() for p in system.populations]
        snapshots = {name: [p.density] for name, p in zip(system.names, system.populations)}
        steps = [0]
        distances = self._distance_records(system, 0, 0.0)
        boundary_outflow = 0.0

        for s in range(1, n_steps + 1):
            t = integrator.time_at(s - 1)
            dt = integrator.step_size(s)
            remaining = dt
            substeps = 0
            while remaining > 0:
                weights = self.population_weights(system, t + dt - remaining, frozen)
                fields = self._fields(system, t + dt - remaining, weights)
                h = min([remaining] + [self.step_bound(f, dx) for f in fields])
                for k, f in enumerate(fields):
                    masses[k] = self._transport(system.names[k], masses[k], f.values, h, dx)
                    boundary_outflow += h * (abs(f.values[0]) + abs(f.values[-1]))
                system = self._with_masses(system, masses)
                remaining -= h
                substeps += 1
            if substeps > 1:
                logger.debug(f"Step {s} used {substeps} sub-steps")
            if s % save_every == 0 or s == n_steps:
                steps.append(s)
                for population in system.populations:
                    snapshots[population.name].append(population.density)
                distances.extend(self._distance_records(system, s, integrator.time_at(s)))

        logger.info(f"Mean-field scenario '{config.name}' finished")
        steps = np.array(steps)
        return MeanFieldResult(
            steps=steps,
            times=np.array([integrator.time_at(int(s)) for s in steps]),
            centers=system.populations[0].density.centers,
            densities=snapshots,
            distances=distances,
            boundary_outflow=boundary_outflow,
        )

    def _fields(
        self, system: MeanFieldSystem, t: float, weights: np.ndarray
    ) -> list[VelocityField]:
        indices = range(len(system.populations))
        workers = min(self.worker_count, len(system.populations))
        if workers <= 1:
            return [self.velocity_field(system, k, t, weights) for k in indices]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda k: self.velocity_field(system, k, t, weights), indices))

    def _with_masses(self, system: MeanFieldSystem, masses: list[np.ndarray]) -> MeanFieldSystem:
        return system.with_populations(
            p.with_density(GridDensity.from_masses(m))
            for p, m in zip(system.populations, masses)
        )

    def _distance_records(self, system: MeanFieldSystem, step: int, t: float) -> list[DistanceRecord]:
        matrix = self.population_distances(system)
        names = system.names
        return [
            DistanceRecord(step, t, system.partition, names[k], names[r], float(matrix[k, r]))
            for k in range(len(names))
            for r in range(k + 1, len(names))
        ]

    # ------------------------------------------------------------------
    # Characteristics oracle
    # ------------------------------------------------------------------

    def characteristics_oracle(
        self,
        config: ScenarioConfig,
        n_particles: int,
        seed: Optional[int] = None,
        sampling: Literal["random", "quantile"] = "random",
    ) -> OracleResult:
        """
        Advect particles drawn from each true initial law by the velocity
        field their own ensemble generates.

        Uses the scenario's integrator method and step. Distances between
        populations are measured on the particle sets. `quantile` sampling
        places particles at midpoint quantiles instead of drawing them.
        """
        if n_particles < MIN_ORACLE_PARTICLES:
            raise ConfigError(
                f"the oracle needs at least {MIN_ORACLE_PARTICLES} particles, got {n_particles}",
                code="oracle-particles",
            )
        seed = config.seed if seed is None else seed
        system = self.build_system(config)
        integrator = config.integrator
        save_every = integrator.save_every or 1
        n_steps = integrator.n_steps

        particles = [
            self._initial_particles(pop.initial, n_particles, sampling, derive_seed(seed, k))
            for k, pop in enumerate(config.populations)
        ]
        frozen = self._particle_distances(particles) if system.mode == "frozen" else None
        history = {name: [EmpiricalDistribution.from_values(p)] for name, p in zip(system.names, particles)}
        times = [0.0]
        logger.info(f"Running characteristics oracle for '{config.name}'")

        for s in range(1, n_steps + 1):
            t = integrator.time_at(s - 1)
            dt = integrator.step_size(s)
            distances = frozen if frozen is not None else self._particle_distances(particles)
            weights = self.population_weights(system, t, distances)

            def derivative(state: list[np.ndarray]) -> list[np.ndarray]:
                return [self._particle_velocity(system, k, state, weights) for k in range(len(state))]

            if integrator.method == "rk4":
                k1 = derivative(particles)
                k2 = derivative([p + 0.5 * dt * v for p, v in zip(particles, k1)])
                k3 = derivative([p + 0.5 * dt * v for p, v in zip(particles, k2)])
                k4 = derivative([p + dt * v for p, v in zip(particles, k3)])
                particles = [
                    p + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
                    for p, a, b, c, d in zip(particles, k1, k2, k3, k4)
                ]
            else:
                particles = [p + dt * v for p, v in zip(particles, derivative(particles))]
            particles = [np.clip(p, -1.0, 1.0) for p in particles]

            if s % save_every == 0 or s == n_steps:
                times.append(integrator.time_at(s))
                for name, p in zip(system.names, particles):
                    history[name].append(EmpiricalDistribution.from_values(p))

        return OracleResult(times=np.array(times), particles=history)

    def _particle_distances(self, particles: list[np.ndarray]) -> np.ndarray:
        n = len(particles)
        distances = np.zeros((n, n))
        for k in range(n):
            for r in range(k + 1, n):
                distances[k, r] = distances[r, k] = self.distribution_service.w1_empirical(
                    particles[k], particles[r]
                )
        return distances

    def _particle_velocity(
        self,
        system: MeanFieldSystem,
        k: int,
        particles: list[np.ndarray],
        weights: np.ndarray,
    ) -> np.ndarray:
        population = system.populations[k]
        x = particles[k]
        eps = np.full(x.size, population.epsilon)
        numerator = np.zeros_like(x)
        denominator = np.zeros_like(x)
        for r, source in enumerate(system.populations):
            coupling = source.mass_fraction * weights[k, r]
            if coupling == 0:
                continue
            y = particles[r]
            local = self.kernel_service.local_matrix(population.kernel, x, y, eps)
            numerator = numerator + coupling * np.mean(local * (y[None, :] - x[:, None]), axis=1)
            denominator = denominator + coupling * np.mean(local, axis=1)
        degenerate = np.flatnonzero(denominator <= settings.psi_tolerance)
        if degenerate.size:
            raise DegenerateDenominatorError(population.name, float(x[degenerate[0]]))
        return population.alpha * numerator / denominator

    def _initial_particles(self, spec, n: int, sampling: str, seed: int) -> np.ndarray:
        if sampling == "quantile":
            return self.distribution_service.quantile_sample(spec, n).samples
        return self.distribution_service.sample_initial(spec, n, seed).samples
