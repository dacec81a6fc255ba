"""Service for the agent-level (micro) opinion dynamics engine."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from loguru import logger

from src.config import settings
from src.errors import ConfigError, DegenerateNeighborhoodError
from src.models.agent import (
    AgentStates,
    GroupWeightMatrix,
    Partition,
    PartitionMode,
    PartitionSet,
)
from src.models.kernel import LocalKernelSpec
from src.models.results import DensityHistogram, DistanceRecord, MicroRunResult, Trajectory
from src.models.scenario import PartitionConfig, ScenarioConfig

DEFAULT_PARTITION = PartitionConfig(name="populations")


@dataclass
class MicroSystem:
    """Scenario compiled against a concrete agent set."""

    partitions: PartitionSet
    kernels: tuple[LocalKernelSpec, ...]  # one per population
    method: str = "euler"
    frozen_distances: dict[str, np.ndarray] = field(default_factory=dict)


def derive_seed(seed: int, *path: int) -> int:
    """Independent child seed for a population or trial."""
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


class MicroEngineService:
    """Service for the agent-level (micro) opinion dynamics engine."""

    def __init__(self, threads: Optional[int] = None):
        """Initialize the engine."""
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

    def build_states(self, config: ScenarioConfig, seed: Optional[int] = None) -> AgentStates:
        """Sample every population and assemble the agent arrays."""
        seed = config.seed if seed is None else seed
        opinions, alpha, eps, sigma, scope, population = [], [], [], [], [], []
        for k, pop in enumerate(config.populations):
            sample = self.distribution_service.sample_initial(
                pop.sample_spec, pop.size, derive_seed(seed, k)
            )
            n = sample.size
            opinions.append(sample.samples)
            alpha.append(np.full(n, pop.effective_alpha))
            eps.append(np.full(n, pop.epsilon))
            sigma.append(np.full(n, np.nan if pop.sigma is None else pop.sigma))
            scope.append(np.full(n, np.inf if pop.scope is None else pop.scope))
            population.append(np.full(n, k, dtype=int))

        x0 = np.concatenate(opinions)
        population = np.concatenate(population)
        partitions = config.partitions or [DEFAULT_PARTITION]
        groups = np.column_stack(
            [self._membership(p, config, population, x0) for p in partitions]
        )
        return AgentStates(
            opinions=x0,
            stubbornness=np.concatenate(alpha),
            confidence=np.concatenate(eps),
            pop_threshold=np.concatenate(sigma),
            scope=np.concatenate(scope),
            population=population,
            groups=groups,
            population_names=tuple(config.population_names),
        )

    def prepare(self, config: ScenarioConfig, states: AgentStates) -> MicroSystem:
        """Compile partitions and kernels; freeze t=0 distances for frozen partitions."""
        partitions = []
        for r, pc in enumerate(config.partitions or [DEFAULT_PARTITION]):
            names = tuple(pc.group_names(config.populations))
            index = {name: q for q, name in enumerate(names)}
            pair_kernels = {}
            for pair in pc.pairs:
                k, q = index[pair.receiver], index[pair.source]
                pair_kernels[(k, q)] = pair.kernel
                if pair.symmetric:
                    pair_kernels[(q, k)] = pair.kernel
            partitions.append(
                Partition(
                    name=pc.name,
                    group_names=names,
                    membership=states.groups[:, r],
                    mode=pc.mode,
                    weight=pc.weight,
                    kernel=pc.kernel,
                    pair_kernels=pair_kernels,
                )
            )
        system = MicroSystem(
            partitions=PartitionSet(tuple(partitions)),
            kernels=tuple(config.kernel_for(p) for p in config.populations),
            method=config.integrator.method,
        )
        for partition in system.partitions:
            if partition.mode == "frozen":
                system.frozen_distances[partition.name] = self.group_distances(states, partition)
        return system

    def _membership(
        self,
        pc: PartitionConfig,
        config: ScenarioConfig,
        population: np.ndarray,
        x0: np.ndarray,
    ) -> np.ndarray:
        names = pc.group_names(config.populations)
        if pc.kind == "populations":
            return population.copy()
        if pc.kind == "explicit":
            lookup = np.array([names.index(pc.assignment[p.name]) for p in config.populations])
            return lookup[population]
        return np.searchsorted(np.asarray(pc.cuts, dtype=float), x0, side="left")

    # ------------------------------------------------------------------
    # Group weights
    # ------------------------------------------------------------------

    def group_distances(self, states: AgentStates, partition: Partition) -> np.ndarray:
        """Global pairwise W1 between the groups of one partition."""
        n_groups = partition.n_groups
        samples = []
        for q in range(n_groups):
            members = partition.members(q)
            if members.size == 0:
                raise ConfigError(
                    f"group '{partition.group_names[q]}' of partition '{partition.name}' is empty",
                    code="empty-group",
                )
            samples.append(self.distribution_service.as_empirical(states.opinions[members]))
        distances = np.zeros((n_groups, n_groups))
        for k in range(n_groups):
            for q in range(k + 1, n_groups):
                distances[k, q] = distances[q, k] = self.distribution_service.w1_empirical(
                    samples[k], samples[q]
                )
        return distances

    def recompute_group_weights(
        self,
        states: AgentStates,
        partition: Partition,
        t: float,
        mode: PartitionMode = "live",
        scope_owner: Optional[int] = None,
        frozen_distances: Optional[np.ndarray] = None,
    ) -> GroupWeightMatrix:
        """
        Build the population kernel values of one partition.

        Live mode measures W1 on the current opinions, restricted to each
        agent's scope window when scopes are bounded. Frozen mode reuses the
        distances measured at t=0. With `scope_owner` the matrix holds a
        single row: the scoped view of that agent.
        """
        if mode == "frozen":
            distances = frozen_distances
            if distances is None:
                distances = self.group_distances(states, partition)
            provenance = "frozen-at-t0"
        else:
            distances = self.group_distances(states, partition) if scope_owner is None else None
            provenance = "recomputed-at-step"

        rows = np.arange(states.size) if scope_owner is None else np.array([scope_owner])
        membership = partition.membership[rows]
        if mode == "live" and (scope_owner is not None or states.scoped):
            agent_distances = self._scoped_distances(states, partition, rows, distances)
        else:
            agent_distances = distances[membership]
        if distances is None:
            distances = np.full((partition.n_groups, partition.n_groups), np.nan)

        weights = np.zeros_like(agent_distances)
        for k in range(partition.n_groups):
            local = np.flatnonzero(membership == k)
            if local.size == 0:
                continue
            sigma = states.pop_threshold[rows[local]]
            for q in range(partition.n_groups):
                spec = partition.kernel_for(k, q)
                allowed = spec.allows(partition.group_names[k], partition.group_names[q])
                weights[local, q] = self.kernel_service.population_weights(
                    spec, agent_distances[local, q], t, k == q, sigma, allowed
                )

        return GroupWeightMatrix(
            partition=partition.name,
            group_names=partition.group_names,
            group_distances=distances,
            agent_distances=agent_distances,
            agent_weights=weights,
            membership=membership,
            provenance=provenance,
        )

    def _scoped_distances(
        self,
        states: AgentStates,
        partition: Partition,
        rows: np.ndarray,
        global_distances: Optional[np.ndarray],
    ) -> np.ndarray:
        """W1 between each owner's in-scope own group and every in-scope group."""
        x = states.opinions
        sorted_groups = [np.sort(x[partition.members(q)]) for q in range(partition.n_groups)]
        result = np.empty((rows.size, partition.n_groups))
        for row, i in enumerate(rows):
            own = partition.membership[i]
            if np.isinf(states.scope[i]) and global_distances is not None:
                result[row] = global_distances[own]
                continue
            lo, hi = x[i] - states.scope[i], x[i] + states.scope[i]
            windows = [
                g[np.searchsorted(g, lo, side="left"):np.searchsorted(g, hi, side="right")]
                for g in sorted_groups
            ]
            for q, window in enumerate(windows):
                if q == own:
                    result[row, q] = 0.0
                elif window.size == 0:
                    result[row, q] = np.inf
                else:
                    result[row, q] = self.distribution_service.w1_empirical(windows[own], window)
        return result

    def weights_for_step(
        self, states: AgentStates, system: MicroSystem, t: float
    ) -> list[GroupWeightMatrix]:
        return [
            self.recompute_group_weights(
                states,
                partition,
                t,
                partition.mode,
                frozen_distances=system.frozen_distances.get(partition.name),
            )
            for partition in system.partitions
        ]

    def pairwise_weights(
        self,
        matrices: list[GroupWeightMatrix],
        partitions: PartitionSet,
        rows: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """Combined weight sum_r gamma_r Q^r for every (receiver, source) pair."""
        combined = None
        for partition, matrix in zip(partitions, matrices):
            block = matrix.agent_weights if rows is None else matrix.agent_weights[rows]
            term = partition.weight * block[:, partition.membership]
            combined = term if combined is None else combined + term
        return combined

    # ------------------------------------------------------------------
    # Dynamics
    # ------------------------------------------------------------------

    def drift(
        self,
        states: AgentStates,
        matrices: list[GroupWeightMatrix],
        system: MicroSystem,
        i: int,
        step_index: int = 0,
    ) -> float:
        """F_i = alpha_i sum_j (w_ij / Z)(X^j - X^i) for a single agent."""
        rows = np.array([i])
        q_rows = self.pairwise_weights(matrices, system.partitions, rows)
        value = self._drift_rows(states.opinions, states, q_rows, rows, system, step_index)
        return float(value[0])

    def drift_all(
        self,
        x: np.ndarray,
        states: AgentStates,
        pairwise: np.ndarray,
        system: MicroSystem,
        step_index: int = 0,
    ) -> np.ndarray:
        """Drift of every agent at opinions x, split across workers by rows."""
        n = x.size
        workers = min(self.worker_count, n)
        if workers <= 1:
            rows = np.arange(n)
            return self._drift_rows(x, states, pairwise, rows, system, step_index)
        chunks = np.array_split(np.arange(n), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                lambda rows: self._drift_rows(x, states, pairwise[rows], rows, system, step_index),
                chunks,
            )
            return np.concatenate(list(parts))

    def _drift_rows(
        self,
        x: np.ndarray,
        states: AgentStates,
        pairwise_rows: np.ndarray,
        rows: np.ndarray,
        system: MicroSystem,
        step_index: int,
    ) -> np.ndarray:
        local = np.empty((rows.size, x.size))
        row_population = states.population[rows]
        for k, kernel in enumerate(system.kernels):
            selected = np.flatnonzero(row_population == k)
            if selected.size:
                receivers = rows[selected]
                local[selected] = self.kernel_service.local_matrix(
                    kernel, x[receivers], x, states.confidence[receivers]
                )
        weights = pairwise_rows * local
        z = np.sum(weights, axis=1)
        degenerate = np.flatnonzero(z <= 0)
        if degenerate.size:
            raise DegenerateNeighborhoodError(int(rows[degenerate[0]]), step_index)
        pull = np.sum(weights * (x[None, :] - x[rows, None]), axis=1)
        return states.stubbornness[rows] * (pull / z)

    def step(
        self,
        states: AgentStates,
        system: MicroSystem,
        t: float,
        dt: float,
        step_index: int = 0,
    ) -> AgentStates:
        """
        Advance one step of size dt.

        Group weights are computed once from the pre-step snapshot; Euler or
        RK4 then integrates the drift and the result is clamped to [-1, 1].
        """
        if dt <= 0:
            raise ConfigError(f"dt must be positive, got {dt}", code="step-positive")
        matrices = self.weights_for_step(states, system, t)
        pairwise = self.pairwise_weights(matrices, system.partitions)
        derivative: Callable[[np.ndarray], np.ndarray] = lambda x: self.drift_all(
            x, states, pairwise, system, step_index
        )
        x = states.opinions
        if system.method == "rk4":
            k1 = derivative(x)
            k2 = derivative(x + 0.5 * dt * k1)
            k3 = derivative(x + 0.5 * dt * k2)
            k4 = derivative(x + dt * k3)
            updated = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            updated = x + dt * derivative(x)
        return states.with_opinions(np.clip(updated, -1.0, 1.0))

    # ------------------------------------------------------------------
    # Runs
    # ------------------------------------------------------------------

    def run(self, config: ScenarioConfig, seed: Optional[int] = None) -> MicroRunResult:
        """
        Integrate a validated scenario.

        Returns:
            Trajectory and distance series of the first trial, plus a
            trial-averaged density histogram when trials > 1
        """
        seed = config.seed if seed is None else seed
        logger.info(f"Running micro scenario '{config.name}' ({config.trials} trial(s))")
        trajectory, distances = self.run_trial(config, seed)
        histogram = None
        if config.trials > 1:
            trajectories = [trajectory]
            for trial in range(1, config.trials):
                logger.debug(f"Trial {trial + 1}/{config.trials}")
                trajectories.append(self.run_trial(config, derive_seed(seed, 1_000_003, trial))[0])
            histogram = self.histogram(trajectories, config)
        logger.info(f"Micro scenario '{config.name}' finished")
        return MicroRunResult(trajectory=trajectory, distances=distances, histogram=histogram)

    def run_trial(
        self, config: ScenarioConfig, seed: int
    ) -> tuple[Trajectory, list[DistanceRecord]]:
        integrator = config.integrator
        save_every = integrator.save_every or 1
        n_steps = integrator.n_steps

        states = self.build_states(config, seed)
        system = self.prepare(config, states)

        steps, snapshots = [0], [states.opinions]
        distances = self.observed_distances(states, system, 0, 0.0)
        for s in range(1, n_steps + 1):
            states = self.step(states, system, integrator.time_at(s - 1), integrator.step_size(s), s)
            if s % save_every == 0 or s == n_steps:
                steps.append(s)
                snapshots.append(states.opinions)
                distances.extend(self.observed_distances(states, system, s, integrator.time_at(s)))

        steps = np.array(steps)
        trajectory = Trajectory(
            steps=steps,
            times=np.array([integrator.time_at(int(s)) for s in steps]),
            opinions=np.vstack(snapshots),
            population=states.population,
            groups=states.groups,
            population_names=states.population_names,
            partition_names=tuple(p.name for p in system.partitions),
            group_names=tuple(p.group_names for p in system.partitions),
        )
        return trajectory, distances

    def observed_distances(
        self, states: AgentStates, system: MicroSystem, step: int, t: float
    ) -> list[DistanceRecord]:
        """Current pairwise group W1 for every partition."""
        records = []
        for partition in system.partitions:
            matrix = self.group_distances(states, partition)
            names = partition.group_names
            for k in range(len(names)):
                for q in range(k + 1, len(names)):
                    records.append(
                        DistanceRecord(step, t, partition.name, names[k], names[q], float(matrix[k, q]))
                    )
        return records

    def histogram(self, trajectories: list[Trajectory], config: ScenarioConfig) -> DensityHistogram:
        """Average per-population opinion histograms over trials."""
        bins = config.histogram_bins or settings.default_histogram_bins
        edges = np.linspace(-1.0, 1.0, bins + 1)
        width = edges[1] - edges[0]
        first = trajectories[0]
        densities = {}
        for k, name in enumerate(first.population_names):
            members = first.population == k
            counts = np.zeros((first.steps.size, bins))
            for trajectory in trajectories:
                for index in range(first.steps.size):
                    counts[index] += np.histogram(trajectory.opinions[index, members], bins=edges)[0]
            densities[name] = counts / (members.sum() * len(trajectories) * width)
        return DensityHistogram(
            steps=first.steps,
            times=first.times,
            centers=0.5 * (edges[:-1] + edges[1:]),
            densities=densities,
            trials=len(trajectories),
        )
