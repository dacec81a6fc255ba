import math

import numpy as np
import pytest

from src.errors import ConfigError, DegenerateNeighborhoodError
from src.models.agent import AgentStates, Partition, PartitionSet
from src.models.kernel import GroupPair, LocalKernelSpec, PopulationKernelSpec
from src.services.micro_engine_service import MicroEngineService, MicroSystem, derive_seed


def make_states(opinions, alpha=1.0, eps=2.0, groups=None, scope=None):
    opinions = np.asarray(opinions, dtype=float)
    n = opinions.size
    groups = np.zeros(n, dtype=int) if groups is None else np.asarray(groups)
    names = tuple(f"p{k + 1}" for k in range(int(groups.max()) + 1))
    return AgentStates(
        opinions=opinions,
        stubbornness=np.full(n, alpha),
        confidence=np.full(n, eps),
        pop_threshold=np.full(n, np.nan),
        scope=np.full(n, np.inf if scope is None else scope),
        population=groups.copy(),
        groups=groups[:, None],
        population_names=names,
    )


def make_system(states, kernel=None, population_kernel=None, mode="live", weight=1.0, method="euler"):
    partition = Partition(
        name="populations",
        group_names=states.population_names,
        membership=states.groups[:, 0],
        mode=mode,
        weight=weight,
        kernel=population_kernel or PopulationKernelSpec(),
    )
    kernels = (kernel or LocalKernelSpec(),) * len(states.population_names)
    return MicroSystem(partitions=PartitionSet((partition,)), kernels=kernels, method=method)


def drifts(engine, states, system):
    matrices = engine.weights_for_step(states, system, 0.0)
    return [engine.drift(states, matrices, system, i) for i in range(states.size)]


def test_drift_two_agents(micro_engine):
    states = make_states([-0.5, 0.5])
    assert drifts(micro_engine, states, make_system(states)) == pytest.approx([0.5, -0.5], abs=1e-15)


def test_drift_three_agents_bounded_confidence(micro_engine):
    states = make_states([0.0, 0.2, 0.9], eps=0.3)
    values = drifts(micro_engine, states, make_system(states))
    assert values == pytest.approx([0.1, -0.1, 0.0], abs=1e-15)


def test_zero_normalizer_raises(micro_engine):
    states = make_states([0.0, 0.1])
    system = make_system(states, weight=0.0)
    matrices = micro_engine.weights_for_step(states, system, 0.0)
    with pytest.raises(DegenerateNeighborhoodError) as error:
        micro_engine.drift(states, matrices, system, 0, step_index=3)
    assert error.value.agent == 0
    assert error.value.step == 3


def test_identical_groups_weigh_one(micro_engine):
    states = make_states([-0.2, 0.3, -0.2, 0.3], groups=[0, 0, 1, 1])
    partition = make_system(states, population_kernel=PopulationKernelSpec(gamma=2.0)).partitions.partitions[0]
    matrix = micro_engine.recompute_group_weights(states, partition, 0.0)
    assert np.all(matrix.group_weights == 1.0)
    assert matrix.provenance == "recomputed-at-step"


def test_dirac_groups_weight(micro_engine):
    states = make_states([-0.5, -0.5, 0.5, 0.5], groups=[0, 0, 1, 1])
    partition = make_system(states, population_kernel=PopulationKernelSpec(gamma=1.0)).partitions.partitions[0]
    matrix = micro_engine.recompute_group_weights(states, partition, 0.0)
    assert matrix.group_distances[0, 1] == pytest.approx(1.0)
    assert matrix.group_weights[0, 1] == pytest.approx(math.exp(-1.0))
    assert matrix.group_weights[1, 1] == 1.0


def test_scoped_view_hides_far_group(micro_engine):
    states = make_states([0.0, 0.05, 0.9, 0.95], groups=[0, 0, 1, 1], scope=0.2)
    partition = make_system(states).partitions.partitions[0]
    matrix = micro_engine.recompute_group_weights(states, partition, 0.0, scope_owner=0)
    assert matrix.agent_weights.shape == (1, 2)
    assert matrix.agent_weights[0, 0] == 1.0
    assert matrix.agent_weights[0, 1] == 0.0


def test_empty_group_is_rejected(micro_engine):
    states = make_states([0.0, 0.1])
    partition = Partition(
        name="cut",
        group_names=("left", "right"),
        membership=np.zeros(2, dtype=int),
        mode="live",
        weight=1.0,
        kernel=PopulationKernelSpec(),
    )
    with pytest.raises(ConfigError) as error:
        micro_engine.group_distances(states, partition)
    assert error.value.code == "empty-group"


def test_frozen_weights_ignore_motion(micro_engine):
    states = make_states([-0.5, 0.5], groups=[0, 1])
    system = make_system(states, mode="frozen", population_kernel=PopulationKernelSpec(gamma=1.0))
    partition = system.partitions.partitions[0]
    frozen = micro_engine.group_distances(states, partition)
    moved = states.with_opinions(np.array([0.0, 0.0]))
    matrix = micro_engine.recompute_group_weights(moved, partition, 0.0, "frozen", frozen_distances=frozen)
    assert matrix.provenance == "frozen-at-t0"
    assert matrix.group_weights[0, 1] == pytest.approx(math.exp(-1.0))


def test_zero_stubbornness_keeps_opinions(micro_engine):
    states = make_states(np.linspace(-0.9, 0.9, 10), alpha=0.0)
    for method in ("euler", "rk4"):
        updated = micro_engine.step(states, make_system(states, method=method), 0.0, 0.1)
        assert np.array_equal(updated.opinions, states.opinions)


def test_full_connectivity_preserves_mean(micro_engine):
    rng = np.random.default_rng(0)
    states = make_states(rng.uniform(-1.0, 1.0, 40), alpha=0.3)
    updated = micro_engine.step(states, make_system(states), 0.0, 0.1)
    assert np.mean(updated.opinions) == pytest.approx(np.mean(states.opinions), abs=1e-12)


def test_disjoint_agents_stay_put(micro_engine):
    states = make_states([-0.5, 0.5], eps=0.4)
    updated = micro_engine.step(states, make_system(states), 0.0, 0.1)
    assert np.array_equal(updated.opinions, states.opinions)


def test_step_rejects_nonpositive_dt(micro_engine):
    states = make_states([0.0, 0.1])
    with pytest.raises(ConfigError):
        micro_engine.step(states, make_system(states), 0.0, 0.0)


def test_step_matches_reference_update(micro_engine):
    rng = np.random.default_rng(7)
    x = rng.uniform(-1.0, 1.0, 12)
    states = make_states(x, alpha=0.4, eps=0.5)
    updated = micro_engine.step(states, make_system(states), 0.0, 0.05)
    weights = (np.abs(x[None, :] - x[:, None]) <= 0.5).astype(float)
    expected = x + 0.05 * 0.4 * np.sum(weights * (x[None, :] - x[:, None]), axis=1) / np.sum(weights, axis=1)
    assert np.allclose(updated.opinions, expected, atol=1e-15)


def test_rk4_two_agents(micro_engine):
    states = make_states([-0.5, 0.5], alpha=1.0)
    updated = micro_engine.step(states, make_system(states, method="rk4"), 0.0, 0.1)
    # gap shrinks as exp(-t)
    assert updated.opinions[1] - updated.opinions[0] == pytest.approx(math.exp(-0.1), abs=1e-6)


def test_asymmetric_influence(micro_engine):
    states = make_states([-0.3, -0.1, 0.1, 0.3], groups=[0, 0, 1, 1])
    spec = PopulationKernelSpec(gamma=0.0, asymmetry_mask=[GroupPair(receiver="p2", source="p1")])
    system = make_system(states, mode="frozen", population_kernel=spec)
    system.frozen_distances["populations"] = micro_engine.group_distances(
        states, system.partitions.partitions[0]
    )
    assert drifts(micro_engine, states, system) == pytest.approx([0.1, -0.1, -0.1, -0.3], abs=1e-15)


def test_derive_seed_is_stable():
    assert derive_seed(7, 1) == derive_seed(7, 1)
    assert derive_seed(7, 1) != derive_seed(7, 2)


def test_single_agent_is_constant(micro_engine, build_scenario, make_population):
    config = build_scenario([make_population(size=1)])
    trajectory = micro_engine.run(config).trajectory
    assert np.all(trajectory.opinions == trajectory.opinions[0, 0])


def test_full_connectivity_closed_form(micro_engine, build_scenario, make_population):
    config = build_scenario(
        [make_population(size=50, alpha=0.1, epsilon=2.0)],
        integrator={"method": "euler", "dt": 1e-3, "T": 10.0, "save_every": 10_000},
    )
    trajectory = micro_engine.run(config).trajectory
    x0 = trajectory.opinions[0]
    expected = x0.mean() + (x0 - x0.mean()) * math.exp(-0.1 * 10.0)
    assert trajectory.times[-1] == pytest.approx(10.0)
    assert np.max(np.abs(trajectory.final - expected)) <= 1e-4


def random_family(rng, build_scenario, make_population, kind, T):
    """Random micro scenario mixing mode, scope, a second partition and the integrator."""
    n_populations = int(rng.integers(1, 4))
    scoped = rng.uniform() < 0.3
    populations = []
    for k in range(n_populations):
        epsilon = float(rng.uniform(0.1, 1.0))
        extra = {"scope": epsilon + float(rng.uniform(0.0, 0.5))} if scoped else {}
        populations.append(
            make_population(
                name=f"p{k}",
                size=int(rng.integers(1, 100 // n_populations + 1)),
                alpha=float(rng.uniform(0.0, 1.0)),
                epsilon=epsilon,
                **extra,
            )
        )
    mode = "live" if scoped else str(rng.choice(["live", "frozen"]))
    partitions = [{"name": "populations", "mode": mode, "kernel": {"gamma": float(rng.uniform(0.0, 5.0))}}]
    if rng.uniform() < 0.5:
        weight = float(rng.uniform(0.0, 1.0))
        partitions[0]["weight"] = weight
        partitions.append(
            {
                "name": "camp",
                "kind": "explicit",
                "mode": str(rng.choice(["live", "frozen"])),
                "weight": 1.0 - weight,
                "assignment": {p["name"]: str(rng.choice(["a", "b"])) for p in populations},
                "kernel": {"gamma": float(rng.uniform(0.0, 5.0))},
            }
        )
    method = str(rng.choice(["euler", "rk4"]))
    return build_scenario(
        populations,
        local_kernel={"kind": kind, "gamma": 2.0},
        partitions=partitions,
        seed=int(rng.integers(0, 1000)),
        integrator={"method": method, "dt": 0.05, "T": T, "save_every": 1},
    )


def assert_confined(trajectory, method):
    opinions = trajectory.opinions
    assert np.all(opinions >= -1.0) and np.all(opinions <= 1.0)
    if method == "euler":
        assert np.all(np.diff(opinions.min(axis=1)) >= -1e-12)
        assert np.all(np.diff(opinions.max(axis=1)) <= 1e-12)


@pytest.mark.parametrize("kind", ["uniform", "triangular", "exp", "state_exp"])
def test_convex_hull_shrinks(micro_engine, build_scenario, make_population, kind):
    rng = np.random.default_rng(len(kind))
    for _ in range(5):
        config = random_family(rng, build_scenario, make_population, kind, T=5.0)
        assert_confined(micro_engine.run(config).trajectory, config.integrator.method)


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["uniform", "triangular", "exp", "state_exp"])
def test_confinement_over_many_scenarios(micro_engine, build_scenario, make_population, kind):
    rng = np.random.default_rng(100 + len(kind))
    for _ in range(50):
        config = random_family(rng, build_scenario, make_population, kind, T=20.0)
        trajectory = micro_engine.run(config).trajectory
        assert trajectory.times[-1] == 20.0
        assert_confined(trajectory, config.integrator.method)


def test_scoped_run(micro_engine, build_scenario, make_population):
    def run(scope):
        extra = {} if scope is None else {"scope": scope}
        config = build_scenario(
            [
                make_population("p1", size=30, initial={"kind": "uniform", "a": -1.0, "b": -0.2}, **extra),
                make_population("p2", size=30, initial={"kind": "uniform", "a": 0.2, "b": 1.0}, **extra),
            ],
            partitions=[{"name": "populations", "kernel": {"gamma": 5.0}}],
            seed=8,
        )
        return micro_engine.run(config).trajectory.opinions

    unscoped = run(None)
    # a window as wide as the domain sees every agent
    assert np.allclose(run(2.0), unscoped, atol=1e-12)
    scoped = run(0.5)
    assert not np.allclose(scoped, unscoped)
    assert np.all(np.abs(scoped) <= 1.0)


def test_horizon_shorter_than_step(micro_engine, build_scenario, make_population):
    config = build_scenario([make_population()], integrator={"T": 0.02})
    trajectory = micro_engine.run(config).trajectory
    assert trajectory.steps.tolist() == [0, 1]
    assert trajectory.times.tolist() == [0.0, 0.02]
    assert not np.array_equal(trajectory.opinions[0], trajectory.opinions[1])


def test_horizon_off_the_step_grid(micro_engine, build_scenario, make_population):
    config = build_scenario(
        [make_population(size=40, alpha=0.1, epsilon=2.0)],
        integrator={"method": "euler", "dt": 0.05, "T": 1.08, "save_every": 100},
    )
    trajectory = micro_engine.run(config).trajectory
    assert trajectory.steps.tolist() == [0, 22]
    assert trajectory.times[-1] == 1.08
    x0 = trajectory.opinions[0]
    # 21 full steps and a final step of 0.03
    factor = (1 - 0.1 * 0.05) ** 21 * (1 - 0.1 * 0.03)
    expected = x0.mean() + (x0 - x0.mean()) * factor
    assert np.max(np.abs(trajectory.final - expected)) <= 1e-12


def test_runs_are_thread_independent(build_scenario, make_population):
    config = build_scenario(
        [make_population("p1", size=60), make_population("p2", size=45, epsilon=0.3)],
        partitions=[{"name": "populations", "kernel": {"gamma": 2.0}}],
        seed=3,
    )
    serial = MicroEngineService(threads=1).run(config).trajectory
    parallel = MicroEngineService(threads=4).run(config).trajectory
    assert np.array_equal(serial.opinions, parallel.opinions)


def test_zero_weight_partition_is_exact(micro_engine, build_scenario, make_population):
    populations = [make_population("p1", size=30), make_population("p2", size=30)]
    affiliation = {"name": "affiliation", "mode": "frozen", "kernel": {"gamma": 3.0}}
    single = build_scenario(populations, partitions=[affiliation], seed=5)
    mixed = build_scenario(
        populations,
        partitions=[
            {**affiliation, "weight": 1.0},
            {"name": "ideology", "kind": "opinion_cut", "cuts": [0.0], "groups": ["left", "right"],
             "weight": 0.0, "kernel": {"gamma": 10.0}},
        ],
        seed=5,
    )
    assert np.array_equal(
        micro_engine.run(single).trajectory.opinions,
        micro_engine.run(mixed).trajectory.opinions,
    )


def test_opinion_cut_membership(micro_engine, build_scenario, make_population):
    config = build_scenario(
        [
            make_population("p1", size=5, initial={"kind": "dirac", "x": 0.0}),
            make_population("p2", size=4, initial={"kind": "dirac", "x": 0.5}),
        ],
        partitions=[{"name": "side", "kind": "opinion_cut", "cuts": [0.0], "groups": ["left", "right"]}],
    )
    states = micro_engine.build_states(config)
    assert states.groups[:, 0].tolist() == [0] * 5 + [1] * 4


def test_explicit_membership(micro_engine, build_scenario, make_population):
    config = build_scenario(
        [make_population("p1", size=3), make_population("p2", size=2), make_population("p3", size=2)],
        partitions=[{"name": "camp", "kind": "explicit",
                     "assignment": {"p1": "a", "p2": "b", "p3": "a"}}],
    )
    states = micro_engine.build_states(config)
    assert states.size == 7
    assert states.groups[:, 0].tolist() == [0, 0, 0, 1, 1, 0, 0]


def test_distance_records(micro_engine, build_scenario, make_population):
    config = build_scenario([make_population("p1"), make_population("p2")])
    result = micro_engine.run(config)
    recorded = result.trajectory.steps.size
    assert len(result.distances) == recorded
    assert {(r.group_a, r.group_b) for r in result.distances} == {("p1", "p2")}


def test_trial_histogram(micro_engine, build_scenario, make_population):
    config = build_scenario([make_population(size=15)], trials=3, histogram_bins=10)
    histogram = micro_engine.run(config).histogram
    assert histogram.trials == 3
    width = histogram.centers[1] - histogram.centers[0]
    totals = histogram.densities["p1"].sum(axis=1) * width
    assert np.allclose(totals, 1.0, atol=1e-12)
