import math

import numpy as np
import pytest

from src.models.kernel import (
    DecaySchedule,
    GammaFunction,
    GroupPair,
    LocalKernelSpec,
    PopulationKernelSpec,
)


@pytest.mark.parametrize(
    ("spec", "x_i", "x_j", "eps", "expected"),
    [
        (LocalKernelSpec(kind="uniform"), 0.0, 0.3, 0.5, 1.0),
        (LocalKernelSpec(kind="uniform"), 0.0, 0.6, 0.5, 0.0),
        (LocalKernelSpec(kind="uniform"), 0.0, 0.5, 0.5, 1.0),
        (LocalKernelSpec(kind="triangular"), 0.0, 0.2, 0.5, 0.3),
        (LocalKernelSpec(kind="exp", gamma=1.0, alpha=1.0), 0.0, 0.5, 0.6, math.exp(-0.5)),
        (
            LocalKernelSpec(kind="state_exp", alpha=2.0, gamma_fn=GammaFunction(scale=1.0, power=1.0)),
            0.0,
            0.3,
            0.5,
            1.0,
        ),
    ],
)
def test_eval_local_examples(kernel_service, spec, x_i, x_j, eps, expected):
    assert kernel_service.eval_local(spec, x_i, x_j, eps) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("kind", ["uniform", "triangular", "exp"])
def test_symmetric_kernels(kernel_service, kind):
    spec = LocalKernelSpec(kind=kind, gamma=3.0, alpha=1.5)
    rng = np.random.default_rng(0)
    for x_i, x_j in rng.uniform(-1.0, 1.0, (50, 2)):
        assert kernel_service.eval_local(spec, x_i, x_j, 0.8) == kernel_service.eval_local(
            spec, x_j, x_i, 0.8
        )


def test_state_dependent_kernel_is_asymmetric(kernel_service):
    spec = LocalKernelSpec(kind="state_exp", gamma_fn=GammaFunction(scale=10.0, power=1.0))
    assert not spec.symmetric
    centrist = kernel_service.eval_local(spec, 0.0, 0.4, 0.5)
    extremist = kernel_service.eval_local(spec, 0.4, 0.0, 0.5)
    assert centrist == 1.0
    assert extremist == pytest.approx(math.exp(-4.0 * 0.4))


def test_local_matrix_cutoff(kernel_service):
    opinions = np.linspace(-1.0, 1.0, 21)
    eps = np.full(opinions.size, 0.25)
    block = kernel_service.local_matrix(LocalKernelSpec(kind="exp", gamma=2.0), opinions, opinions, eps)
    distance = np.abs(opinions[None, :] - opinions[:, None])
    assert np.all(block[distance > 0.25 + 1e-12] == 0.0)
    assert np.all(np.diag(block) == 1.0)


def test_eval_population_examples(kernel_service):
    spec = PopulationKernelSpec(gamma=2.0)
    assert kernel_service.eval_population(spec, 0.0, 0.0, same_group=False) == 1.0
    assert kernel_service.eval_population(spec, 0.5, 0.0, same_group=False) == pytest.approx(
        math.exp(-1.0)
    )


def test_threshold_modes(kernel_service):
    above = PopulationKernelSpec(gamma=2.0, threshold_mode="above", sigma=0.3)
    below = PopulationKernelSpec(gamma=2.0, threshold_mode="below", sigma=0.3)
    assert kernel_service.eval_population(above, 0.5, 0.0, same_group=False) == 0.0
    assert kernel_service.eval_population(above, 0.3, 0.0, same_group=False) == pytest.approx(
        math.exp(-0.6)
    )
    assert kernel_service.eval_population(below, 0.1, 0.0, same_group=False) == 0.0
    assert kernel_service.eval_population(below, 0.3, 0.0, same_group=False) == 0.0
    assert kernel_service.eval_population(below, 0.5, 0.0, same_group=False) == pytest.approx(
        math.exp(-1.0)
    )


def test_same_group_ignores_threshold_and_mask(kernel_service):
    spec = PopulationKernelSpec(
        gamma=1.0,
        threshold_mode="below",
        sigma=0.5,
        asymmetry_mask=[GroupPair(receiver="p2", source="p1")],
    )
    assert kernel_service.eval_population(spec, 0.0, 0.0, same_group=True, pair=("p1", "p1")) == 1.0


def test_population_kernel_decreases_with_distance(kernel_service):
    spec = PopulationKernelSpec(gamma=5.0)
    values = kernel_service.population_weights(spec, np.linspace(0.0, 2.0, 41), 0.0, same_group=False)
    assert np.all(np.diff(values) <= 0.0)
    assert values[0] == 1.0


def test_asymmetry_mask(kernel_service):
    spec = PopulationKernelSpec(gamma=1.0, asymmetry_mask=[GroupPair(receiver="p2", source="p1")])
    assert kernel_service.eval_population(spec, 0.4, 0.0, same_group=False, pair=("p1", "p2")) == 0.0
    assert kernel_service.eval_population(
        spec, 0.4, 0.0, same_group=False, pair=("p2", "p1")
    ) == pytest.approx(math.exp(-0.4))


def test_decay_schedule(kernel_service):
    linear = DecaySchedule(kind="linear", initial=0.5, rate=2.0)
    assert linear(1.0) == 2.5
    spec = PopulationKernelSpec(decay=linear)
    values = [kernel_service.eval_population(spec, 0.3, t, same_group=False) for t in (0.0, 1.0, 5.0)]
    assert values[0] == pytest.approx(math.exp(-0.15))
    assert values[0] > values[1] > values[2]
    exponential = DecaySchedule(kind="exponential", initial=0.5, rate=1.0)
    assert exponential(2.0) == pytest.approx(0.5 * math.exp(2.0))


def test_per_agent_threshold_overrides_default(kernel_service):
    spec = PopulationKernelSpec(gamma=1.0, threshold_mode="above", sigma=0.3)
    values = kernel_service.population_weights(
        spec, np.array([0.2, 0.2]), 0.0, same_group=False, sigma=np.array([np.nan, 0.1])
    )
    assert values[0] == pytest.approx(math.exp(-0.2))
    assert values[1] == 0.0


def test_infinite_distance_gives_zero(kernel_service):
    values = kernel_service.population_weights(
        PopulationKernelSpec(gamma=0.0), np.array([np.inf, 0.5]), 0.0, same_group=False
    )
    assert values[0] == 0.0
    assert values[1] == 1.0
