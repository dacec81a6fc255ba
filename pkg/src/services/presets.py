"""
Named scenario presets.

Each preset is a family of variants; `name:variant` selects one and a bare
name selects the default variant. Builders return plain documents so they
go through the same validation as hand-written scenario files.
"""

from dataclasses import dataclass
from typing import Any, Callable

Document = dict[str, Any]

FIGURE_HORIZON = 20.0
FIGURE_DT = 0.05
FIGURE_SAVE_EVERY = 20


@dataclass(frozen=True)
class Preset:
    description: str
    default: str
    variants: dict[str, Callable[[], Document]]


def _uniform(a: float = -1.0, b: float = 1.0) -> Document:
    return {"kind": "uniform", "a": a, "b": b}


def _gaussian(mean: float, std: float) -> Document:
    return {"kind": "truncated_gaussian", "mean": mean, "std": std, "lo": -1.0, "hi": 1.0}


def _population(name: str, size: int, initial: Document, alpha: float, epsilon: float, **extra) -> Document:
    return {"name": name, "size": size, "initial": initial, "alpha": alpha, "epsilon": epsilon, **extra}


def _integrator(T: float = FIGURE_HORIZON, save_every: int = FIGURE_SAVE_EVERY) -> Document:
    return {"method": "euler", "dt": FIGURE_DT, "T": T, "save_every": save_every}


def _partition(name: str = "populations", mode: str = "frozen", **kernel) -> Document:
    return {"name": name, "kind": "populations", "mode": mode, "weight": 1.0, "kernel": kernel}


def _pair(receiver: str, source: str, symmetric: bool = False, **kernel) -> Document:
    return {"receiver": receiver, "source": source, "symmetric": symmetric, "kernel": kernel}


# ----------------------------------------------------------------------
# Single-population local kernels
# ----------------------------------------------------------------------

def _basic_kernels(kernel: Document) -> Callable[[], Document]:
    def build() -> Document:
        return {
            "name": "basic-kernels",
            "description": "Uniform initial opinions under different local kernels",
            "populations": [_population("all", 500, _uniform(), 0.1, 0.6)],
            "local_kernel": kernel,
            "integrator": _integrator(),
        }
    return build


def _resistance() -> Document:
    return {
        "name": "resistance",
        "description": "State-dependent kernel: extreme opinions resist change",
        "populations": [_population("all", 300, _uniform(), 0.1, 0.6)],
        "local_kernel": {"kind": "state_exp", "alpha": 1.0, "gamma_fn": {"scale": 10.0, "power": 1.0}},
        "integrator": _integrator(),
        "trials": 50,
    }


# ----------------------------------------------------------------------
# Two-population bias examples
# ----------------------------------------------------------------------

def _in_group_bias(gamma: float) -> Callable[[], Document]:
    def build() -> Document:
        return {
            "name": "in-group-bias",
            "description": "Identity-invariant in-group favoritism between two groups",
            "populations": [
                _population("p1", 200, _gaussian(-0.25, 0.15), 0.5, 0.6),
                _population("p2", 200, _gaussian(0.25, 0.15), 0.5, 0.6),
            ],
            "partitions": [_partition(gamma=gamma)],
            "local_kernel": {"kind": "uniform"},
            "integrator": _integrator(),
        }
    return build


def _asymmetric_bias(gamma: float, coupled: bool = True) -> Callable[[], Document]:
    def build() -> Document:
        # p2 listens to p1; p1 never listens to p2
        mask = [{"receiver": "p2", "source": "p1"}] if coupled else []
        return {
            "name": "asymmetric-bias",
            "description": "One-directional group bias: p1 influences p2 only",
            "populations": [
                _population("p1", 200, _gaussian(-0.3, 0.15), 0.5, 0.6),
                _population("p2", 200, _gaussian(0.3, 0.15), 0.5, 0.6),
            ],
            "partitions": [_partition(gamma=gamma, asymmetry_mask=mask)],
            "local_kernel": {"kind": "uniform"},
            "integrator": _integrator(),
        }
    return build


def _group_cohesion(gamma: float) -> Callable[[], Document]:
    def build() -> Document:
        return {
            "name": "group-cohesion",
            "description": "Time-varying group cohesion under an exponential local kernel",
            "populations": [
                _population("p1", 200, _gaussian(-0.5, 0.15), 0.4, 0.4),
                _population("p2", 200, _gaussian(0.5, 0.15), 0.4, 0.4),
            ],
            "partitions": [_partition(mode="live", gamma=gamma, threshold_mode="above", sigma=1.2)],
            "local_kernel": {"kind": "exp", "gamma": 2.0, "alpha": 2.0},
            "integrator": _integrator(),
        }
    return build


def _far_apart(mean: float) -> Document:
    return {
        "kind": "mixture",
        "components": [
            {"weight": 0.1, "spec": _uniform(-0.1, 0.1)},
            {"weight": 0.9, "spec": _gaussian(mean, 0.1)},
        ],
    }


def _isolated_vs_integrated(engine: str) -> Callable[[], Document]:
    def build() -> Document:
        return {
            "name": "isolated-vs-integrated",
            "description": "Close small samples of far-apart populations: isolated vs integrated model",
            "engine": engine,
            "populations": [
                _population("p1", 100, _far_apart(-0.7), 0.5, 0.5, empirical=_uniform(-0.2, 0.0)),
                _population("p2", 100, _far_apart(0.7), 0.5, 0.5, empirical=_uniform(0.0, 0.2)),
            ],
            "partitions": [_partition(mode="live", threshold_mode="above", sigma=0.5)],
            "local_kernel": {"kind": "uniform"},
            "integrator": _integrator(),
            "grid": {"n_cells": 256},
        }
    return build


# ----------------------------------------------------------------------
# Three-population case studies
# ----------------------------------------------------------------------

def _decaying_effects(decay_rate: float) -> Callable[[], Document]:
    def build() -> Document:
        decay = {"kind": "linear", "initial": 0.5, "rate": decay_rate}
        return {
            "name": "decaying-effects",
            "description": "Neutral population reverts to its identity as the event's effect decays",
            "populations": [
                _population("p1", 134, _gaussian(-0.6, 0.1), 0.5, 0.5),
                _population("p2", 133, _gaussian(0.6, 0.1), 0.5, 0.5),
                _population("p3", 133, _uniform(-0.5, 0.5), 0.5, 0.5),
            ],
            "partitions": [
                {
                    **_partition(threshold_mode="above", sigma=0.3),
                    "pairs": [
                        _pair("p3", "p1", decay=decay),
                        _pair("p3", "p2", decay=decay),
                    ],
                }
            ],
            "local_kernel": {"kind": "uniform"},
            "integrator": _integrator(),
        }
    return build


def _polarization_reduction(variant: str) -> Callable[[], Document]:
    def build() -> Document:
        populations = [
            _population("p1", 150, _gaussian(-0.5, 0.1), 0.5, 0.6),
            _population("p2", 150, _gaussian(0.5, 0.1), 0.5, 0.6),
        ]
        pairs = []
        if variant != "baseline":
            populations.append(_population("p3", 100, _uniform(-0.3, 0.3), 0.0, 0.6, stubborn=True))
            transfer = {"gamma": 0.0}
            if variant == "threshold-below":
                transfer = {"gamma": 0.0, "threshold_mode": "below", "sigma": 0.3}
            pairs = [_pair("p1", "p3", symmetric=True, **transfer), _pair("p2", "p3", symmetric=True, **transfer)]
        return {
            "name": "polarization-reduction",
            "description": "A stubborn transfer population exposes two biased populations to each other",
            "populations": populations,
            "partitions": [
                {**_partition(mode="live", threshold_mode="above", sigma=0.1), "pairs": pairs}
            ],
            "local_kernel": {"kind": "uniform"},
            "integrator": _integrator(),
        }
    return build


def _multi_identity(gamma: float) -> Callable[[], Document]:
    def build() -> Document:
        kernel = {"gamma": 10.0, "threshold_mode": "above", "sigma": 0.2}
        return {
            "name": "multi-identity-dominance",
            "description": "Affiliation and ideology partitions mixed with weight gamma on ideology",
            "populations": [
                _population("narrow", 200, _gaussian(0.0, 0.15), 0.5, 0.5),
                _population("wide", 200, _uniform(), 0.5, 0.5),
            ],
            "partitions": [
                {**_partition("affiliation", **kernel), "weight": round(1.0 - gamma, 12)},
                {
                    "name": "ideology",
                    "kind": "opinion_cut",
                    "mode": "frozen",
                    "weight": gamma,
                    "kernel": kernel,
                    "cuts": [0.0],
                    "groups": ["left", "right"],
                },
            ],
            "local_kernel": {"kind": "uniform"},
            "integrator": _integrator(),
        }
    return build


def _smoke() -> Document:
    return {
        "name": "smoke",
        "description": "Small single-population mean-field run backing solver checks",
        "engine": "meanfield",
        "populations": [_population("all", 200, _gaussian(0.1, 0.3), 0.4, 2.0)],
        "local_kernel": {"kind": "exp", "gamma": 2.0, "alpha": 2.0},
        "integrator": {"method": "euler", "dt": 0.05, "T": 5.0, "save_every": 10},
        "grid": {"n_cells": 64},
    }


CATALOGUE: dict[str, Preset] = {
    "basic-kernels": Preset(
        "Local kernel shapes on a uniform population",
        "uniform",
        {
            "uniform": _basic_kernels({"kind": "uniform"}),
            "triangular": _basic_kernels({"kind": "triangular"}),
            "exp": _basic_kernels({"kind": "exp", "gamma": 1.0, "alpha": 2.0}),
            "exp-gamma5": _basic_kernels({"kind": "exp", "gamma": 5.0, "alpha": 2.0}),
            "exp-gamma20": _basic_kernels({"kind": "exp", "gamma": 20.0, "alpha": 2.0}),
        },
    ),
    "resistance": Preset("Resistance in extreme opinion regions", "default", {"default": _resistance}),
    "in-group-bias": Preset(
        "In-group favoritism",
        "strong",
        {"none": _in_group_bias(0.0), "moderate": _in_group_bias(5.0), "strong": _in_group_bias(50.0)},
    ),
    "asymmetric-bias": Preset(
        "Asymmetric group bias",
        "strong",
        {
            "decoupled": _asymmetric_bias(0.5, coupled=False),
            "moderate": _asymmetric_bias(2.0),
            "strong": _asymmetric_bias(0.5),
        },
    ),
    "group-cohesion": Preset(
        "Group cohesion",
        "moderate",
        {"weak": _group_cohesion(0.0), "moderate": _group_cohesion(3.0), "strong": _group_cohesion(20.0)},
    ),
    "isolated-vs-integrated": Preset(
        "Isolated and integrated populations",
        "isolated",
        {"isolated": _isolated_vs_integrated("micro"), "integrated": _isolated_vs_integrated("meanfield")},
    ),
    "decaying-effects": Preset(
        "Decaying effects",
        "decay",
        {"decay": _decaying_effects(2.0), "no-decay": _decaying_effects(0.0)},
    ),
    "polarization-reduction": Preset(
        "Reducing polarization through a transfer population",
        "transfer",
        {
            "baseline": _polarization_reduction("baseline"),
            "transfer": _polarization_reduction("transfer"),
            "threshold-below": _polarization_reduction("threshold-below"),
        },
    ),
    "multi-identity-dominance": Preset(
        "Group-identity dominance",
        "g0.5",
        {"g0.1": _multi_identity(0.1), "g0.5": _multi_identity(0.5), "g0.9": _multi_identity(0.9)},
    ),
    "smoke": Preset("Mean-field smoke scenario", "default", {"default": _smoke}),
}
