"""Kernel specifications for agent-level and population-level interaction."""

from __future__ import annotations

import math
from typing import Literal, Optional

from pydantic import BaseModel, Field

LocalKernelKind = Literal["uniform", "triangular", "exp", "state_exp"]
ThresholdMode = Literal["none", "above", "below"]


class GammaFunction(BaseModel):
    """Monotone map u -> scale * u**power on [0, 1], zero at the origin."""

    scale: float = Field(default=1.0, ge=0.0)
    power: float = Field(default=1.0, gt=0.0)

    def __call__(self, u):
        return self.scale * u**self.power


class LocalKernelSpec(BaseModel):
    """Agent-level kernel kappa_d with a hard cutoff at the confidence radius."""

    kind: LocalKernelKind = "uniform"
    # decay rate and exponent of the exponential families
    gamma: float = Field(default=1.0, gt=0.0)
    alpha: float = Field(default=1.0, gt=0.0)
    gamma_fn: GammaFunction = Field(default_factory=GammaFunction)

    @property
    def symmetric(self) -> bool:
        return self.kind != "state_exp"


class DecaySchedule(BaseModel):
    """Nondecreasing time profile of the population decay rate Gamma(t)."""

    kind: Literal["linear", "exponential"] = "linear"
    initial: float = Field(gt=0.0)
    rate: float = Field(default=0.0, ge=0.0)

    def __call__(self, t: float) -> float:
        if self.kind == "exponential":
            return self.initial * math.exp(self.rate * t)
        return self.initial + self.rate * t


class GroupPair(BaseModel):
    """Ordered (receiver, source) group pair."""

    receiver: str
    source: str


class PopulationKernelSpec(BaseModel):
    """Population-level kernel K = exp(-Gamma(t) * W1) with an optional threshold."""

    gamma: float = Field(default=0.0, ge=0.0)
    threshold_mode: ThresholdMode = "none"
    sigma: Optional[float] = None
    decay: Optional[DecaySchedule] = None
    # when set, only these (receiver, source) pairs use the kernel
    asymmetry_mask: Optional[list[GroupPair]] = None

    def decay_rate(self, t: float) -> float:
        return self.decay(t) if self.decay is not None else self.gamma

    def allows(self, receiver: str, source: str) -> bool:
        if self.asymmetry_mask is None:
            return True
        return any(p.receiver == receiver and p.source == source for p in self.asymmetry_mask)

    def problems(self) -> list[str]:
        issues = []
        if self.threshold_mode != "none" and (self.sigma is None or self.sigma <= 0):
            issues.append(f"threshold mode '{self.threshold_mode}' needs sigma > 0")
        return issues
