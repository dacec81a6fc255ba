"""Service for evaluating local (agent) and population kernels."""

from typing import Optional

import numpy as np

from src.models.kernel import LocalKernelSpec, PopulationKernelSpec


class KernelService:
    """Service for evaluating local (agent) and population kernels."""

    def eval_local(self, spec: LocalKernelSpec, x_i: float, x_j: float, eps: float) -> float:
        """Kernel weight of x_j as seen by x_i; zero outside the closed eps-ball."""
        value = self.local_matrix(spec, np.array([x_i]), np.array([x_j]), np.array([eps]))
        return float(value[0, 0])

    def local_matrix(
        self,
        spec: LocalKernelSpec,
        receivers: np.ndarray,
        sources: np.ndarray,
        eps: np.ndarray,
    ) -> np.ndarray:
        """
        Vectorized kernel block.

        Args:
            spec: Local kernel
            receivers: Opinions of the receiving agents, shape (R,)
            sources: Opinions of the source agents, shape (C,)
            eps: Confidence radius of each receiver, shape (R,)

        Returns:
            Array of shape (R, C)
        """
        distance = np.abs(sources[None, :] - receivers[:, None])
        inside = distance <= eps[:, None]
        match spec.kind:
            case "uniform":
                value = np.ones_like(distance)
            case "triangular":
                value = eps[:, None] - distance
            case "exp":
                value = np.exp(-spec.gamma * distance**spec.alpha)
            case "state_exp":
                rate = spec.gamma_fn(np.abs(receivers))
                value = np.exp(-rate[:, None] * distance**spec.alpha)
            case _:
                raise ValueError(f"unknown local kernel kind: {spec.kind}")
        return np.where(inside, value, 0.0)

    def eval_population(
        self,
        spec: PopulationKernelSpec,
        w: float,
        t: float,
        same_group: bool,
        sigma: Optional[float] = None,
        pair: Optional[tuple[str, str]] = None,
    ) -> float:
        """
        Population kernel value for two groups at W1 distance w and time t.

        A same-group pair ignores thresholds and the asymmetry mask. A pair
        outside the mask evaluates to 0.
        """
        allowed = pair is None or spec.allows(*pair)
        sigmas = None if sigma is None else np.array([sigma])
        value = self.population_weights(spec, np.array([w]), t, same_group, sigmas, allowed)
        return float(value[0])

    def population_weights(
        self,
        spec: PopulationKernelSpec,
        w: np.ndarray,
        t: float,
        same_group: bool,
        sigma: Optional[np.ndarray] = None,
        allowed: bool = True,
    ) -> np.ndarray:
        """Vectorized eval_population over distances w (infinite distance gives 0)."""
        w = np.asarray(w, dtype=float)
        finite = np.isfinite(w)
        rate = spec.decay_rate(t)
        value = np.where(finite, np.exp(-rate * np.where(finite, w, 0.0)), 0.0)
        if same_group:
            return value
        if not allowed:
            return np.zeros_like(w)
        threshold = self._thresholds(spec, w, sigma)
        if spec.threshold_mode == "above":
            return np.where(w > threshold, 0.0, value)
        if spec.threshold_mode == "below":
            return np.where(w <= threshold, 0.0, value)
        return value

    def _thresholds(
        self, spec: PopulationKernelSpec, w: np.ndarray, sigma: Optional[np.ndarray]
    ) -> np.ndarray:
        default = spec.sigma if spec.sigma is not None else np.nan
        if sigma is None:
            return np.full_like(w, default)
        sigma = np.asarray(sigma, dtype=float)
        return np.where(np.isnan(sigma), default, sigma)
