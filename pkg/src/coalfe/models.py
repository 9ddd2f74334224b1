"""Symmetric Gaussian coalition models.

Every agent has a standard normal hidden state observed with precision
``beta``.  The expected coalition value of any ``k`` agents is

    <v>_k = -k/2 ln(2 pi) + 1/2 ln(1 + k beta) - 1/2 - alpha beta**2 k / N,

where the last term penalises over-precise coalitions.  Because agents are
exchangeable, the Shapley influence reduces to ``(<v>_N - <v>_0) / N``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lattice import ValueTable


@dataclass(frozen=True)
class GaussianCoalitionModel:
    n_agents: int
    alpha_penalty: float
    beta: float

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if not self.alpha_penalty >= 0:
            raise ValueError("alpha_penalty must be non-negative")
        if not self.beta >= 0:
            raise ValueError("beta must be non-negative")


def coalition_value(m: GaussianCoalitionModel, k):
    """Expected value ``<v>_k`` of a coalition of ``k`` agents (natural log)."""
    k_arr = np.asarray(k)
    if np.any(k_arr < 0) or np.any(k_arr > m.n_agents):
        raise ValueError(f"coalition size must lie in [0, {m.n_agents}]")
    out = _value(k_arr, m.n_agents, m.alpha_penalty, m.beta)
    return float(out) if out.ndim == 0 else out


def _value(k, n, alpha, beta):
    return -0.5 * k * np.log(2 * np.pi) + 0.5 * np.log1p(k * beta) - 0.5 - alpha * beta**2 * k / n


def symmetric_shapley(m: GaussianCoalitionModel, method: str = "closed") -> float:
    """Shapley influence of one agent.

    ``method="sum"`` averages the ``N`` successive marginal contributions;
    ``method="closed"`` uses the telescoped form.
    """
    if method == "sum":
        v = coalition_value(m, np.arange(m.n_agents + 1))
        return float(np.sum(np.diff(v)) / m.n_agents)
    if method == "closed":
        return float(shapley_curve(m.n_agents, m.alpha_penalty, m.beta))
    raise ValueError(f"unknown method {method!r}")


def shapley_curve(n_agents: int, alpha_penalty: float, betas):
    """Closed-form influence ``eta(beta)``, vectorised over ``betas``."""
    betas = np.asarray(betas, dtype=float)
    n = n_agents
    return (-0.5 * n * np.log(2 * np.pi) + 0.5 * np.log1p(n * betas) - alpha_penalty * betas**2) / n


def analytic_peak(n_agents: int, alpha_penalty: float) -> float:
    """Precision maximising ``eta``: positive root of ``N = 4 alpha beta (1 + N beta)``."""
    if alpha_penalty <= 0:
        raise ValueError("no finite influence peak without an overfitting penalty (alpha_penalty = 0)")
    a, n = alpha_penalty, n_agents
    return (-a + math.sqrt(a * a + a * n * n)) / (2 * a * n)


def value_table(m: GaussianCoalitionModel) -> ValueTable:
    """Lattice embedding ``v(S) = <v>_|S| - <v>_0`` so that ``v(empty) = 0``."""
    sizes = np.arange(m.n_agents + 1)
    v = coalition_value(m, sizes)
    return ValueTable.from_sizes(v - v[0])


@dataclass(frozen=True)
class DomainPreset:
    name: str
    n_agents: int
    alpha_penalty: float
    beta_start: float
    beta_stop: float
    steps: int
    n_runs: int
    noise_sigma: float
    noise_slope: float = 0.0
    seed: int = 42
    reference_beta_star: Optional[float] = None

    def __post_init__(self):
        if self.n_agents < 1 or self.n_runs < 1 or self.steps < 1:
            raise ValueError("n_agents, n_runs and steps must be >= 1")
        if self.steps > 1 and not self.beta_stop > self.beta_start:
            raise ValueError("beta grid must be strictly increasing")
        if self.beta_start < 0 or self.alpha_penalty < 0 or self.noise_sigma < 0:
            raise ValueError("beta, alpha_penalty and noise_sigma must be non-negative")

    @property
    def betas(self) -> np.ndarray:
        return np.linspace(self.beta_start, self.beta_stop, self.steps)

    def noise_std(self, beta):
        """Replicate noise level ``sigma0 * (1 + slope * beta)``."""
        return self.noise_sigma * (1 + self.noise_slope * np.asarray(beta, dtype=float))

    def replace(self, **changes) -> "DomainPreset":
        from dataclasses import replace

        return replace(self, **changes)


PRESETS = {
    "neural": DomainPreset("neural", 50, 0.025, 0.25, 2.0, 35, 50, 0.001, reference_beta_star=0.71),
    "neural_wide": DomainPreset("neural_wide", 50, 0.025, 0.25, 5.0, 40, 50, 0.001, reference_beta_star=0.71),
    "fish": DomainPreset("fish", 30, 0.035, 0.05, 4.0, 18, 80, 0.008, noise_slope=0.5, reference_beta_star=2.70),
    "marl": DomainPreset("marl", 5, 0.0345, 0.2, 5.0, 15, 100, 0.005, reference_beta_star=2.59),
}


@dataclass(frozen=True)
class InfluenceSample:
    beta: float
    run_index: int
    eta: float


def _replicate_noise(seed: int, beta_index: int, n_runs: int) -> np.ndarray:
    # Philox stream per beta index; run r is the r-th draw, so output never
    # depends on which thread handles which beta.
    bits = np.random.Philox(key=seed, counter=[0, beta_index, 0, 0])
    return np.random.Generator(bits).standard_normal(n_runs)


def sample_influence(preset: DomainPreset, threads: int = 1) -> list[InfluenceSample]:
    """Noisy replicate influences for every precision of the preset grid."""
    betas = preset.betas
    clean = shapley_curve(preset.n_agents, preset.alpha_penalty, betas)

    def one(idx):
        sigma = float(preset.noise_std(betas[idx]))
        noise = _replicate_noise(preset.seed, idx, preset.n_runs)
        return [
            InfluenceSample(float(betas[idx]), r, float(clean[idx] + sigma * noise[r]))
            for r in range(preset.n_runs)
        ]

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            chunks = list(pool.map(one, range(betas.size)))
    else:
        chunks = [one(i) for i in range(betas.size)]
    return [s for chunk in chunks for s in chunk]
