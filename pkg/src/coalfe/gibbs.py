"""Gibbs posterior over coalitions and the collective variational free energy.

All quantities are in nats.  The partition function is evaluated in the log
domain after shifting by the minimum energy, so ``beta * E`` can reach
``1e4`` without overflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import xlogy

from .lattice import LatticeError, ValueTable, _as_table, superset_sums


@dataclass(frozen=True)
class EnergyTable:
    energies: np.ndarray
    n_agents: int = field(init=False)

    def __post_init__(self):
        n, arr = _as_table(self.energies)
        object.__setattr__(self, "energies", arr)
        object.__setattr__(self, "n_agents", n)


@dataclass(frozen=True)
class CoalitionDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 2 or p.size & (p.size - 1):
            raise LatticeError(f"distribution length must be a power of two, got {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n_agents(self) -> int:
        return self.probs.size.bit_length() - 1

    def entropy(self) -> float:
        """Shannon entropy in nats (``0 ln 0 = 0``)."""
        return float(-np.sum(xlogy(self.probs, self.probs)))


@dataclass(frozen=True)
class GibbsPosterior:
    beta: float
    energy: EnergyTable
    log_partition: float
    distribution: CoalitionDistribution
    marginals: np.ndarray

    @property
    def probs(self) -> np.ndarray:
        return self.distribution.probs

    @property
    def free_energy(self) -> float:
        """``-ln Z / beta``, the minimum of the collective free energy."""
        return -self.log_partition / self.beta


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not beta > 0 or not np.isfinite(beta):
        raise ValueError(f"beta must be a positive finite number, got {beta!r}")
    return beta


def gibbs_posterior(E: EnergyTable, beta: float) -> GibbsPosterior:
    """The Gibbs distribution ``P*(C) = exp(-beta E(C)) / Z``.

    Examples
    --------
    >>> g = gibbs_posterior(EnergyTable([0.0, np.log(2.0)]), 1.0)
    >>> np.round(g.probs, 12).tolist()
    [0.666666666667, 0.333333333333]
    """
    beta = _check_beta(beta)
    e_min = float(E.energies.min())
    shifted = -beta * (E.energies - e_min)
    log_sum = float(np.log(np.sum(np.exp(shifted))))
    log_z = -beta * e_min + log_sum
    probs = np.exp(shifted - log_sum)
    probs /= probs.sum()
    dist = CoalitionDistribution(probs)
    return GibbsPosterior(beta, E, log_z, dist, participation_from_probs(dist.probs))


def collective_free_energy(P: CoalitionDistribution, E: EnergyTable, beta: float) -> float:
    """``F(P) = E_P[E] - H(P) / beta``."""
    beta = _check_beta(beta)
    if P.probs.size != E.energies.size:
        raise LatticeError("distribution and energy table cover different lattices")
    return float(P.probs @ E.energies + np.sum(xlogy(P.probs, P.probs)) / beta)


def participation_from_probs(probs: np.ndarray) -> np.ndarray:
    return np.clip(superset_sums(probs), 0.0, 1.0)


def participation_marginals(g: GibbsPosterior) -> np.ndarray:
    """``alpha_i = P*(i in C)`` by exact summation over masks."""
    return participation_from_probs(g.probs)


def energy_from_game(v: ValueTable) -> EnergyTable:
    """Energy representation ``E(C) = -v(C)`` of a cooperative game."""
    return EnergyTable(-v.values)


@dataclass
class OptimalityReport:
    n_trials: int
    min_gap: float
    violations: list = field(default_factory=list)
    reference_free_energy: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_gibbs_optimality(
    E: EnergyTable,
    beta: float,
    n_trials: int = 1000,
    seed: Optional[int] = None,
    slack: float = 1e-12,
    max_shift: float = 0.1,
) -> OptimalityReport:
    """Check that no perturbed distribution beats the Gibbs posterior.

    Trials alternate between Dirichlet resamples (some mixed back toward
    ``P*`` so that near-optimal candidates are covered) and pairwise mass
    shifts of at most ``max_shift``.  Any trial with
    ``F(trial) < F(P*) - slack`` is recorded as a violation together with the
    offending distribution.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    g = gibbs_posterior(E, beta)
    f_star = collective_free_energy(g.distribution, E, beta)
    rng = np.random.default_rng(seed)
    p_star = g.probs
    size = p_star.size
    report = OptimalityReport(n_trials=n_trials, min_gap=np.inf, reference_free_energy=f_star)

    for t in range(n_trials):
        if t % 2 == 0:
            trial = rng.dirichlet(np.ones(size))
            if t % 4 == 2:
                mix = 10.0 ** rng.uniform(-6, 0)
                trial = (1 - mix) * p_star + mix * trial
        else:
            trial = p_star.copy()
            src, dst = rng.choice(size, size=2, replace=False)
            delta = min(trial[src], rng.uniform(0, max_shift))
            trial[src] -= delta
            trial[dst] += delta
        trial = np.clip(trial, 0.0, None)
        trial /= trial.sum()
        f_trial = collective_free_energy(CoalitionDistribution(trial), E, beta)
        gap = f_trial - f_star
        report.min_gap = min(report.min_gap, gap)
        if gap < -slack:
            report.violations.append((gap, trial))
    return report
